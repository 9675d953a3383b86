from .checkpoint import (
    CheckpointError,
    config_from_checkpoint,
    load_checkpoint,
    load_gaze_weights,
    pipeline_from_checkpoint,
    save_checkpoint,
)
from .config import ConfigError, StageConfig, TrainConfig, load_config, save_config, with_overrides
from .evaluate import (
    EvaluationResult,
    ModelPredictor,
    OraclePredictor,
    baselines_random_center,
    evaluate,
    evaluate_samples,
)
from .trainer import TrainingDiverged, run_training, train_full, train_gaze_stage

__all__ = [
    "CheckpointError",
    "ConfigError",
    "EvaluationResult",
    "ModelPredictor",
    "OraclePredictor",
    "StageConfig",
    "TrainConfig",
    "TrainingDiverged",
    "baselines_random_center",
    "config_from_checkpoint",
    "evaluate",
    "evaluate_samples",
    "load_checkpoint",
    "load_config",
    "load_gaze_weights",
    "pipeline_from_checkpoint",
    "run_training",
    "save_checkpoint",
    "save_config",
    "train_full",
    "train_gaze_stage",
    "with_overrides",
]
