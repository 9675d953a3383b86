"""Shared miniature configs for the test suite."""

from posegaze.models import BackboneConfig, GazeNetConfig, HeatmapNetConfig
from posegaze.training import StageConfig, TrainConfig, with_overrides

MINI_BACKBONE = BackboneConfig(layers=(1, 1, 1, 1), base_width=4)


def mini_gaze_cfg(**kw) -> GazeNetConfig:
    base = dict(pose_mlp_dims=(8, 8, 8), depth_mlp_dims=(16, 8, 8), attention_heads=2, attention_dim=8,
                attention_ff_dim=16, head_dims=(8, 3), depth_size=32, backbone=MINI_BACKBONE)
    base.update(kw)
    return GazeNetConfig(**base)


def mini_heatmap_cfg(**kw) -> HeatmapNetConfig:
    base = dict(image_size=32, output_size=16, decoder_channels=(8, 8, 4, 4), backbone=MINI_BACKBONE)
    base.update(kw)
    return HeatmapNetConfig(**base)


def fast_train_cfg(*overrides: str) -> TrainConfig:
    """Tiny config with two short epochs per stage, for plumbing tests on 224 px data."""
    cfg = TrainConfig.tiny()
    cfg.gaze_stage = StageConfig(epochs=2, batch_size=4, lr=1e-3)
    cfg.full_stage = StageConfig(epochs=2, batch_size=4, lr=1e-3)
    cfg.augment = False
    if overrides:
        cfg = with_overrides(cfg, list(overrides))
    return cfg
