from .backbone import BackboneConfig, ResNetEncoder
from .gaze import GazeNet, GazeNetConfig, ModelConfigError, ModelInputError, count_parameters
from .heatmap import HeatmapNet, HeatmapNetConfig
from .pipeline import GazePipeline, fov_maps

__all__ = [
    "BackboneConfig",
    "GazeNet",
    "GazeNetConfig",
    "GazePipeline",
    "HeatmapNet",
    "HeatmapNetConfig",
    "ModelConfigError",
    "ModelInputError",
    "ResNetEncoder",
    "count_parameters",
    "fov_maps",
]
