from __future__ import annotations

import torch
from torch import nn

from .gaze import GazeNet, GazeNetConfig
from .heatmap import HeatmapNet, HeatmapNetConfig


def fov_maps(directions: torch.Tensor, gaze: torch.Tensor, alpha: float = 3.0):
    """V and V-hat from eye-centred unit directions (B, H, W, 3) and unit gaze (B, 3).

    Zero direction vectors (invalid depth) give V = 0.  Differentiable in ``gaze``.
    """
    v = torch.einsum("bhwc,bc->bhw", directions, gaze).clamp(-1.0, 1.0)
    return v, torch.relu(v) ** alpha


class GazePipeline(nn.Module):
    """Gaze network feeding the field-of-view maps into the heatmap network."""

    def __init__(self, gaze_cfg: GazeNetConfig | None = None, heatmap_cfg: HeatmapNetConfig | None = None,
                 alpha: float = 3.0):
        super().__init__()
        self.gaze_net = GazeNet(gaze_cfg)
        self.heatmap_net = HeatmapNet(heatmap_cfg)
        self.alpha = alpha

    def forward(self, pose, depth, scene, head_mask, directions):
        gaze = self.gaze_net(pose, depth)
        v, v_hat = fov_maps(directions, gaze, self.alpha)
        heatmap = self.heatmap_net(scene, head_mask, v, v_hat)
        return gaze, heatmap
