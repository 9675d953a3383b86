"""Gaze direction network: pose MLP + depth encoder fused by one self-attention layer."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn

from .backbone import BackboneConfig, ResNetEncoder

NORM_EPS = 1e-8


class ModelInputError(ValueError):
    pass


class ModelConfigError(ValueError):
    pass


@dataclass
class GazeNetConfig:
    num_joints: int = 13
    pose_mlp_dims: tuple[int, ...] = (64, 128, 256)
    depth_mlp_dims: tuple[int, ...] = (1024, 512, 256)
    attention_heads: int = 4
    attention_dim: int = 256
    attention_ff_dim: int = 2048
    attention_dropout: float = 0.1
    head_dims: tuple[int, ...] = (256, 3)
    dropout: float = 0.5
    depth_size: int = 224
    backbone: BackboneConfig = field(default_factory=BackboneConfig)

    def __post_init__(self):
        if self.attention_dim % self.attention_heads:
            raise ModelConfigError(
                f"attention_dim {self.attention_dim} not divisible by {self.attention_heads} heads"
            )
        if self.head_dims[-1] != 3:
            raise ModelConfigError("gaze head must end in 3 outputs")
        if len(self.head_dims) != 2:
            raise ModelConfigError("gaze head has exactly two linear layers")
        if len(self.pose_mlp_dims) != 3 or len(self.depth_mlp_dims) != 3:
            raise ModelConfigError("pose and depth MLPs have exactly three layers")
        if self.pose_mlp_dims[-1] != self.attention_dim or self.depth_mlp_dims[-1] != self.attention_dim:
            raise ModelConfigError("pose and depth embeddings must both be attention_dim wide")


def _mlp(dims, dropout: float = 0.0) -> nn.Sequential:
    layers: list[nn.Module] = []
    for i in range(len(dims) - 1):
        layers.append(nn.Linear(dims[i], dims[i + 1]))
        if i < len(dims) - 2:
            layers.append(nn.ReLU())
            if dropout > 0:
                layers.append(nn.Dropout(dropout))
    return nn.Sequential(*layers)


class GazeNet(nn.Module):
    """Predicts a unit 3D gaze vector from a normalized pose and a depth map.

    The pose and depth embeddings form a two-token sequence (no positional
    encoding) for a single transformer encoder layer; the two output tokens are
    concatenated and mapped to 3 values by two linear layers.
    """

    def __init__(self, cfg: GazeNetConfig | None = None):
        super().__init__()
        cfg = cfg or GazeNetConfig()
        self.cfg = cfg
        self.pose_mlp = _mlp((cfg.num_joints * 2, *cfg.pose_mlp_dims))
        self.depth_backbone = ResNetEncoder(1, cfg.backbone)
        self.depth_mlp = _mlp((cfg.backbone.out_channels, *cfg.depth_mlp_dims), cfg.dropout)
        self.fusion = nn.TransformerEncoderLayer(
            d_model=cfg.attention_dim,
            nhead=cfg.attention_heads,
            dim_feedforward=cfg.attention_ff_dim,
            dropout=cfg.attention_dropout,
            batch_first=True,
        )
        self.head = nn.Sequential(
            nn.Linear(2 * cfg.attention_dim, cfg.head_dims[0]),
            nn.ReLU(),
            nn.Linear(cfg.head_dims[0], cfg.head_dims[1]),
        )
        if cfg.backbone.pretrained:
            self.depth_backbone.load_imagenet()

    def pose_embed(self, pose: torch.Tensor) -> torch.Tensor:
        pose = pose.reshape(pose.shape[0], -1)
        if pose.shape[1] != self.cfg.num_joints * 2:
            raise ModelInputError(f"pose has {pose.shape[1]} values, expected {self.cfg.num_joints * 2}")
        if not torch.isfinite(pose).all():
            raise ModelInputError("pose contains non-finite values")
        return self.pose_mlp(pose)

    def depth_encode(self, depth: torch.Tensor) -> torch.Tensor:
        if depth.dim() == 3:
            depth = depth.unsqueeze(1)
        size = self.cfg.depth_size
        if depth.shape[1:] != (1, size, size):
            raise ModelInputError(f"depth must be (B, 1, {size}, {size}), got {tuple(depth.shape)}")
        feat = self.depth_backbone(depth)
        feat = torch.flatten(F.adaptive_avg_pool2d(feat, 1), 1)
        return self.depth_mlp(feat)

    def attention_fuse(self, pose_feat: torch.Tensor, depth_feat: torch.Tensor) -> torch.Tensor:
        if pose_feat.shape[-1] != self.cfg.attention_dim or depth_feat.shape[-1] != self.cfg.attention_dim:
            raise ModelConfigError(
                f"features must be {self.cfg.attention_dim} wide, got "
                f"{pose_feat.shape[-1]} and {depth_feat.shape[-1]}"
            )
        tokens = torch.stack([pose_feat, depth_feat], dim=1)
        out = self.fusion(tokens)
        return out.reshape(out.shape[0], -1)

    def attention_weights(self, pose_feat: torch.Tensor, depth_feat: torch.Tensor) -> torch.Tensor:
        """Per-head attention weights (B, heads, 2, 2) of the fusion layer."""
        tokens = torch.stack([pose_feat, depth_feat], dim=1)
        _, weights = self.fusion.self_attn(tokens, tokens, tokens, need_weights=True, average_attn_weights=False)
        return weights

    def forward(self, pose: torch.Tensor, depth: torch.Tensor) -> torch.Tensor:
        fused = self.attention_fuse(self.pose_embed(pose), self.depth_encode(depth))
        raw = self.head(fused)
        return raw / raw.norm(dim=-1, keepdim=True).clamp_min(NORM_EPS)


def count_parameters(module: nn.Module) -> int:
    return sum(p.numel() for p in module.parameters())
