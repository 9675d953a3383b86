"""Losses, Gaussian target heatmaps and the four evaluation metrics."""

from __future__ import annotations

import math
import warnings
from dataclasses import astuple, dataclass, fields

import numpy as np
import torch
import torch.nn.functional as F

DEFAULT_SIGMA = 3.0


@dataclass(frozen=True)
class LossWeights:
    w_heat: float = 10000.0
    w_gaze: float = 10.0

    def __post_init__(self):
        if self.w_heat < 0 or self.w_gaze < 0:
            raise ValueError("loss weights must be non-negative")


def gaze_loss(gt: torch.Tensor, pred: torch.Tensor) -> torch.Tensor:
    """Mean of ``1 - cos(gt, pred)`` over the batch; inputs are normalized internally."""
    gt = F.normalize(gt, dim=-1, eps=1e-12)
    pred = F.normalize(pred, dim=-1, eps=1e-12)
    return (1.0 - (gt * pred).sum(dim=-1)).mean()


def heatmap_loss(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    if pred.shape != gt.shape:
        raise ValueError(f"heatmap shapes differ: {tuple(pred.shape)} vs {tuple(gt.shape)}")
    return ((pred - gt) ** 2).mean()


def total_loss(l_heat, l_gaze, w: LossWeights = LossWeights()):
    return w.w_heat * l_heat + w.w_gaze * l_gaze


def gaussian_gt_heatmap(target, sigma: float = DEFAULT_SIGMA, size: int = 64) -> np.ndarray:
    """Unnormalized Gaussian with peak 1 at grid cell ``target = (x, y)`` (column, row)."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    tx, ty = float(target[0]), float(target[1])
    cx, cy = min(max(tx, 0.0), size - 1.0), min(max(ty, 0.0), size - 1.0)
    if (cx, cy) != (tx, ty):
        warnings.warn(f"heatmap target ({tx}, {ty}) outside {size}x{size} grid; clamped", stacklevel=2)
    i = np.arange(size, dtype=np.float64)
    rows = np.exp(-((i - cy) ** 2) / (2 * sigma**2))
    cols = np.exp(-((i - cx) ** 2) / (2 * sigma**2))
    return rows[:, None] * cols[None, :]


def normalized_to_cell(target_2d, size: int = 64) -> tuple[int, int]:
    """Grid cell (col, row) containing a normalized image point."""
    x, y = target_2d
    return min(max(int(math.floor(x * size)), 0), size - 1), min(max(int(math.floor(y * size)), 0), size - 1)


def metric_dist3d(pred, gt) -> float:
    return float(np.linalg.norm(np.asarray(pred, dtype=np.float64) - np.asarray(gt, dtype=np.float64)))


def metric_angle(gt, pred) -> float:
    """Angle between two directions in degrees."""
    gt = np.asarray(gt, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    ng, np_ = np.linalg.norm(gt), np.linalg.norm(pred)
    if ng == 0 or np_ == 0:
        raise ValueError("zero-norm vector has no direction")
    cos = np.clip(np.dot(gt / ng, pred / np_), -1.0, 1.0)
    return float(np.degrees(np.arccos(cos)))


def resize_bilinear(img: np.ndarray, height: int, width: int) -> np.ndarray:
    if img.shape == (height, width):
        return np.asarray(img, dtype=np.float64)
    t = torch.as_tensor(np.asarray(img, dtype=np.float64))[None, None]
    return F.interpolate(t, size=(height, width), mode="bilinear", align_corners=False)[0, 0].numpy()


def metric_auc(pred_heatmap, gt_pixel, scene_size) -> float:
    """ROC AUC of the single ground-truth pixel against every other pixel.

    ``gt_pixel`` is (u, v) at the scene resolution ``scene_size = (width, height)``;
    the heatmap is bilinearly resized to that resolution first.  Ties count half.
    """
    width, height = scene_size
    scores = resize_bilinear(pred_heatmap, height, width).ravel()
    u, v = int(gt_pixel[0]), int(gt_pixel[1])
    pos_idx = v * width + u
    pos = scores[pos_idx]
    neg = np.delete(scores, pos_idx)
    if neg.size == 0:
        return 1.0
    return float((np.count_nonzero(neg < pos) + 0.5 * np.count_nonzero(neg == pos)) / neg.size)


def metric_dist2d(pred_heatmap, gt_target) -> float:
    """Distance between the heatmap argmax cell centre and ``gt_target`` in a unit image."""
    hm = np.asarray(pred_heatmap)
    r, c = np.unravel_index(int(np.argmax(hm)), hm.shape)
    px = (c + 0.5) / hm.shape[1]
    py = (r + 0.5) / hm.shape[0]
    return float(math.hypot(px - gt_target[0], py - gt_target[1]))


@dataclass(frozen=True)
class MetricReport:
    """Serialized as ``dist_3d=... angle_error=... auc=... dist_2d=...`` in that order."""

    dist_3d: float
    angle_error: float
    auc: float
    dist_2d: float

    FIELDS = ("dist_3d", "angle_error", "auc", "dist_2d")

    def to_line(self) -> str:
        return " ".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))

    @classmethod
    def from_line(cls, line: str) -> "MetricReport":
        pairs = dict(item.split("=", 1) for item in line.split())
        pairs = {k: v for k, v in pairs.items() if k in cls.FIELDS}
        if set(pairs) != set(cls.FIELDS):
            raise ValueError(f"metric record missing fields: {line!r}")
        return cls(**{k: float(pairs[k]) for k in cls.FIELDS})

    @classmethod
    def mean(cls, reports) -> "MetricReport":
        arr = np.array([astuple(r) for r in reports], dtype=np.float64)
        if arr.size == 0:
            return cls(*(float("nan"),) * 4)
        return cls(*(float(x) for x in arr.mean(axis=0)))
