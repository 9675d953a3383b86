"""Training-time augmentation: crop, horizontal flip, saturation, brightness, contrast.

Geometric transforms act on every image-space field at once; the 3D annotations
live in the camera frame and only change under a flip (x mirrors).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..pose import Keypoints2D, flip_keypoints
from .sample import GazeSample

MAX_CROP_ATTEMPTS = 10


@dataclass
class AugmentConfig:
    flip_prob: float = 0.5
    crop_prob: float = 0.5
    crop_min_scale: float = 0.75
    brightness: float = 0.2
    contrast: float = 0.2
    saturation: float = 0.2


def flip_sample(s: GazeSample) -> GazeSample:
    w = s.width
    x0, y0, x1, y1 = s.head_box
    mirror = np.array([-1.0, 1.0, 1.0])
    return s.replace(
        scene=s.scene[:, ::-1].copy(),
        depth=s.depth[:, ::-1].copy(),
        intrinsics=s.intrinsics.flipped(),
        keypoints=flip_keypoints(s.keypoints, w),
        head_box=(w - x1, y0, w - x0, y1),
        eye_2d=np.array([w - 1 - s.eye_2d[0], s.eye_2d[1]]),
        eye_3d=s.eye_3d * mirror,
        gt_gaze=s.gt_gaze * mirror,
        gt_target_2d=np.array([1.0 - s.gt_target_2d[0], s.gt_target_2d[1]]),
        gt_target_3d=s.gt_target_3d * mirror,
    )


def crop_sample(s: GazeSample, x0: int, y0: int, width: int, height: int) -> GazeSample:
    offset = np.array([x0, y0], dtype=np.float64)
    bx0, by0, bx1, by1 = s.head_box
    u, v = s.gt_target_2d[0] * s.width - 0.5, s.gt_target_2d[1] * s.height - 0.5
    kp = s.keypoints
    return s.replace(
        scene=s.scene[y0:y0 + height, x0:x0 + width].copy(),
        depth=s.depth[y0:y0 + height, x0:x0 + width].copy(),
        intrinsics=s.intrinsics.cropped(x0, y0, width, height),
        keypoints=Keypoints2D(kp.joints - offset, kp.layout, kp.confidence),
        head_box=(bx0 - x0, by0 - y0, bx1 - x0, by1 - y0),
        eye_2d=s.eye_2d - offset,
        gt_target_2d=np.array([(u - x0 + 0.5) / width, (v - y0 + 0.5) / height]),
    )


def _crop_ok(s: GazeSample, x0: int, y0: int, w: int, h: int) -> bool:
    u, v = s.target_pixel()
    bx0, by0, bx1, by1 = s.head_box
    inside_target = x0 <= u < x0 + w and y0 <= v < y0 + h
    inside_box = x0 <= bx0 and y0 <= by0 and bx1 <= x0 + w and by1 <= y0 + h
    principal = 0 <= s.intrinsics.cx - x0 < w and 0 <= s.intrinsics.cy - y0 < h
    return inside_target and inside_box and principal


def random_crop(s: GazeSample, rng: np.random.Generator, min_scale: float) -> GazeSample:
    """Aspect-preserving random crop keeping the target and head box; no crop after 10 misses."""
    for _ in range(MAX_CROP_ATTEMPTS):
        scale = rng.uniform(min_scale, 1.0)
        w = max(int(round(s.width * scale)), 1)
        h = max(int(round(s.height * scale)), 1)
        x0 = int(rng.integers(0, s.width - w + 1))
        y0 = int(rng.integers(0, s.height - h + 1))
        if _crop_ok(s, x0, y0, w, h):
            return crop_sample(s, x0, y0, w, h)
    return s


def adjust_photometric(scene: np.ndarray, saturation: float = 1.0, brightness: float = 1.0,
                       contrast: float = 1.0) -> np.ndarray:
    out = scene.astype(np.float32)
    gray = out @ np.array([0.299, 0.587, 0.114], dtype=np.float32)
    out = gray[..., None] + saturation * (out - gray[..., None])
    out = out * brightness
    mean = out.mean()
    out = mean + contrast * (out - mean)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def augment(s: GazeSample, seed, cfg: AugmentConfig | None = None) -> GazeSample:
    cfg = cfg or AugmentConfig()
    rng = np.random.default_rng(seed)
    if rng.random() < cfg.crop_prob:
        s = random_crop(s, rng, cfg.crop_min_scale)
    if rng.random() < cfg.flip_prob:
        s = flip_sample(s)
    factors = [rng.uniform(1 - a, 1 + a) for a in (cfg.saturation, cfg.brightness, cfg.contrast)]
    return s.replace(scene=adjust_photometric(s.scene, *factors))
