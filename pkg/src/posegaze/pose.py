"""Upper-body joint selection and neck-anchored, scale-invariant pose normalization.

Joint order (17-joint layout; the first 13 are the upper body)::

    0 nose          5 left_shoulder    10 right_wrist    15 left_ankle
    1 left_eye      6 right_shoulder   11 left_hip       16 right_ankle
    2 right_eye     7 left_elbow       12 right_hip
    3 left_ear      8 right_elbow      13 left_knee
    4 right_ear     9 left_wrist       14 right_knee

The neck is the shoulder midpoint and the mid-hip the hip midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FULL_BODY = (
    "nose", "left_eye", "right_eye", "left_ear", "right_ear",
    "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip",
    "left_knee", "right_knee", "left_ankle", "right_ankle",
)
UPPER_BODY = FULL_BODY[:13]
SCALE_EPS = 1e-6


class LayoutError(ValueError):
    pass


class DegeneratePoseError(ValueError):
    pass


@dataclass(frozen=True)
class Keypoints2D:
    joints: np.ndarray
    layout: tuple[str, ...]
    confidence: np.ndarray | None = None

    def __post_init__(self):
        joints = np.asarray(self.joints, dtype=np.float64)
        if joints.ndim != 2 or joints.shape[1] != 2:
            raise ValueError(f"joints must be (N, 2), got {joints.shape}")
        if len(self.layout) != len(joints):
            raise LayoutError(f"layout has {len(self.layout)} names for {len(joints)} joints")
        if not np.all(np.isfinite(joints)):
            raise ValueError("keypoint coordinates must be finite")
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "layout", tuple(self.layout))

    def index(self, name: str) -> int:
        return self.layout.index(name)


@dataclass(frozen=True)
class NormalizedPose:
    joints: np.ndarray
    anchor: np.ndarray
    scale: float

    def denormalize(self) -> np.ndarray:
        return self.joints * self.scale + self.anchor


def select_upper_body(full: Keypoints2D) -> Keypoints2D:
    if full.layout == UPPER_BODY:
        return full
    if full.layout != FULL_BODY:
        raise LayoutError(f"unrecognized joint layout of {len(full.layout)} joints")
    conf = None if full.confidence is None else np.asarray(full.confidence)[:13]
    return Keypoints2D(full.joints[:13].copy(), UPPER_BODY, conf)


def normalize_keypoints(kp: Keypoints2D) -> NormalizedPose:
    """Translate by the neck and divide by the neck to mid-hip distance.

    Accepts either the 13-joint upper-body or the 17-joint full-body layout.
    Rotation is left untouched on purpose: body orientation is a gaze cue.
    """
    if kp.layout not in (UPPER_BODY, FULL_BODY):
        raise LayoutError(f"unrecognized joint layout of {len(kp.layout)} joints")
    j = kp.joints
    neck = (j[5] + j[6]) / 2
    mid_hip = (j[11] + j[12]) / 2
    d = neck - mid_hip
    scale = float(np.sqrt(d[0] * d[0] + d[1] * d[1]))
    if scale < SCALE_EPS:
        raise DegeneratePoseError(f"neck to hip distance {scale:.3g} px; collapsed detection")
    return NormalizedPose(joints=(j - neck) / scale, anchor=neck, scale=scale)


def flip_keypoints(kp: Keypoints2D, width: int) -> Keypoints2D:
    """Mirror horizontally in an image of ``width`` pixels and swap left/right labels."""
    joints = kp.joints.copy()
    joints[:, 0] = width - 1 - joints[:, 0]
    order = [kp.layout.index(_mirror_name(name)) for name in kp.layout]
    conf = None if kp.confidence is None else np.asarray(kp.confidence)[order]
    return Keypoints2D(joints[order], kp.layout, conf)


def _mirror_name(name: str) -> str:
    if name.startswith("left_"):
        return "right_" + name[5:]
    if name.startswith("right_"):
        return "left_" + name[6:]
    return name
