from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..geometry import CameraIntrinsics, nearest_indices
from ..pose import Keypoints2D


class SampleError(ValueError):
    """A sample violates an invariant; the message names the record and the field."""


@dataclass(frozen=True)
class GazeSample:
    """One annotated frame.

    ``scene`` is float32 RGB in [0, 1] (H, W, 3); ``depth`` is float64 meters (H, W)
    with 0 for dropouts.  ``head_box`` is ``(x0, y0, x1, y1)`` in half-open pixel
    index ranges.  ``eye_2d`` is (u, v) pixels, ``gt_target_2d`` normalized (x, y).
    """

    sample_id: str
    scene: np.ndarray
    depth: np.ndarray
    intrinsics: CameraIntrinsics
    keypoints: Keypoints2D
    head_box: tuple[int, int, int, int]
    eye_2d: np.ndarray
    eye_3d: np.ndarray
    gt_gaze: np.ndarray
    gt_target_2d: np.ndarray
    gt_target_3d: np.ndarray

    @property
    def width(self) -> int:
        return self.scene.shape[1]

    @property
    def height(self) -> int:
        return self.scene.shape[0]

    def target_pixel(self) -> tuple[int, int]:
        """(u, v) pixel containing the 2D target."""
        x, y = self.gt_target_2d
        u = min(max(int(np.floor(x * self.width)), 0), self.width - 1)
        v = min(max(int(np.floor(y * self.height)), 0), self.height - 1)
        return u, v

    def box_mask(self) -> np.ndarray:
        x0, y0, x1, y1 = self.head_box
        mask = np.zeros((self.height, self.width), dtype=bool)
        mask[y0:y1, x0:x1] = True
        return mask

    def head_mask(self, size: int = 224) -> np.ndarray:
        """Binary head-location mask at ``size`` x ``size`` (nearest sampling of the box)."""
        rows = nearest_indices(self.height, size)
        cols = nearest_indices(self.width, size)
        return self.box_mask()[np.ix_(rows, cols)].astype(np.float32)

    def replace(self, **changes) -> "GazeSample":
        return replace(self, **changes)


def validate_sample(s: GazeSample) -> GazeSample:
    def fail(field: str, why: str):
        raise SampleError(f"record {s.sample_id!r}: field {field!r} {why}")

    if s.scene.ndim != 3 or s.scene.shape[2] != 3:
        fail("scene", f"must be (H, W, 3), got {s.scene.shape}")
    if s.depth.shape != s.scene.shape[:2]:
        fail("depth", f"shape {s.depth.shape} differs from scene {s.scene.shape[:2]}")
    if not np.all(np.isfinite(s.depth)):
        fail("depth", "contains non-finite values")
    if (s.intrinsics.width, s.intrinsics.height) != (s.width, s.height):
        fail("intrinsics", "image size does not match the scene")
    norm = float(np.linalg.norm(s.gt_gaze))
    if abs(norm - 1.0) > 1e-6:
        fail("gt_gaze", f"must be unit-norm, has norm {norm:.6g}")
    if not s.eye_3d[2] > 0:
        fail("eye_3d", "must lie in front of the camera (z > 0)")
    x0, y0, x1, y1 = s.head_box
    if not (0 <= x0 <= x1 <= s.width and 0 <= y0 <= y1 <= s.height):
        fail("head_box", f"{s.head_box} outside {s.width}x{s.height} image")
    t = np.asarray(s.gt_target_2d)
    if t.shape != (2,) or np.any(t < 0) or np.any(t > 1):
        fail("gt_target_2d", f"must be in [0, 1]^2, got {t.tolist()}")
    return s
