"""Pinhole geometry: depth unprojection, field-of-view heatmaps and 3D target retrieval.

Pixel indices ``(u, v)`` address column ``u`` and row ``v``; pixel centres sit at
integer coordinates.  Normalized image coordinates map pixel ``u`` to ``(u + 0.5) / W``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

EYE_EPS = 1e-9
DEFAULT_ALPHA = 3.0
DEFAULT_WINDOW_AT_224 = 15


class InputShapeError(ValueError):
    pass


class BehindCameraError(ValueError):
    pass


class NoTargetError(ValueError):
    pass


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError(
                f"principal point ({self.cx}, {self.cy}) outside {self.width}x{self.height} image"
            )

    def scaled(self, width: int, height: int) -> "CameraIntrinsics":
        """Intrinsics of the same camera after resizing the image to ``width`` x ``height``."""
        sx = width / self.width
        sy = height / self.height
        return CameraIntrinsics(
            fx=self.fx * sx,
            fy=self.fy * sy,
            cx=(self.cx + 0.5) * sx - 0.5,
            cy=(self.cy + 0.5) * sy - 0.5,
            width=width,
            height=height,
        )

    def cropped(self, x0: int, y0: int, width: int, height: int) -> "CameraIntrinsics":
        return CameraIntrinsics(self.fx, self.fy, self.cx - x0, self.cy - y0, width, height)

    def flipped(self) -> "CameraIntrinsics":
        return CameraIntrinsics(self.fx, self.fy, self.width - 1 - self.cx, self.cy, self.width, self.height)

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraIntrinsics":
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]),
                   int(d["width"]), int(d["height"]))


@dataclass(frozen=True)
class PointCloud:
    """Organized cloud: ``points`` is (H, W, 3) in meters, invalid pixels hold zeros."""

    points: np.ndarray
    valid_mask: np.ndarray

    @property
    def height(self) -> int:
        return self.points.shape[0]

    @property
    def width(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class FovHeatmaps:
    v: np.ndarray
    v_hat: np.ndarray


@dataclass(frozen=True)
class Retrieval3D:
    refined_gaze: np.ndarray
    target_3d: np.ndarray
    target_2d: tuple[int, int]


def as_unit(vec, name: str = "gaze") -> np.ndarray:
    """Return ``vec`` as a float64 unit vector, warning if it had to be rescaled."""
    vec = np.asarray(vec, dtype=np.float64)
    norm = np.linalg.norm(vec)
    if not np.isfinite(norm) or norm == 0:
        raise ValueError(f"{name} has undefined direction (norm {norm})")
    if abs(norm - 1.0) > 1e-6:
        warnings.warn(f"{name} not unit-norm ({norm:.6g}); normalizing", stacklevel=2)
    return vec / norm


def unproject(depth: np.ndarray, k: CameraIntrinsics) -> PointCloud:
    depth = np.asarray(depth, dtype=np.float64)
    if depth.shape != (k.height, k.width):
        raise InputShapeError(f"depth shape {depth.shape} does not match intrinsics {k.height}x{k.width}")
    valid = np.isfinite(depth) & (depth > 0)
    z = np.where(valid, depth, 0.0)
    v, u = np.mgrid[0:k.height, 0:k.width]
    points = np.stack([(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z], axis=-1)
    return PointCloud(points=points, valid_mask=valid)


def project(point, k: CameraIntrinsics) -> np.ndarray:
    """Project camera-frame point(s) ``(..., 3)`` to pixel coordinates ``(..., 2)`` as (u, v)."""
    p = np.asarray(point, dtype=np.float64)
    z = p[..., 2]
    if np.any(z <= 0):
        raise BehindCameraError("cannot project a point with z <= 0")
    u = k.fx * p[..., 0] / z + k.cx
    v = k.fy * p[..., 1] / z + k.cy
    return np.stack([u, v], axis=-1)


def resize_cloud(cloud: PointCloud, width: int, height: int) -> PointCloud:
    """Nearest-neighbour resampling of an organized cloud; the sampled points stay exact."""
    if (cloud.width, cloud.height) == (width, height):
        return cloud
    rows = nearest_indices(cloud.height, height)
    cols = nearest_indices(cloud.width, width)
    return PointCloud(cloud.points[np.ix_(rows, cols)], cloud.valid_mask[np.ix_(rows, cols)])


def nearest_indices(src: int, dst: int) -> np.ndarray:
    idx = np.floor((np.arange(dst) + 0.5) * src / dst).astype(int)
    return np.clip(idx, 0, src - 1)


def unit_directions(cloud: PointCloud, eye_3d) -> np.ndarray:
    """Unit vectors from the eye to every cloud point; zero for invalid or eye-coincident pixels."""
    rel = cloud.points - np.asarray(eye_3d, dtype=np.float64)
    dist = np.linalg.norm(rel, axis=-1)
    usable = cloud.valid_mask & (dist >= EYE_EPS)
    out = np.zeros_like(rel)
    out[usable] = rel[usable] / dist[usable, None]
    return out


def compute_fov_heatmaps(cloud: PointCloud, eye_3d, gaze, alpha: float = DEFAULT_ALPHA) -> FovHeatmaps:
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    g = as_unit(gaze)
    v = unit_directions(cloud, eye_3d) @ g
    v = np.clip(v, -1.0, 1.0)
    return FovHeatmaps(v=v, v_hat=np.maximum(v, 0.0) ** alpha)


def heatmap_argmax(heatmap: np.ndarray) -> tuple[int, int]:
    """(row, col) of the first maximum in row-major order."""
    r, c = np.unravel_index(int(np.argmax(heatmap)), heatmap.shape)
    return int(r), int(c)


def heatmap_cell_to_pixel(row: int, col: int, grid_shape, width: int, height: int) -> tuple[int, int]:
    """Map a heatmap cell to the pixel (u, v) containing its centre at ``width`` x ``height``."""
    gh, gw = grid_shape
    u = min(int(np.floor((col + 0.5) / gw * width)), width - 1)
    v = min(int(np.floor((row + 0.5) / gh * height)), height - 1)
    return u, v


def default_window_radius(width: int) -> int:
    return max(1, int(round(DEFAULT_WINDOW_AT_224 * width / 224)))


def retrieve_3d_target(heatmap, cloud: PointCloud, eye_3d, gaze, window_radius: int | None = None) -> Retrieval3D:
    """Pick the cloud point near the heatmap peak whose eye ray best matches ``gaze``.

    The candidate window is a square of ``window_radius`` pixels around the peak,
    doubled until it holds a usable point.
    """
    heatmap = np.asarray(heatmap, dtype=np.float64)
    if not np.all(np.isfinite(heatmap)) or np.any(heatmap < 0):
        raise ValueError("heatmap must be finite and non-negative")
    g = as_unit(gaze)
    eye = np.asarray(eye_3d, dtype=np.float64)
    dirs = unit_directions(cloud, eye)
    usable = np.any(dirs != 0, axis=-1)
    if not usable.any():
        raise NoTargetError("point cloud has no valid points")
    if window_radius is None:
        window_radius = default_window_radius(cloud.width)
    radius = max(int(window_radius), 1)

    row, col = heatmap_argmax(heatmap)
    u0, v0 = heatmap_cell_to_pixel(row, col, heatmap.shape, cloud.width, cloud.height)
    cos = dirs @ g
    while True:
        r0, r1 = max(v0 - radius, 0), min(v0 + radius + 1, cloud.height)
        c0, c1 = max(u0 - radius, 0), min(u0 + radius + 1, cloud.width)
        window_ok = usable[r0:r1, c0:c1]
        if window_ok.any():
            scores = np.where(window_ok, cos[r0:r1, c0:c1], -np.inf)
            wr, wc = np.unravel_index(int(np.argmax(scores)), scores.shape)
            pv, pu = r0 + int(wr), c0 + int(wc)
            return Retrieval3D(
                refined_gaze=dirs[pv, pu].copy(),
                target_3d=cloud.points[pv, pu].copy(),
                target_2d=(pu, pv),
            )
        radius *= 2
