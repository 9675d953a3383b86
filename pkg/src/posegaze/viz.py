"""Per-sample evaluation figures (matplotlib, headless)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .data import GazeSample  # noqa: E402
from .geometry import compute_fov_heatmaps, unproject  # noqa: E402

PRED_COLOR = "tab:blue"
GT_COLOR = "tab:red"


def _heatmap_pixel(heatmap: np.ndarray, width: int, height: int) -> tuple[float, float]:
    r, c = np.unravel_index(int(np.argmax(heatmap)), heatmap.shape)
    return (c + 0.5) * width / heatmap.shape[1] - 0.5, (r + 0.5) * height / heatmap.shape[0] - 0.5


def render_sample(sample: GazeSample, result, path) -> Path:
    """Three panels: scene with 2D targets, predicted field-of-view map, top-down cloud with rays.

    Predictions are blue, ground truth red.  ``sample.scene`` is drawn as given, so
    pass the blurred sample.
    """
    fig, axes = plt.subplots(1, 3, figsize=(13, 4.4))
    w, h = sample.width, sample.height

    ax = axes[0]
    ax.imshow(sample.scene)
    gu, gv = sample.target_pixel()
    pu, pv = _heatmap_pixel(result.heatmap, w, h)
    ax.scatter([pu], [pv], c=PRED_COLOR, s=60, marker="x", label="predicted")
    ax.scatter([gu], [gv], c=GT_COLOR, s=60, marker="+", label="ground truth")
    ax.plot([sample.eye_2d[0], pu], [sample.eye_2d[1], pv], color=PRED_COLOR, lw=1)
    ax.plot([sample.eye_2d[0], gu], [sample.eye_2d[1], gv], color=GT_COLOR, lw=1)
    ax.set_title(f"{sample.sample_id}  auc={result.report.auc:.3f}")
    ax.legend(loc="lower right", fontsize=7)
    ax.axis("off")

    cloud = unproject(sample.depth, sample.intrinsics)
    fov = compute_fov_heatmaps(cloud, sample.eye_3d, result.pred_gaze)
    ax = axes[1]
    ax.imshow(sample.scene)
    ax.imshow(fov.v_hat, cmap="inferno", alpha=0.55, vmin=0, vmax=1)
    ax.set_title("predicted field of view")
    ax.axis("off")

    # top-down (x, z) view of the cloud
    ax = axes[2]
    pts = cloud.points[cloud.valid_mask]
    step = max(1, len(pts) // 4000)
    ax.scatter(pts[::step, 0], pts[::step, 2], s=1, c="0.7")
    eye = sample.eye_3d
    for target, color in ((result.target_3d, PRED_COLOR), (sample.gt_target_3d, GT_COLOR)):
        ax.plot([eye[0], target[0]], [eye[2], target[2]], color=color, lw=1.5)
        ax.scatter([target[0]], [target[2]], c=color, s=25)
    ax.scatter([eye[0]], [eye[2]], c="k", s=25)
    ax.set_xlabel("x (m)")
    ax.set_ylabel("z (m)")
    ax.set_aspect("equal")
    ax.set_title(f"dist_3d={result.report.dist_3d:.2f} m  angle={result.report.angle_error:.1f} deg")

    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=80)
    plt.close(fig)
    return path


def render_figures(result, samples: dict[str, GazeSample], out_dir) -> int:
    """One PNG per scored sample; returns the number written."""
    out = Path(out_dir)
    n = 0
    for r in result.samples:
        render_sample(samples[r.sample_id], r, out / f"{r.sample_id}.png")
        n += 1
    return n
