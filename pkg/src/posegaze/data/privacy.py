"""Face anonymization: Gaussian blur confined to the head box."""

from __future__ import annotations

import warnings

import numpy as np
from scipy.ndimage import gaussian_filter

TRUNCATE = 3.0


def blur_sigma(head_box) -> float:
    x0, y0, x1, y1 = head_box
    return max(x1 - x0, y1 - y0) / 8.0


def blur_face(scene: np.ndarray, head_box) -> np.ndarray:
    """Blur the pixels inside ``head_box``; everything outside is returned bit-identical.

    Only the box contents feed the blur (edges are reflected), so no colour from
    outside the box bleeds in.
    """
    x0, y0, x1, y1 = (int(c) for c in head_box)
    out = scene.copy()
    if x1 <= x0 or y1 <= y0:
        warnings.warn(f"degenerate head box {head_box}; face left as is", stacklevel=2)
        return out
    sigma = blur_sigma((x0, y0, x1, y1))
    crop = scene[y0:y1, x0:x1].astype(np.float64)
    sig = (sigma, sigma, 0.0) if crop.ndim == 3 else (sigma, sigma)
    blurred = gaussian_filter(crop, sigma=sig, mode="reflect", truncate=TRUNCATE)
    out[y0:y1, x0:x1] = blurred.astype(scene.dtype)
    return out


def audit_blur(original: np.ndarray, blurred: np.ndarray, head_box) -> bool:
    """True when the box interior was altered and the exterior is untouched."""
    x0, y0, x1, y1 = (int(c) for c in head_box)
    inside = np.zeros(original.shape[:2], dtype=bool)
    inside[y0:y1, x0:x1] = True
    exterior_same = np.array_equal(original[~inside], blurred[~inside])
    interior_changed = not np.array_equal(original[inside], blurred[inside])
    return exterior_same and interior_changed
