from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch.utils.data import Dataset

from ..geometry import nearest_indices, resize_cloud, unit_directions, unproject
from ..pose import normalize_keypoints, select_upper_body
from ..supervision import gaussian_gt_heatmap, normalized_to_cell
from .augment import AugmentConfig, augment
from .manifest import DatasetManifest
from .sample import GazeSample

DEPTH_CLIP_M = 10.0


@dataclass
class InputConfig:
    image_size: int = 224
    heatmap_size: int = 64
    sigma: float = 3.0
    use_full_body: bool = False
    blur_faces: bool = True


def pose_vector(sample: GazeSample, use_full_body: bool = False) -> np.ndarray:
    kp = sample.keypoints if use_full_body else select_upper_body(sample.keypoints)
    return normalize_keypoints(kp).joints.reshape(-1)


def prepare_inputs(sample: GazeSample, cfg: InputConfig) -> dict[str, torch.Tensor]:
    """Network-ready tensors for one sample, all image-like inputs at ``image_size``."""
    size = cfg.image_size
    rows = nearest_indices(sample.height, size)
    cols = nearest_indices(sample.width, size)
    depth = sample.depth[np.ix_(rows, cols)]
    depth_in = np.clip(depth, 0.0, DEPTH_CLIP_M) / DEPTH_CLIP_M
    cloud = resize_cloud(unproject(sample.depth, sample.intrinsics), size, size)
    directions = unit_directions(cloud, sample.eye_3d)

    scene = torch.from_numpy(np.ascontiguousarray(sample.scene.transpose(2, 0, 1))).float()
    if scene.shape[1:] != (size, size):
        scene = F.interpolate(scene[None], size=(size, size), mode="bilinear", align_corners=False)[0]
    hm = gaussian_gt_heatmap(normalized_to_cell(sample.gt_target_2d, cfg.heatmap_size), cfg.sigma, cfg.heatmap_size)
    return {
        "pose": torch.from_numpy(pose_vector(sample, cfg.use_full_body)).float(),
        "depth": torch.from_numpy(depth_in[None]).float(),
        "scene": scene,
        "head_mask": torch.from_numpy(sample.head_mask(size)[None]),
        "directions": torch.from_numpy(directions).float(),
        "gt_gaze": torch.from_numpy(sample.gt_gaze).float(),
        "gt_heatmap": torch.from_numpy(hm).float(),
    }


class GazeDataset(Dataset):
    """Loads (and face-blurs) every sample once; augmentation is re-drawn per epoch.

    Augmentation randomness is seeded from ``(seed, epoch, index)`` so a run is
    reproducible regardless of loading order.
    """

    def __init__(self, source: DatasetManifest | list[GazeSample], cfg: InputConfig | None = None,
                 augment_cfg: AugmentConfig | None = None, seed: int = 0):
        self.cfg = cfg or InputConfig()
        if isinstance(source, DatasetManifest):
            self.samples = [source.load(i, blur=self.cfg.blur_faces) for i in range(len(source))]
        else:
            self.samples = list(source)
        self.augment_cfg = augment_cfg
        self.seed = seed
        self.epoch = 0
        self._cache: dict[int, dict] = {}

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, index: int) -> dict[str, torch.Tensor]:
        if self.augment_cfg is None:
            if index not in self._cache:
                self._cache[index] = prepare_inputs(self.samples[index], self.cfg)
            return self._cache[index]
        seed = np.random.SeedSequence([self.seed, self.epoch, index])
        return prepare_inputs(augment(self.samples[index], seed, self.augment_cfg), self.cfg)
