"""Line-delimited dataset manifests.

Line 1 is a header ``{"format": "posegaze-manifest", "version": 1}``; every
following line is one JSON record::

    {"id": "000000", "split": "train", "subject": "s000000", "scene_id": "r000000",
     "scene": "scenes/000000.png", "depth": "depth/000000.png",
     "keypoints": "keypoints/000000.txt",
     "intrinsics": {"fx": .., "fy": .., "cx": .., "cy": .., "width": .., "height": ..},
     "head_box": [x0, y0, x1, y1], "eye_2d": [u, v], "eye_3d": [x, y, z],
     "gt_gaze": [x, y, z], "gt_target_2d": [x, y], "gt_target_3d": [x, y, z]}

Paths are relative to the manifest's directory.  Scenes are 8-bit RGB PNG, depth
16-bit PNG in millimetres (0 = no reading), keypoints one ``name x y [confidence]``
line per joint in the 13- or 17-joint order of :mod:`posegaze.pose`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..geometry import CameraIntrinsics
from ..pose import Keypoints2D
from .privacy import blur_face
from .sample import GazeSample, SampleError, validate_sample

FORMAT = "posegaze-manifest"
VERSION = 1
FILE_KEYS = ("scene", "depth", "keypoints")
REQUIRED_KEYS = (
    "id", "split", *FILE_KEYS, "intrinsics", "head_box", "eye_2d", "eye_3d",
    "gt_gaze", "gt_target_2d", "gt_target_3d",
)


class ManifestError(ValueError):
    pass


@dataclass
class DatasetManifest:
    records: list[dict]
    root: Path
    split: str | None = None
    path: Path | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def select(self, split: str) -> "DatasetManifest":
        return DatasetManifest([r for r in self.records if r["split"] == split], self.root, split, self.path)

    def splits(self) -> list[str]:
        return sorted({r["split"] for r in self.records})

    def load(self, index: int, blur: bool = True) -> GazeSample:
        return load_sample(self.records[index], self.root, blur=blur)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path}: {e}") from e
    if not lines:
        raise ManifestError(f"{path}: empty file, missing header")
    header = json.loads(lines[0])
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise ManifestError(f"{path}: expected {FORMAT} v{VERSION}, got {header}")
    root = path.parent
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rec = json.loads(line)
        missing = [k for k in REQUIRED_KEYS if k not in rec]
        if missing:
            raise ManifestError(f"{path}:{lineno}: record {rec.get('id')!r} missing {missing}")
        for key in FILE_KEYS:
            if not (root / rec[key]).is_file():
                raise ManifestError(f"record {rec['id']!r}: {key} file {rec[key]!r} not found")
        records.append(rec)
    return DatasetManifest(records, root, path=path)


def write_manifest(path, records: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"format": FORMAT, "version": VERSION})]
    lines += [json.dumps(r) for r in records]
    path.write_text("\n".join(lines) + "\n")


def read_scene(path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0


def write_scene(path, scene_u8: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(scene_u8, dtype=np.uint8)).save(path)


def read_depth(path) -> np.ndarray:
    with Image.open(path) as img:
        mm = np.asarray(img).astype(np.float64)
    return mm / 1000.0


def write_depth(path, depth_mm: np.ndarray) -> None:
    Image.fromarray(depth_mm.astype(np.uint16)).save(path)


def read_keypoints(path) -> Keypoints2D:
    names, xy, conf = [], [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        names.append(parts[0])
        xy.append((float(parts[1]), float(parts[2])))
        conf.append(float(parts[3]) if len(parts) > 3 else 1.0)
    return Keypoints2D(np.array(xy), tuple(names), np.array(conf))


def write_keypoints(path, kp: Keypoints2D) -> None:
    conf = kp.confidence if kp.confidence is not None else np.ones(len(kp.layout))
    lines = [f"{n} {x!r} {y!r} {c!r}" for n, (x, y), c in
             zip(kp.layout, kp.joints.tolist(), np.asarray(conf, dtype=float).tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def load_sample(rec: dict, root, blur: bool = True) -> GazeSample:
    """Read one record, validate it, and (privacy mode) blur the face before returning."""
    root = Path(root)
    try:
        intr = CameraIntrinsics.from_dict(rec["intrinsics"])
    except ValueError as e:
        raise SampleError(f"record {rec['id']!r}: field 'intrinsics' {e}") from e
    sample = GazeSample(
        sample_id=str(rec["id"]),
        scene=read_scene(root / rec["scene"]),
        depth=read_depth(root / rec["depth"]),
        intrinsics=intr,
        keypoints=read_keypoints(root / rec["keypoints"]),
        head_box=tuple(int(c) for c in rec["head_box"]),
        eye_2d=np.asarray(rec["eye_2d"], dtype=np.float64),
        eye_3d=np.asarray(rec["eye_3d"], dtype=np.float64),
        gt_gaze=np.asarray(rec["gt_gaze"], dtype=np.float64),
        gt_target_2d=np.asarray(rec["gt_target_2d"], dtype=np.float64),
        gt_target_3d=np.asarray(rec["gt_target_3d"], dtype=np.float64),
    )
    validate_sample(sample)
    if blur:
        sample = sample.replace(scene=blur_face(sample.scene, sample.head_box))
    return sample


def sample_record(sample: GazeSample, split: str, files: dict, **extra) -> dict:
    rec = {"id": sample.sample_id, "split": split, **extra, **files}
    rec.update(
        intrinsics=sample.intrinsics.to_dict(),
        head_box=[int(c) for c in sample.head_box],
        eye_2d=np.asarray(sample.eye_2d).tolist(),
        eye_3d=np.asarray(sample.eye_3d).tolist(),
        gt_gaze=np.asarray(sample.gt_gaze).tolist(),
        gt_target_2d=np.asarray(sample.gt_target_2d).tolist(),
        gt_target_3d=np.asarray(sample.gt_target_3d).tolist(),
    )
    return rec
