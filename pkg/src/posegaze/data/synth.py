"""Synthetic rooms with a stick-figure person and an analytic gaze target.

Camera frame: x right, y down, z forward.  The room is a floor plane ``y = h``
(camera height ``h`` above the floor) and a back wall ``z = D``; a handful of
coloured rectangles on both surfaces act as objects.  Depth is rendered in
closed form and quantized to millimetres, and the ground-truth target is the
point unprojected from that quantized depth, so every label is exactly
consistent with the stored files.  The person is painted into the RGB image
only; depth holds the room alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from ..geometry import CameraIntrinsics, project, unproject
from ..pose import FULL_BODY, Keypoints2D
from .manifest import DatasetManifest, sample_record, write_depth, write_keypoints, write_manifest, write_scene
from .sample import GazeSample

UP = np.array([0.0, -1.0, 0.0])
HEAD_RADIUS = 0.13
LIMBS = (
    ("left_shoulder", "right_shoulder"), ("left_hip", "right_hip"),
    ("left_shoulder", "left_hip"), ("right_shoulder", "right_hip"),
    ("left_shoulder", "left_elbow"), ("left_elbow", "left_wrist"),
    ("right_shoulder", "right_elbow"), ("right_elbow", "right_wrist"),
    ("left_hip", "left_knee"), ("left_knee", "left_ankle"),
    ("right_hip", "right_knee"), ("right_knee", "right_ankle"),
)


@dataclass
class SynthConfig:
    count: int = 64
    width: int = 224
    height: int = 224
    hfov_deg: float = 70.0
    camera_height: tuple[float, float] = (1.0, 1.6)
    wall_distance: tuple[float, float] = (3.5, 6.0)
    person_distance: tuple[float, float] = (1.5, 3.0)
    eye_height: tuple[float, float] = (1.45, 1.7)
    objects: tuple[int, int] = (3, 6)
    target_on_object: float = 0.7
    min_target_distance: float = 0.5
    val_fraction: float = 0.0
    test_fraction: float = 0.0

    def intrinsics(self) -> CameraIntrinsics:
        f = self.width / (2 * np.tan(np.radians(self.hfov_deg) / 2))
        return CameraIntrinsics(f, f, (self.width - 1) / 2, (self.height - 1) / 2, self.width, self.height)

    def split_of(self, index: int) -> str:
        n_test = int(round(self.count * self.test_fraction))
        n_val = int(round(self.count * self.val_fraction))
        n_train = self.count - n_val - n_test
        if index < n_train:
            return "train"
        return "val" if index < n_train + n_val else "test"


@dataclass
class RenderedSample:
    sample: GazeSample
    scene_u8: np.ndarray
    depth_mm: np.ndarray


def _unit(v):
    return v / np.linalg.norm(v)


def _room_depth_mm(k: CameraIntrinsics, cam_h: float, wall: float) -> np.ndarray:
    v = np.arange(k.height, dtype=np.float64)[:, None]
    below = v > k.cy
    with np.errstate(divide="ignore"):
        z_floor = np.where(below, cam_h * k.fy / np.where(below, v - k.cy, 1.0), np.inf)
    depth = np.minimum(z_floor, wall) * np.ones((1, k.width))
    return np.round(depth * 1000.0).astype(np.uint16)


def _objects(rng, cfg: SynthConfig, cam_h: float, wall: float, k: CameraIntrinsics) -> list[dict]:
    """Axis-aligned coloured rectangles lying on the wall (x, y) or the floor (x, z)."""
    half_w = wall * (k.width / 2) / k.fx
    out = []
    for _ in range(int(rng.integers(cfg.objects[0], cfg.objects[1] + 1))):
        color = rng.integers(30, 256, size=3)
        if rng.random() < 0.6:
            w, h = rng.uniform(0.3, 1.0), rng.uniform(0.3, 0.9)
            x = rng.uniform(-half_w, half_w - w)
            y = rng.uniform(cam_h - 2.2, cam_h - 0.2 - h)
            out.append({"surface": "wall", "lo": (x, y), "hi": (x + w, y + h), "color": color})
        else:
            w, d = rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.2)
            z = rng.uniform(1.2, wall - d)
            xr = z * (k.width / 2) / k.fx
            x = rng.uniform(-xr, max(xr - w, -xr + 1e-3))
            out.append({"surface": "floor", "lo": (x, z), "hi": (x + w, z + d), "color": color})
    return out


def _paint_room(points, on_wall, valid, objects, rng) -> tuple[np.ndarray, np.ndarray]:
    """Flat-shaded room RGB and a per-pixel object index (-1 for bare surface)."""
    wall_c = rng.integers(120, 230, size=3).astype(np.float64)
    floor_c = rng.integers(60, 170, size=3).astype(np.float64)
    z = points[..., 2]
    shade = np.clip(1.2 - 0.06 * z, 0.6, 1.0)[..., None]
    rgb = np.where(on_wall[..., None], wall_c, floor_c * shade)
    obj_idx = np.full(on_wall.shape, -1)
    for i, ob in enumerate(objects):
        if ob["surface"] == "wall":
            a, b, surf = points[..., 0], points[..., 1], on_wall
        else:
            a, b, surf = points[..., 0], points[..., 2], ~on_wall
        inside = valid & surf & (a >= ob["lo"][0]) & (a < ob["hi"][0]) & (b >= ob["lo"][1]) & (b < ob["hi"][1])
        rgb[inside] = ob["color"]
        obj_idx[inside] = i
    return np.clip(np.round(rgb), 0, 255).astype(np.uint8), obj_idx


def _skeleton(eye, gaze, floor_y, rng) -> dict[str, np.ndarray]:
    """3D joints of a standing person whose head faces ``gaze``."""
    hf = gaze
    hl = np.cross(UP, hf)
    hl = _unit(hl) if np.linalg.norm(hl) > 1e-6 else np.array([-1.0, 0.0, 0.0])
    hu = np.cross(hf, hl)
    yaw = np.arctan2(gaze[0], gaze[2]) + rng.normal(0.0, np.radians(20))
    bf = np.array([np.sin(yaw), 0.0, np.cos(yaw)])
    bl = np.cross(UP, bf)
    down = -UP
    j = {
        "nose": eye + 0.04 * hf - 0.04 * hu,
        "left_eye": eye + 0.032 * hl,
        "right_eye": eye - 0.032 * hl,
        "left_ear": eye - 0.07 * hf + 0.075 * hl - 0.02 * hu,
        "right_ear": eye - 0.07 * hf - 0.075 * hl - 0.02 * hu,
    }
    neck = eye + 0.24 * down - 0.05 * bf
    j["left_shoulder"] = neck + 0.19 * bl
    j["right_shoulder"] = neck - 0.19 * bl
    hip_y = floor_y - 0.95
    mid_hip = np.array([neck[0], hip_y, neck[2]]) - 0.02 * bf
    j["left_hip"] = mid_hip + 0.11 * bl
    j["right_hip"] = mid_hip - 0.11 * bl
    for side, sign in (("left", 1.0), ("right", -1.0)):
        # upper arm hangs within a cone around "down", forearm anywhere in front
        upper = _unit(down + rng.normal(0, 0.5) * bf + sign * abs(rng.normal(0, 0.3)) * bl)
        fore = _unit(rng.normal(0, 1.0, size=3) + 0.8 * bf)
        j[f"{side}_elbow"] = j[f"{side}_shoulder"] + 0.29 * upper
        j[f"{side}_wrist"] = j[f"{side}_elbow"] + 0.26 * fore
        knee = j[f"{side}_hip"] + np.array([0.0, 0.47, 0.0]) + rng.normal(0, 0.03, 3) * np.array([1, 0, 1])
        j[f"{side}_knee"] = knee
        j[f"{side}_ankle"] = np.array([knee[0], floor_y - 0.03, knee[2]])
    return j


def _draw_person(scene_u8, joints_2d: dict, head_box, eye_px, nose_px, rng) -> np.ndarray:
    img = Image.fromarray(scene_u8)
    draw = ImageDraw.Draw(img)
    cloth = tuple(int(c) for c in rng.integers(0, 256, size=3))
    for a, b in LIMBS:
        draw.line([tuple(joints_2d[a]), tuple(joints_2d[b])], fill=cloth, width=3)
    skin = tuple(int(c) for c in rng.integers(150, 240, size=3))
    x0, y0, x1, y1 = head_box
    draw.ellipse([x0, y0, max(x1 - 1, x0), max(y1 - 1, y0)], fill=skin)
    for p in eye_px:
        draw.ellipse([p[0] - 1, p[1] - 1, p[0] + 1, p[1] + 1], fill=(20, 20, 20))
    draw.point([tuple(nose_px)], fill=(120, 40, 40))
    return np.asarray(img)


def generate_sample(rng: np.random.Generator, cfg: SynthConfig, sample_id: str) -> RenderedSample:
    k = cfg.intrinsics()
    while True:
        cam_h = rng.uniform(*cfg.camera_height)
        wall = rng.uniform(*cfg.wall_distance)
        depth_mm = _room_depth_mm(k, cam_h, wall)
        depth = depth_mm.astype(np.float64) / 1000.0
        cloud = unproject(depth, k)
        on_wall = depth_mm == np.round(wall * 1000.0)
        objects = _objects(rng, cfg, cam_h, wall, k)
        room_u8, obj_idx = _paint_room(cloud.points, on_wall, cloud.valid_mask, objects, rng)

        pz = rng.uniform(cfg.person_distance[0], min(cfg.person_distance[1], wall - 0.8))
        half = 0.6 * pz * (k.width / 2) / k.fx
        eye = np.array([rng.uniform(-half, half), cam_h - rng.uniform(*cfg.eye_height), pz])
        eye_px = project(eye, k)
        margin = 12
        if not (margin <= eye_px[0] < k.width - margin and margin <= eye_px[1] < k.height - margin):
            continue
        r_px = HEAD_RADIUS * k.fx / pz
        box = (
            max(int(np.floor(eye_px[0] - r_px)), 0), max(int(np.floor(eye_px[1] - 1.1 * r_px)), 0),
            min(int(np.ceil(eye_px[0] + r_px)) + 1, k.width), min(int(np.ceil(eye_px[1] + 0.9 * r_px)) + 1, k.height),
        )

        for _ in range(50):
            visible_objects = [i for i in range(len(objects)) if np.any(obj_idx == i)]
            if visible_objects and rng.random() < cfg.target_on_object:
                pool = np.argwhere(obj_idx == rng.choice(visible_objects))
            else:
                pool = np.argwhere(cloud.valid_mask)
            tv, tu = pool[rng.integers(len(pool))]
            target = cloud.points[tv, tu]
            in_box = box[0] <= tu < box[2] and box[1] <= tv < box[3]
            if not in_box and np.linalg.norm(target - eye) >= cfg.min_target_distance:
                break
        else:
            continue

        gaze = (target - eye) / np.linalg.norm(target - eye)
        joints3d = _skeleton(eye, gaze, cam_h, rng)
        if min(p[2] for p in joints3d.values()) <= 0.1:
            continue
        j2d = {n: project(p, k) for n, p in joints3d.items()}
        scene_u8 = _draw_person(room_u8, j2d, box, [j2d["left_eye"], j2d["right_eye"]], j2d["nose"], rng)
        kp = Keypoints2D(np.array([j2d[n] for n in FULL_BODY]), FULL_BODY, np.ones(len(FULL_BODY)))
        sample = GazeSample(
            sample_id=sample_id,
            scene=scene_u8.astype(np.float32) / 255.0,
            depth=depth,
            intrinsics=k,
            keypoints=kp,
            head_box=box,
            eye_2d=eye_px,
            eye_3d=eye,
            gt_gaze=gaze,
            gt_target_2d=np.array([(tu + 0.5) / k.width, (tv + 0.5) / k.height]),
            gt_target_3d=target.copy(),
        )
        return RenderedSample(sample, scene_u8, depth_mm)


def synth_samples(cfg: SynthConfig, seed: int):
    """Yield ``(split, RenderedSample)`` for ``cfg.count`` scenes, fully determined by ``seed``."""
    for i in range(cfg.count):
        rng = np.random.default_rng([seed, i])
        yield cfg.split_of(i), generate_sample(rng, cfg, f"{i:06d}")


def synth_generate(cfg: SynthConfig, seed: int, out_dir) -> DatasetManifest:
    """Render ``cfg.count`` samples into ``out_dir`` and write ``out_dir/manifest.jsonl``."""
    out = Path(out_dir)
    for sub in ("scenes", "depth", "keypoints"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    records = []
    for split, r in synth_samples(cfg, seed):
        sid = r.sample.sample_id
        files = {"scene": f"scenes/{sid}.png", "depth": f"depth/{sid}.png", "keypoints": f"keypoints/{sid}.txt"}
        write_scene(out / files["scene"], r.scene_u8)
        write_depth(out / files["depth"], r.depth_mm)
        write_keypoints(out / files["keypoints"], r.sample.keypoints)
        records.append(sample_record(r.sample, split, files, subject=f"s{sid}", scene_id=f"r{sid}"))
    write_manifest(out / "manifest.jsonl", records)
    return DatasetManifest(records, out, path=out / "manifest.jsonl")
