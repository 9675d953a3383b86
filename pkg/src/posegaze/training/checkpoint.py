"""Checkpoint archives.

A checkpoint is one ``torch.save`` zip archive holding a dict::

    format      "posegaze-checkpoint"
    version     1
    stage       "gaze" (standalone gaze network) or "full" (whole pipeline)
    epoch       epochs completed when the snapshot was taken
    config      flat {dotted key: value} form of TrainConfig
    gaze_net    state dict, keys like "fusion.self_attn.in_proj_weight"
    heatmap_net state dict or None (gaze stage)
    optimizer   optimizer state dict or None
    history     list of per-epoch metric dicts
    rng         torch CPU RNG state at save time
    best        resume archives only: (score, epoch, gaze state, heatmap state)
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import torch

from ..models import GazeNet, GazePipeline
from .config import TrainConfig, _format, to_flat, with_overrides

FORMAT = "posegaze-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    pass


def make_checkpoint(stage: str, epoch: int, cfg: TrainConfig, gaze_net, heatmap_net=None,
                    optimizer=None, history=None, best=None) -> dict:
    """``best`` (resume archives only) is ``(score, epoch, gaze_state, heatmap_state)``."""
    return {
        "format": FORMAT,
        "version": VERSION,
        "stage": stage,
        "epoch": epoch,
        "config": {k: _format(v) for k, v in to_flat(cfg).items()},
        "gaze_net": {k: v.detach().clone() for k, v in gaze_net.items()},
        "heatmap_net": None if heatmap_net is None else {k: v.detach().clone() for k, v in heatmap_net.items()},
        "optimizer": optimizer,
        "history": list(history or []),
        "rng": torch.get_rng_state(),
        "best": best,
    }


def save_checkpoint(ckpt: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(ckpt, path)
    return path


def load_checkpoint(path) -> dict:
    try:
        ckpt = torch.load(Path(path), map_location="cpu", weights_only=False)
    except (OSError, RuntimeError) as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    if not isinstance(ckpt, dict) or ckpt.get("format") != FORMAT or ckpt.get("version") != VERSION:
        raise CheckpointError(f"{path} is not a {FORMAT} v{VERSION} archive")
    return ckpt


def config_from_checkpoint(ckpt: dict) -> TrainConfig:
    """The run's config, with ImageNet loading switched off (weights come from the archive)."""
    items = [f"{k}={v}" for k, v in ckpt["config"].items()]
    items += ["gaze_net.backbone.pretrained=false", "heatmap_net.backbone.pretrained=false"]
    return with_overrides(TrainConfig(), items)


def load_gaze_weights(net: GazeNet, ckpt: dict) -> None:
    """Copy the checkpoint's gaze network into ``net``; architectures must match."""
    src = config_from_checkpoint(ckpt).gaze_net
    src = dataclasses.replace(src, backbone=dataclasses.replace(src.backbone, pretrained=net.cfg.backbone.pretrained))
    if src != net.cfg:
        raise CheckpointError(f"gaze network config mismatch: checkpoint {src} vs model {net.cfg}")
    try:
        net.load_state_dict(ckpt["gaze_net"])
    except RuntimeError as e:
        raise CheckpointError(str(e)) from e


def pipeline_from_checkpoint(ckpt: dict) -> tuple[GazePipeline, TrainConfig]:
    if ckpt["stage"] != "full" or ckpt["heatmap_net"] is None:
        raise CheckpointError("checkpoint holds no heatmap network; a full-pipeline checkpoint is needed")
    cfg = config_from_checkpoint(ckpt)
    model = GazePipeline(cfg.gaze_net, cfg.heatmap_net, cfg.alpha)
    model.gaze_net.load_state_dict(ckpt["gaze_net"])
    model.heatmap_net.load_state_dict(ckpt["heatmap_net"])
    model.eval()
    return model, cfg
