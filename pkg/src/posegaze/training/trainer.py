"""Standalone gaze-stage training and full-pipeline training (multi-stage or end-to-end).

Shuffling is seeded per epoch and the torch RNG state travels with the ``*_last.pt``
archives, so a resumed run continues exactly where an uninterrupted one would be.
"""

from __future__ import annotations

import copy
import json
import logging
import math
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader

from ..data import AugmentConfig, DatasetManifest, GazeDataset, InputConfig
from ..models import GazeNet, GazePipeline
from ..supervision import gaze_loss, heatmap_loss, total_loss
from .checkpoint import load_gaze_weights, make_checkpoint, save_checkpoint
from .config import TrainConfig, save_config
from .evaluate import ModelPredictor, evaluate_samples

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


def input_config(cfg: TrainConfig) -> InputConfig:
    return InputConfig(
        image_size=cfg.heatmap_net.image_size,
        heatmap_size=cfg.heatmap_net.output_size,
        sigma=cfg.sigma,
        use_full_body=cfg.use_full_body,
        blur_faces=cfg.blur_faces,
    )


def _splits(manifest: DatasetManifest) -> tuple[DatasetManifest, DatasetManifest]:
    train = manifest.select("train")
    val = manifest.select("val")
    if len(train) == 0:
        raise ValueError("manifest has no 'train' records")
    if len(val) == 0:
        log.warning("no 'val' records; model selection uses the training split")
        val = train
    return train, val


def _epoch_loader(ds: GazeDataset, batch_size: int, seed: int, epoch: int) -> DataLoader:
    ds.set_epoch(epoch)
    gen = torch.Generator().manual_seed(seed * 1_000_003 + epoch)
    return DataLoader(ds, batch_size=batch_size, shuffle=True, generator=gen, num_workers=0)


def _optimizer(params, stage) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=stage.lr, weight_decay=stage.weight_decay, betas=(0.9, 0.999))


def _check_finite(loss, model, epoch: int, run_dir, tag: str) -> None:
    if math.isfinite(float(loss.detach())):
        return
    msg = f"{tag}: non-finite loss at epoch {epoch}"
    if run_dir is not None:
        path = Path(run_dir) / "checkpoints" / f"{tag}_diverged.pt"
        save_checkpoint({"epoch": epoch, "state": copy.deepcopy(model.state_dict()), "loss": float(loss.detach())}, path)
        msg += f"; snapshot in {path}"
    raise TrainingDiverged(msg)


def _step(loss, model, opt, grad_clip: float) -> None:
    opt.zero_grad()
    loss.backward()
    if grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), grad_clip)
    opt.step()


def _log_epoch(run_dir, name: str, entry: dict) -> None:
    log.info("%s %s", name, json.dumps(entry))
    if run_dir is not None:
        with open(Path(run_dir) / "metrics.jsonl", "a") as fh:
            fh.write(json.dumps({"stage": name, **entry}) + "\n")


def _prepare_run_dir(run_dir, cfg: TrainConfig):
    if run_dir is None:
        return None
    run_dir = Path(run_dir)
    (run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)
    save_config(cfg, run_dir / "config.ini")
    return run_dir


@torch.no_grad()
def gaze_angle_errors(net: GazeNet, ds: GazeDataset, batch_size: int = 64) -> np.ndarray:
    """Per-sample angle error (degrees) of the raw network prediction, eval mode."""
    was_training = net.training
    net.eval()
    errs = []
    for i in range(0, len(ds), batch_size):
        items = [ds[j] for j in range(i, min(i + batch_size, len(ds)))]
        pose = torch.stack([it["pose"] for it in items])
        depth = torch.stack([it["depth"] for it in items])
        gt = torch.stack([it["gt_gaze"] for it in items]).double()
        pred = net(pose, depth).double()
        cos = torch.nn.functional.cosine_similarity(gt, pred, dim=-1).clamp(-1, 1)
        errs.append(torch.rad2deg(torch.arccos(cos)).numpy())
    net.train(was_training)
    return np.concatenate(errs) if errs else np.zeros(0)


def _resume(resume: dict | None, stage: str, nets: dict, opt):
    """Restore state from a ``*_last.pt`` archive; returns (start_epoch, history, best)."""
    if resume is None:
        return 1, [], None
    if resume["stage"] != stage or resume.get("optimizer") is None:
        raise ValueError(f"resume archive is not a {stage!r} last-epoch checkpoint")
    nets["gaze_net"].load_state_dict(resume["gaze_net"])
    if "heatmap_net" in nets:
        nets["heatmap_net"].load_state_dict(resume["heatmap_net"])
    opt.load_state_dict(resume["optimizer"])
    torch.set_rng_state(resume["rng"])
    return resume["epoch"] + 1, list(resume["history"]), resume["best"]


def train_gaze_stage(manifest: DatasetManifest, cfg: TrainConfig, run_dir=None, resume: dict | None = None) -> dict:
    """Train the gaze network alone with the cosine loss; return the best-validation checkpoint.

    Model selection: lowest mean validation angle error.
    """
    run_dir = _prepare_run_dir(run_dir, cfg)
    stage = cfg.gaze_stage
    torch.manual_seed(cfg.seed)
    icfg = input_config(cfg)
    train_m, val_m = _splits(manifest)
    train_ds = GazeDataset(train_m, icfg, AugmentConfig() if cfg.augment else None, seed=cfg.seed)
    val_ds = GazeDataset(val_m, icfg)

    net = GazeNet(cfg.gaze_net)
    opt = _optimizer(net.parameters(), stage)
    start, history, best = _resume(resume, "gaze", {"gaze_net": net}, opt)
    for epoch in range(start, stage.epochs + 1):
        net.train()
        losses = []
        for batch in _epoch_loader(train_ds, stage.batch_size, cfg.seed, epoch):
            pred = net(batch["pose"], batch["depth"])
            loss = gaze_loss(batch["gt_gaze"], pred)
            _check_finite(loss, net, epoch, run_dir, "gaze_stage")
            _step(loss, net, opt, cfg.grad_clip)
            losses.append(loss.item())
        val_angle = float(gaze_angle_errors(net, val_ds).mean())
        entry = {"epoch": epoch, "loss": float(np.mean(losses)), "val_angle_error": val_angle}
        history.append(entry)
        _log_epoch(run_dir, "gaze_stage", entry)
        if best is None or val_angle < best[0]:
            best = (val_angle, epoch, copy.deepcopy(net.state_dict()), None)
        if run_dir is not None:
            save_checkpoint(make_checkpoint("gaze", epoch, cfg, net.state_dict(), None, opt.state_dict(),
                                            history, best), run_dir / "checkpoints" / "gaze_last.pt")

    ckpt = make_checkpoint("gaze", best[1], cfg, best[2], history=history)
    if run_dir is not None:
        save_checkpoint(ckpt, run_dir / "checkpoints" / "gaze_best.pt")
    return ckpt


def validate_full(model: GazePipeline, samples, cfg: TrainConfig) -> dict:
    """Mean metrics; ``raw_angle_error`` scores the network gaze before 3D retrieval."""
    result = evaluate_samples(samples, ModelPredictor(model, input_config(cfg)), cfg.window_radius)
    m = result.mean
    raw = float(np.mean([r.raw_angle for r in result.samples])) if result.samples else float("nan")
    return {"dist_3d": m.dist_3d, "angle_error": m.angle_error, "auc": m.auc, "dist_2d": m.dist_2d,
            "raw_angle_error": raw, "failures": len(result.failures)}


def train_full(manifest: DatasetManifest, cfg: TrainConfig, init_checkpoint: dict | None = None,
               run_dir=None, resume: dict | None = None) -> dict:
    """Train the whole pipeline on ``w_heat * L2(heatmap) + w_gaze * cosine(gaze)``.

    ``multi_stage`` requires ``init_checkpoint`` from :func:`train_gaze_stage` and
    starts the gaze network from it (validated once before the first step, logged as
    epoch 0); ``end_to_end`` starts from scratch.  Everything else is shared.
    Returns the checkpoint with the best validation 3D distance.
    """
    if cfg.regime == "multi_stage" and init_checkpoint is None:
        raise ValueError("multi_stage regime needs the gaze-stage checkpoint")
    if cfg.regime == "end_to_end" and init_checkpoint is not None:
        raise ValueError("end_to_end regime does not take a gaze-stage checkpoint")
    run_dir = _prepare_run_dir(run_dir, cfg)
    stage = cfg.full_stage
    torch.manual_seed(cfg.seed)
    icfg = input_config(cfg)
    train_m, val_m = _splits(manifest)
    train_ds = GazeDataset(train_m, icfg, AugmentConfig() if cfg.augment else None, seed=cfg.seed)
    val_samples = GazeDataset(val_m, icfg).samples

    model = GazePipeline(cfg.gaze_net, cfg.heatmap_net, cfg.alpha)
    opt = _optimizer(model.parameters(), stage)
    history: list[dict] = []
    if init_checkpoint is not None:
        load_gaze_weights(model.gaze_net, init_checkpoint)
        if resume is None:
            entry = {"epoch": 0, "val": validate_full(model, val_samples, cfg)}
            history.append(entry)
            _log_epoch(run_dir, "full", entry)
    nets = {"gaze_net": model.gaze_net, "heatmap_net": model.heatmap_net}
    start, resumed_history, best = _resume(resume, "full", nets, opt)
    history = resumed_history or history

    for epoch in range(start, stage.epochs + 1):
        model.train()
        sums = np.zeros(3)
        n = 0
        for b in _epoch_loader(train_ds, stage.batch_size, cfg.seed, epoch):
            gaze, hm = model(b["pose"], b["depth"], b["scene"], b["head_mask"], b["directions"])
            l_heat = heatmap_loss(hm, b["gt_heatmap"])
            l_gaze = gaze_loss(b["gt_gaze"], gaze)
            loss = total_loss(l_heat, l_gaze, cfg.loss)
            _check_finite(loss, model, epoch, run_dir, "full")
            _step(loss, model, opt, cfg.grad_clip)
            sums += (loss.item(), l_heat.item(), l_gaze.item())
            n += 1
        val = validate_full(model, val_samples, cfg)
        entry = {"epoch": epoch, "loss": sums[0] / n, "l_heat": sums[1] / n, "l_gaze": sums[2] / n, "val": val}
        history.append(entry)
        _log_epoch(run_dir, "full", entry)
        if best is None or val["dist_3d"] < best[0]:
            best = (val["dist_3d"], epoch, copy.deepcopy(model.gaze_net.state_dict()),
                    copy.deepcopy(model.heatmap_net.state_dict()))
        if run_dir is not None:
            save_checkpoint(make_checkpoint("full", epoch, cfg, model.gaze_net.state_dict(),
                                            model.heatmap_net.state_dict(), opt.state_dict(), history, best),
                            run_dir / "checkpoints" / "full_last.pt")

    ckpt = make_checkpoint("full", best[1], cfg, best[2], best[3], history=history)
    if run_dir is not None:
        save_checkpoint(ckpt, run_dir / "checkpoints" / "full_best.pt")
    return ckpt


def run_training(manifest: DatasetManifest, cfg: TrainConfig, run_dir=None) -> dict:
    """Dispatch on ``cfg.regime``: multi-stage runs the gaze stage first, end-to-end never does."""
    if cfg.regime == "multi_stage":
        gaze_ckpt = train_gaze_stage(manifest, cfg, run_dir)
        return train_full(manifest, cfg, gaze_ckpt, run_dir)
    return train_full(manifest, cfg, None, run_dir)
