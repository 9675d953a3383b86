"""``posegaze`` command line: synth, train, eval.

Primary results go to stdout (machine-parsable); logs go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

log = logging.getLogger("posegaze")


def _seed_everything(seed: int) -> None:
    import numpy as np
    import torch

    np.random.seed(seed)
    torch.manual_seed(seed)


def cmd_synth(args) -> int:
    from .data import SynthConfig, synth_generate

    cfg = SynthConfig(count=args.count, width=args.width, height=args.height,
                      val_fraction=args.val_fraction, test_fraction=args.test_fraction)
    try:
        manifest = synth_generate(cfg, args.seed, args.out)
    except OSError as e:
        log.error("cannot write to %s: %s", args.out, e)
        return 1
    print(f"records={len(manifest)} manifest={manifest.path}")
    return 0


def _load_train_config(args):
    from .training import TrainConfig, load_config, with_overrides

    cfg = load_config(args.config) if args.config else (TrainConfig.tiny() if args.tiny else TrainConfig())
    overrides = list(args.set or [])
    if args.regime:
        overrides.append(f"regime={args.regime.replace('-', '_')}")
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return with_overrides(cfg, overrides)


def cmd_train(args) -> int:
    from .data import ManifestError, load_manifest
    from .training import ConfigError, run_training

    try:
        cfg = _load_train_config(args)
    except ConfigError as e:
        log.error("invalid config: %s", e)
        return 2
    _seed_everything(cfg.seed)
    try:
        manifest = load_manifest(args.manifest)
    except ManifestError as e:
        log.error("%s", e)
        return 2
    out = Path(args.out)
    ckpt = run_training(manifest, cfg, out)
    best = out / "checkpoints" / "full_best.pt"
    print(f"checkpoint={best} epoch={ckpt['epoch']}")
    return 0


def cmd_eval(args) -> int:
    from .data import ManifestError, load_manifest
    from .training import CheckpointError, baselines_random_center, evaluate, load_checkpoint

    try:
        manifest = load_manifest(args.manifest)
    except ManifestError as e:
        log.error("%s", e)
        return 2
    if args.split:
        manifest = manifest.select(args.split)
    seed = 0 if args.seed is None else args.seed
    _seed_everything(seed)
    if args.baseline:
        result = baselines_random_center(manifest, args.baseline, seed=seed)
    else:
        if not args.checkpoint:
            log.error("--checkpoint is required unless --baseline is given")
            return 2
        try:
            result = evaluate(manifest, load_checkpoint(args.checkpoint))
        except CheckpointError as e:
            log.error("%s", e)
            return 2
    out = Path(args.out)
    result.write(out)
    if args.viz:
        from .viz import render_figures

        samples = {s.sample_id: s for s in (manifest.load(i) for i in range(len(manifest)))}
        n = render_figures(result, samples, out / "figures")
        log.info("wrote %d figures", n)
    if result.failures:
        log.warning("%d samples failed, see failures.txt", len(result.failures))
    print(result.mean.to_line())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="posegaze", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--count", type=int, default=64)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--width", type=int, default=224)
    s.add_argument("--height", type=int, default=224)
    s.add_argument("--val-fraction", type=float, default=0.0)
    s.add_argument("--test-fraction", type=float, default=0.0)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", help="train with the multi-stage or end-to-end regime")
    t.add_argument("--manifest", required=True)
    t.add_argument("--out", required=True, help="run directory")
    t.add_argument("--config", help="INI config file")
    t.add_argument("--tiny", action="store_true", help="start from the desk-scale preset")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override, repeatable")
    t.add_argument("--regime", choices=("multi-stage", "end-to-end", "multi_stage", "end_to_end"))
    t.add_argument("--seed", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint or a baseline")
    e.add_argument("--manifest", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--checkpoint")
    e.add_argument("--baseline", choices=("random", "center"))
    e.add_argument("--split", help="only evaluate records of this split")
    e.add_argument("--viz", action="store_true", help="write one figure per sample")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
