"""Desk-scale experiment: synthesize scenes, train end to end, compare with the baselines.

    python scripts/desk_scale.py --out runs/desk --count 320 --seed 5
"""

import argparse
import logging
import time
from pathlib import Path

from posegaze.data import SynthConfig, synth_generate
from posegaze.training import TrainConfig, baselines_random_center, evaluate, train_full, with_overrides


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/desk")
    p.add_argument("--count", type=int, default=320)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=5)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    out = Path(args.out)
    t0 = time.perf_counter()
    manifest = synth_generate(SynthConfig(count=args.count, val_fraction=args.val_fraction), args.seed, out / "data")
    cfg = with_overrides(TrainConfig.tiny(), ["regime=end_to_end", f"seed={args.seed}", *args.set])
    ckpt = train_full(manifest, cfg, run_dir=out / "run")

    val = manifest.select("val")
    rows = {"model": evaluate(val, ckpt)}
    for kind in ("random", "center"):
        rows[kind] = baselines_random_center(val, kind, seed=args.seed)
    for name, result in rows.items():
        result.write(out / "eval" / name)
        print(f"{name:>6} {result.mean.to_line()}")
    print(f"elapsed {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
