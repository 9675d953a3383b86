"""Input ablations: upper vs full body pose, blurred vs raw faces.

Trains the desk-scale end-to-end model once per setting on the same scenes and
prints one metric line per setting.

    python scripts/ablation.py --data runs/desk/data/manifest.jsonl --out runs/ablation
"""

import argparse
import itertools
import logging
from pathlib import Path

from posegaze.data import load_manifest
from posegaze.training import TrainConfig, evaluate, train_full, with_overrides


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--data", required=True, help="manifest with train and val splits")
    p.add_argument("--out", default="runs/ablation")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    args = p.parse_args()
    logging.basicConfig(level=logging.WARNING)

    manifest = load_manifest(args.data)
    val = manifest.select("val")
    for full_body, blur in itertools.product((False, True), (True, False)):
        name = f"{'full' if full_body else 'upper'}_{'blur' if blur else 'raw'}"
        cfg = with_overrides(TrainConfig.tiny(), [
            "regime=end_to_end", f"seed={args.seed}", f"use_full_body={full_body}", f"blur_faces={blur}", *args.set])
        ckpt = train_full(manifest, cfg, run_dir=Path(args.out) / name)
        print(f"{name:>10} {evaluate(val, ckpt).mean.to_line()}", flush=True)


if __name__ == "__main__":
    main()
