#!/usr/bin/env python3
"""Seed a model directory for the CLI / studio service.

Writes the toy mixture definitions (analytic models) and optionally trains
a small neural checkpoint on the planar mixture.
"""
import argparse
from pathlib import Path

from ilvrlab import tensorio, toys
from ilvrlab.cli import main as cli_main


def run(out_dir: Path, train_steps: int) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    tensorio.save_mixture(out_dir / "toy-image.json", toys.image_mixture())
    tensorio.save_mixture(out_dir / "toy-image-textured.json", toys.textured_image_mixture())
    tensorio.save_mixture(out_dir / "toy-planar.json", toys.planar_mixture())
    print(f"wrote 3 mixture models to {out_dir}")
    if train_steps > 0:
        rc = cli_main([
            "train", "--mixture", str(out_dir / "toy-planar.json"),
            "--steps", str(train_steps), "--seed", "0",
            "--out", str(out_dir / "planar-train"),
        ])
        if rc == 0:
            (out_dir / "planar-train" / "checkpoint.ckpt").rename(out_dir / "toy-planar-net.ckpt")
            print(f"trained toy-planar-net.ckpt ({train_steps} steps)")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="models")
    ap.add_argument("--train-steps", type=int, default=0,
                    help="also train a small planar checkpoint (try 5000)")
    args = ap.parse_args()
    run(Path(args.out), args.train_steps)
