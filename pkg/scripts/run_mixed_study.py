#!/usr/bin/env python3
"""Mixed-family study: train on NACA + mapped-circle airfoils, generate, and
report nearest-set distances and roundness. Optionally repeat with one family
duplicated to shift where generations land.

Usage: python scripts/run_mixed_study.py [workdir] [--epochs N] [--dup 3]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from foilgen import cli  # noqa: E402


def run_case(work: Path, data: Path, model: str, tag: str, epochs: int,
             kl_weight: float, seed: int) -> None:
    sampling = "random" if model.startswith("s") else "envelope"
    ckpt = work / f"{tag}.ckpt.json"
    if not ckpt.exists():
        cli.main(["train", "--model", model, "--latent-dim", "2",
                  "--data", str(data), "--out", str(ckpt),
                  "--epochs", str(epochs), "--kl-weight", str(kl_weight),
                  "--seed", str(seed)])
    gen = work / f"{tag}.generated.txt"
    cli.main(["generate", "--checkpoint", str(ckpt), "--count", "30",
              "--sampling", sampling, "--data", str(data), "--out", str(gen),
              "--seed", str(seed), "--sweep-count", "10"])
    cli.main(["evaluate", "--shapes", str(gen), "--dataset", str(data),
              "--roundness", "--out", str(work / f"{tag}.eval")])


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("workdir", nargs="?", default="runs/mixed-study")
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--kl-weight", type=float, default=0.01)
    ap.add_argument("--dup", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)

    balanced = work / "mixed.txt"
    if not balanced.exists():
        cli.main(["gen-data", "--family", "mixed", "--out", str(balanced)])
    for model in ("s-cvae", "n-cvae"):
        run_case(work, balanced, model, f"{model}-balanced", args.epochs,
                 args.kl_weight, args.seed)

    duplicated = work / f"mixed-dup{args.dup}.txt"
    if not duplicated.exists():
        cli.main(["gen-data", "--family", "mixed", "--dup-joukowski",
                  str(args.dup), "--out", str(duplicated)])
    run_case(work, duplicated, "n-cvae", f"n-cvae-dup{args.dup}", args.epochs,
             args.kl_weight, args.seed)
    print(f"\nstudy artifacts in {work}/ (see *.eval.summary.tsv)")


if __name__ == "__main__":
    main()
