#!/usr/bin/env python3
"""Single-family study: train both latent kinds on the NACA dataset and
compare reconstruction and generation label accuracy across seeds.

Usage: python scripts/run_naca_study.py [workdir] [--epochs N] [--seeds 0 1 2]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from foilgen import cli  # noqa: E402


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("workdir", nargs="?", default="runs/naca-study")
    ap.add_argument("--epochs", type=int, default=150)
    ap.add_argument("--kl-weight", type=float, default=0.01)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    args = ap.parse_args()
    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)

    data = work / "naca.txt"
    if not data.exists():
        cli.main(["gen-data", "--family", "naca", "--out", str(data)])

    for model in ("s-cvae", "n-cvae"):
        sampling = "random" if model.startswith("s") else "envelope"
        for seed in args.seeds:
            tag = f"{model}-seed{seed}"
            ckpt = work / f"{tag}.ckpt.json"
            if not ckpt.exists():
                cli.main(["train", "--model", model, "--latent-dim", "2",
                          "--data", str(data), "--out", str(ckpt),
                          "--epochs", str(args.epochs),
                          "--kl-weight", str(args.kl_weight),
                          "--seed", str(seed)])
            gen = work / f"{tag}.generated.txt"
            cli.main(["generate", "--checkpoint", str(ckpt), "--count", "30",
                      "--sampling", sampling, "--data", str(data),
                      "--out", str(gen), "--seed", str(seed)])
            cli.main(["evaluate", "--shapes", str(gen), "--dataset", str(data),
                      "--out", str(work / f"{tag}.eval")])
            cli.main(["latent-map", "--checkpoint", str(ckpt),
                      "--data", str(data), "--out", str(work / f"{tag}.latent.tsv")])
    print(f"\nstudy artifacts in {work}/ (see *.eval.summary.tsv)")


if __name__ == "__main__":
    main()
