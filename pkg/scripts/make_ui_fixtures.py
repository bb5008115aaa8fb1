#!/usr/bin/env python3
"""Regenerate the frontend decode-fidelity fixtures.

Boots a deterministic model, runs 10 (z, c_l) queries through the same
pipeline the HTTP server uses, and stores query/response pairs. The frontend
test replays them against a mocked fetch and asserts the displayed values
match these stored responses exactly.
"""

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from foilgen import aero, pipeline, vae  # noqa: E402

OUT = Path(__file__).resolve().parents[1] / "frontend" / "test" / "fixtures" / "decode_queries.json"


def main() -> None:
    rng = np.random.default_rng(2024)
    model = vae.build_model("sphere", 2, 248, rng, hidden=(32, 32))
    flow = aero.FlowCondition(0.0)
    queries = []
    zs = rng.standard_normal((10, 3))
    zs /= np.linalg.norm(zs, axis=1, keepdims=True)
    labels = np.linspace(0.1, 1.3, 10)
    for z, c in zip(zs, labels):
        resp = pipeline.evaluate_decode(model, z, float(c), flow)
        queries.append({"z": z.tolist(), "c_l": float(c), "response": resp})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w") as fh:
        json.dump({"model": {"kind": "sphere", "d": 2, "n_points": 248,
                             "conditional": True, "alpha": flow.alpha,
                             "latent_width": 3, "has_dataset": False},
                   "queries": queries}, fh)
    print(f"wrote {len(queries)} fixtures -> {OUT}")


if __name__ == "__main__":
    main()
