"""Command-line entry points wiring the pipeline end to end.

Every command writes a manifest (<first output>.manifest.json) recording the
resolved arguments, seeds, and sha256 checksums of inputs and outputs; `rerun`
replays a manifest into a fresh directory and verifies bit-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import aero, dataset as ds, geometry, inverse, metrics, pipeline, vae
from .errors import FoilgenError
from .nn import TrainConfig

MODEL_TAGS = {
    "s-cvae": ("sphere", True),
    "n-cvae": ("gauss", True),
    "s-vae": ("sphere", False),
    "n-vae": ("gauss", False),
}


def _env_seed() -> int:
    return int(os.environ.get("FOILGEN_SEED", "0"))


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(command: str, args: argparse.Namespace,
                    inputs: list, outputs: list, started: float) -> None:
    doc = {
        "command": command,
        "args": {k: v for k, v in vars(args).items() if k != "func"},
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "wall_clock_s": time.time() - started,
    }
    path = str(outputs[0]) + ".manifest.json" if outputs else command + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)


def cmd_gen_data(args) -> list:
    started = time.time()
    flow = aero.FlowCondition(alpha=args.alpha)
    failures = []
    if args.family == "naca":
        data, failures = ds.build_naca(flow, n_points=args.n)
    elif args.family == "joukowski":
        data, failures = ds.build_joukowski(
            flow, stride=(args.stride_a, args.stride_b), n_points=args.n)
    elif args.family == "mixed":
        naca, f1 = ds.build_naca(flow, n_points=args.n)
        jouk, f2 = ds.build_joukowski(
            flow, stride=(args.stride_a, args.stride_b), n_points=args.n)
        failures = f1 + f2
        data = ds.merge(naca, jouk)
        if args.dup_joukowski > 1:
            data = ds.duplicate_family(data, ds.FAMILY_JOUKOWSKI, args.dup_joukowski)
    else:
        raise FoilgenError(f"unknown family {args.family!r}")
    ds.save(data, args.out)
    labels = data.labels()
    print(f"gen-data: {len(data)} items ({args.family}), "
          f"{len(failures)} excluded; C_L mean {labels.mean():.4f} "
          f"std {labels.std():.4f}; wrote {args.out}")
    _write_manifest("gen-data", args, [], [args.out], started)
    return [args.out]


def cmd_train(args) -> list:
    started = time.time()
    kind, conditional = MODEL_TAGS[args.model]
    data = ds.load(args.data)
    sp = ds.split(data, ratio=args.split_ratio, seed=args.seed)
    tr_s, tr_c, te_s, te_c = ds.split_arrays(data, sp)
    rng = np.random.default_rng(args.seed)
    model = vae.build_model(kind, args.latent_dim, data.n_points, rng,
                            conditional=conditional)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                         learning_rate=args.lr, kl_weight=args.kl_weight,
                         rng_seed=args.seed)
    model, trace = vae.train(model, tr_s, tr_c, config, te_s, te_c)
    extra = {"model_tag": args.model, "data": str(Path(args.data).name),
             "alpha": data.alpha, "seed": args.seed,
             "split": {"ratio": args.split_ratio, "seed": args.seed},
             "config": vars(config)}
    vae.save_checkpoint(model, args.out, extra)
    trace_path = args.trace or (args.out + ".trace.tsv")
    cols = sorted(trace[0].keys())
    with open(trace_path, "w") as fh:
        fh.write("\t".join(cols) + "\n")
        for row in trace:
            fh.write("\t".join("%.17g" % row.get(c, float("nan")) for c in cols) + "\n")
    last = trace[-1]
    print(f"train: {args.model} d={args.latent_dim} epochs={args.epochs} "
          f"final train_total={last['train_total']:.5f} -> {args.out}")
    _write_manifest("train", args, [args.data], [args.out, trace_path], started)
    return [args.out, trace_path]


def _generated_dataset(model, zs, labels, flow, n_points, sampling) -> ds.Dataset:
    items = []
    for i, z in enumerate(zs):
        for c in labels:
            shape = pipeline.decode_to_shape(model, z, float(c))
            items.append(ds.LabeledAirfoil(
                id=f"gen-{i:03d}-c{c:.3f}", shape=shape, c_l=float(c),
                family=ds.FAMILY_GENERATED,
                params={"z": [float(v) for v in z], "z_index": i,
                        "sampling": sampling}))
    return ds.Dataset(items=items, n_points=n_points, alpha=flow.alpha,
                      meta={"family": ds.FAMILY_GENERATED, "sampling": sampling})


def cmd_generate(args) -> list:
    started = time.time()
    model, extra = vae.load_checkpoint(args.checkpoint)
    flow = aero.FlowCondition(alpha=args.alpha if args.alpha is not None
                              else extra.get("alpha", 0.0))
    rng = np.random.default_rng(args.seed)
    data = None
    inputs = [args.checkpoint]
    if args.sampling == "envelope":
        if not args.data:
            raise FoilgenError("envelope sampling needs --data to encode")
        ref = ds.load(args.data)
        data = (ref.vectors(), ref.labels())
        inputs.append(args.data)
    zs = vae.sample_latents(model, args.count, args.sampling, rng, data)
    labels = pipeline.label_sweep(count=args.labels_sweep)
    gen = _generated_dataset(model, zs, labels, flow, model.n_points, args.sampling)
    ds.save(gen, args.out)
    print(f"generate: {args.count} latents x {len(labels)} labels -> "
          f"{len(gen)} shapes ({args.sampling}) -> {args.out}")
    _write_manifest("generate", args, inputs, [args.out], started)
    return [args.out]


def _evaluate_dataset(gen: ds.Dataset, ref: ds.Dataset | None, epsilon: float,
                      with_roundness: bool, alpha: float) -> metrics.GenerationReport:
    flow = aero.FlowCondition(alpha=alpha)
    shapes = [it.shape for it in gen.items]
    labels = gen.labels()
    recomputed, failures = [], []
    for i, shape in enumerate(shapes):
        try:
            recomputed.append(pipeline.recompute_lift(shape, flow))
        except Exception as exc:
            recomputed.append(None)
            failures.append((i, str(exc)))
    ok = np.array([r is not None for r in recomputed])
    rec = np.array([r if r is not None else np.nan for r in recomputed])
    sq = (labels - rec) ** 2
    report = metrics.GenerationReport(
        ids=[it.id for it in gen.items],
        labels=labels, recomputed=rec, squared_errors=sq, epsilon=epsilon,
        notes={"solver_failures": int(len(failures)),
               "set_distance_convention": "minimum cross-pair euclidean distance"})
    gen_vecs = gen.vectors()
    if ref is not None:
        naca = ref.family(ds.FAMILY_NACA)
        jouk = ref.family(ds.FAMILY_JOUKOWSKI)
        if naca:
            report.dist_naca = metrics.distances_to_set(gen_vecs, ref.vectors(naca))
        if jouk:
            report.dist_joukowski = metrics.distances_to_set(gen_vecs, ref.vectors(jouk))
        if naca and jouk:
            report.notes["set_distance"] = metrics.set_distance(
                ref.vectors(naca), ref.vectors(jouk))
    if with_roundness:
        wvals = np.full(len(shapes), np.nan)
        for i, shape in enumerate(shapes):
            try:
                wvals[i] = inverse.roundness(shape, refine=False).w
            except FoilgenError:
                pass
        report.roundness = wvals
    valid = ok & np.isfinite(sq)
    report.notes["evaluated"] = int(valid.sum())
    if valid.sum():
        report.notes["L_CL_finite"] = metrics.cl_error(labels[valid], rec[valid])
        g_idx = metrics.filter_valid(np.where(valid, sq, np.inf), epsilon)
        report.notes["G_size_finite"] = int(len(g_idx))
        if len(g_idx):
            report.notes["variation_v"] = metrics.shape_variation(gen_vecs[g_idx])
    return report


def _write_histograms(report: metrics.GenerationReport, path) -> None:
    """Fixed-edge histograms of the distance and roundness columns."""
    blocks = []
    for name, values, edges in [
            ("distance_to_NACA", report.dist_naca, metrics.DISTANCE_EDGES),
            ("distance_to_Joukowski", report.dist_joukowski, metrics.DISTANCE_EDGES),
            ("w", report.roundness, metrics.ROUNDNESS_EDGES)]:
        if values is None:
            continue
        vals = np.asarray(values, dtype=float)
        counts, edges = metrics.histogram(vals[np.isfinite(vals)], edges)
        blocks.append(f"# {name}\nbin_lo\tbin_hi\tcount")
        blocks.extend(f"{edges[i]:.6g}\t{edges[i + 1]:.6g}\t{counts[i]}"
                      for i in range(len(counts)))
    with open(path, "w") as fh:
        fh.write("\n".join(blocks) + ("\n" if blocks else ""))


def cmd_evaluate(args) -> list:
    started = time.time()
    gen = ds.load(args.shapes)
    ref = ds.load(args.dataset) if args.dataset else None
    alpha = gen.alpha if args.alpha is None else args.alpha
    report = _evaluate_dataset(gen, ref, args.epsilon, args.roundness, alpha)
    rows = args.out + ".rows.tsv"
    summary = args.out + ".summary.tsv"
    metrics.write_report(report, rows, summary)
    _write_histograms(report, args.out + ".hist.tsv")
    note = report.notes
    print(f"evaluate: {len(gen)} shapes; L_CL={note.get('L_CL_finite', float('nan')):.5f} "
          f"|G|={note.get('G_size_finite', 0)} v={note.get('variation_v', float('nan')):.4f} "
          f"-> {rows}")
    inputs = [args.shapes] + ([args.dataset] if args.dataset else [])
    hist = args.out + ".hist.tsv"
    _write_manifest("evaluate", args, inputs, [rows, summary, hist], started)
    return [rows, summary, hist]


def cmd_latent_map(args) -> list:
    started = time.time()
    model, extra = vae.load_checkpoint(args.checkpoint)
    data = ds.load(args.data)
    vecs, labels = data.vectors(), data.labels()
    z = vae.posterior_mean_z(model, vecs, labels)
    wcol = None
    if args.roundness:
        wcol = []
        for it in data.items:
            try:
                wcol.append(inverse.roundness(it.shape, refine=False).w)
            except FoilgenError:
                wcol.append(float("nan"))
    with open(args.out, "w") as fh:
        zc = [f"z{k}" for k in range(z.shape[1])]
        fh.write("\t".join(["id", *zc, "c_l", "family", "w"]) + "\n")
        for i, it in enumerate(data.items):
            wtxt = "%.17g" % wcol[i] if wcol is not None else "nan"
            fh.write("\t".join([it.id, *("%.17g" % v for v in z[i]),
                                "%.17g" % labels[i], it.family, wtxt]) + "\n")
    print(f"latent-map: {len(data)} rows -> {args.out}")
    _write_manifest("latent-map", args, [args.checkpoint, args.data], [args.out], started)
    return [args.out]


def cmd_serve(args) -> list:
    from . import server as srv
    model, extra = vae.load_checkpoint(args.checkpoint)
    flow = aero.FlowCondition(alpha=args.alpha if args.alpha is not None
                              else extra.get("alpha", 0.0))
    kwargs = {}
    if args.dataset:
        data = ds.load(args.dataset)
        kwargs = dict(data_vectors=data.vectors(), data_labels=data.labels(),
                      data_ids=[it.id for it in data.items],
                      data_families=[it.family for it in data.items])
    state = srv.ExplorerState(model, flow, seed=args.seed, **kwargs)
    httpd = srv.serve(state, args.port, host=args.host)
    print(f"serve: listening on http://{args.host}:{httpd.server_address[1]} "
          f"(model={model.kind}, d={model.d})")
    try:
        httpd.serve_forever()
    except KeyboardInterrupt:
        httpd.shutdown()
    return []


def cmd_rerun(args) -> list:
    with open(args.manifest) as fh:
        doc = json.load(fh)
    saved = dict(doc["args"])
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    for key in ("out", "trace"):
        val = saved.get(key)
        if isinstance(val, str) and val:
            saved[key] = str(workdir / Path(val).name)
    func = COMMAND_FUNCS[doc["command"]]
    outputs = func(argparse.Namespace(**saved))
    ok = True
    for orig, digest in doc["outputs"].items():
        got = _sha256(workdir / Path(orig).name)
        status = "OK" if got == digest else "DIFFERS"
        ok &= got == digest
        print(f"rerun: {Path(orig).name}: {status}")
    if not ok:
        sys.exit(1)
    return outputs


COMMAND_FUNCS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "generate": cmd_generate,
    "evaluate": cmd_evaluate,
    "latent-map": cmd_latent_map,
}


def _add_seed(p):
    p.add_argument("--seed", type=int, default=_env_seed(),
                   help="rng seed (falls back to FOILGEN_SEED, then 0)")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="foilgen",
                                 description="Airfoil inverse-design toolkit")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("gen-data", help="build and label an airfoil dataset")
    p.add_argument("--family", choices=["naca", "joukowski", "mixed"], required=True)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=geometry.DEFAULT_N)
    p.add_argument("--stride-a", type=int, default=ds.JOUKOWSKI_STRIDE_DEFAULT[0])
    p.add_argument("--stride-b", type=int, default=ds.JOUKOWSKI_STRIDE_DEFAULT[1])
    p.add_argument("--dup-joukowski", type=int, default=1)
    _add_seed(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train a latent shape model")
    p.add_argument("--model", choices=sorted(MODEL_TAGS), required=True)
    p.add_argument("--latent-dim", type=int, default=2)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--trace", default=None)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--kl-weight", type=float, default=1.0)
    p.add_argument("--split-ratio", type=float, default=0.9)
    _add_seed(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="decode latent samples over a label sweep")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=int, default=30)
    p.add_argument("--sampling", choices=["random", "envelope"], default="random")
    p.add_argument("--labels-sweep", type=int, default=100,
                   help="number of sweep labels (0.016 spacing from 0)")
    p.add_argument("--data", default=None, help="dataset for envelope sampling")
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score generated or reconstructed shapes")
    p.add_argument("--shapes", required=True)
    p.add_argument("--dataset", default=None, help="reference dataset for distances")
    p.add_argument("--epsilon", type=float, default=metrics.EPSILON_DEFAULT)
    p.add_argument("--alpha", type=float, default=None,
                   help="recompute incidence (defaults to the shapes file's)")
    p.add_argument("--roundness", action="store_true")
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("latent-map", help="posterior mean embedding of a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--roundness", action="store_true")
    p.add_argument("--out", required=True)
    _add_seed(p)
    p.set_defaults(func=cmd_latent_map)

    p = sub.add_parser("serve", help="run the JSON HTTP explorer API")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", default=None)
    p.add_argument("--port", type=int, default=8642)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--alpha", type=float, default=None)
    _add_seed(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("rerun", help="replay a manifest and verify outputs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--workdir", required=True)
    p.set_defaults(func=cmd_rerun)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except FoilgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
