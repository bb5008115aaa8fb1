"""Build, label, split, duplicate, and persist airfoil datasets.

The plain-text dataset format is the single source of truth for shapes on
disk: a header with the format version, point count and flow condition, one
record per airfoil, and a trailing sha256 checksum over the body.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import aero, geometry
from .errors import DegenerateShapeError, FormatError, ParameterError

FORMAT_TAG = "foilgen-dataset"
FORMAT_VERSION = 1

FAMILY_NACA = "naca"
FAMILY_JOUKOWSKI = "joukowski"
FAMILY_GENERATED = "generated"
FAMILIES = (FAMILY_NACA, FAMILY_JOUKOWSKI, FAMILY_GENERATED)


@dataclass(frozen=True)
class LabeledAirfoil:
    id: str
    shape: geometry.AirfoilShape
    c_l: float
    family: str
    params: dict

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ParameterError(f"unknown family {self.family!r}")
        if not np.isfinite(self.c_l):
            raise ParameterError("label must be finite")


@dataclass
class Dataset:
    items: list[LabeledAirfoil]
    n_points: int
    alpha: float
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.items)

    def family(self, name: str) -> list[LabeledAirfoil]:
        return [it for it in self.items if it.family == name]

    def vectors(self, subset=None) -> np.ndarray:
        items = self.items if subset is None else subset
        return np.array([geometry.flatten(it.shape) for it in items])

    def labels(self, subset=None) -> np.ndarray:
        items = self.items if subset is None else subset
        return np.array([it.c_l for it in items])


@dataclass(frozen=True)
class DatasetSplit:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    ratio: float
    rng_seed: int


# default camber/position/thickness grid; sized near the reference corpus of
# ~3700 sections (count is configuration, not a constant, and is recorded in
# the dataset metadata)
NACA_GRID_DEFAULT = {
    "m_camber": [round(0.01 * i, 3) for i in range(0, 10)],
    "p_pos": [round(0.20 + 0.025 * i, 3) for i in range(0, 21)],
    "t_thick": [round(0.06 + 0.01 * i, 3) for i in range(0, 19)],
}

# generator grid with per-axis strides keeping the family comparable in size
# to the NACA set; stride (1, 1) is the full grid
JOUKOWSKI_GRID_DEFAULT = {"a_step": 0.002, "a_max": 0.2,
                          "b_step": 0.001, "b_max": 0.2, "r": 1.1}
JOUKOWSKI_STRIDE_DEFAULT = (2, 3)


def naca_param_list(grid: dict | None = None) -> list[geometry.Naca4Params]:
    grid = grid or NACA_GRID_DEFAULT
    out = []
    for m in grid["m_camber"]:
        p_values = [0.0] if m == 0.0 else grid["p_pos"]
        for p in p_values:
            for t in grid["t_thick"]:
                out.append(geometry.Naca4Params(m_camber=m, p_pos=p, t_thick=t))
    return out


def joukowski_param_list(grid: dict | None = None,
                         stride: tuple[int, int] = JOUKOWSKI_STRIDE_DEFAULT
                         ) -> list[geometry.JoukowskiParams]:
    grid = grid or JOUKOWSKI_GRID_DEFAULT
    sa, sb = stride
    a_vals = np.round(np.arange(0.0, grid["a_max"] + 1e-12, grid["a_step"] * sa), 9)
    b_vals = np.round(np.arange(0.0, grid["b_max"] + 1e-12, grid["b_step"] * sb), 9)
    out = []
    for a in a_vals:
        for b in b_vals:
            if a == 0.0 and b == 0.0:
                continue
            out.append(geometry.JoukowskiParams(a=float(a), b=float(b), r=grid["r"]))
    return out


def _naca_id(p: geometry.Naca4Params) -> str:
    return f"naca-m{p.m_camber:g}-p{p.p_pos:g}-t{p.t_thick:g}"


def _jouk_id(p: geometry.JoukowskiParams) -> str:
    return f"jouk-a{p.a:g}-b{p.b:g}-r{p.r:g}"


def build_naca(flow: aero.FlowCondition, grid: dict | None = None,
               n_points: int = geometry.DEFAULT_N) -> tuple[Dataset, list[tuple[str, str]]]:
    """Label the whole NACA grid; solver failures are excluded and reported."""
    params = naca_param_list(grid)
    items, failures = [], []
    for p in params:
        sid = _naca_id(p)
        try:
            shape = geometry.naca4_profile(p, n=n_points)
            shape.validate()
            sol = aero.solve_lift(shape, flow)
        except Exception as exc:
            failures.append((sid, str(exc)))
            continue
        items.append(LabeledAirfoil(
            id=sid, shape=shape, c_l=sol.c_l, family=FAMILY_NACA,
            params={"m_camber": p.m_camber, "p_pos": p.p_pos, "t_thick": p.t_thick}))
    meta = {"family": FAMILY_NACA, "grid": grid or NACA_GRID_DEFAULT,
            "failures": len(failures)}
    return Dataset(items=items, n_points=n_points, alpha=flow.alpha, meta=meta), failures


def build_joukowski(flow: aero.FlowCondition, grid: dict | None = None,
                    stride: tuple[int, int] = JOUKOWSKI_STRIDE_DEFAULT,
                    n_points: int = geometry.DEFAULT_N
                    ) -> tuple[Dataset, list[tuple[str, str]]]:
    """Label the (optionally strided) generator grid; degenerates are excluded."""
    params = joukowski_param_list(grid, stride)
    items, failures = [], []
    for p in params:
        sid = _jouk_id(p)
        try:
            shape, ell, m = geometry.joukowski_airfoil(p, n=n_points)
            shape.validate()
            sol = aero.solve_lift(shape, flow)
        except DegenerateShapeError as exc:
            failures.append((sid, f"degenerate: {exc}"))
            continue
        except Exception as exc:
            failures.append((sid, str(exc)))
            continue
        items.append(LabeledAirfoil(
            id=sid, shape=shape, c_l=sol.c_l, family=FAMILY_JOUKOWSKI,
            params={"a": p.a, "b": p.b, "r": p.r, "ell": ell, "m": m, "c_j": p.c_j}))
    meta = {"family": FAMILY_JOUKOWSKI, "grid": grid or JOUKOWSKI_GRID_DEFAULT,
            "stride": list(stride), "failures": len(failures)}
    return Dataset(items=items, n_points=n_points, alpha=flow.alpha, meta=meta), failures


def merge(*datasets: Dataset) -> Dataset:
    base = datasets[0]
    items = []
    seen = set()
    for ds in datasets:
        if ds.n_points != base.n_points or ds.alpha != base.alpha:
            raise ParameterError("cannot merge datasets with different n or alpha")
        for it in ds.items:
            if it.id in seen:
                raise ParameterError(f"duplicate id {it.id!r} while merging")
            seen.add(it.id)
            items.append(it)
    meta = {"family": "mixed", "parts": [ds.meta for ds in datasets]}
    return Dataset(items=items, n_points=base.n_points, alpha=base.alpha, meta=meta)


def split(dataset: Dataset, ratio: float = 0.9, seed: int = 0) -> DatasetSplit:
    """Uniform random split by id, reproducible by seed and order-independent."""
    if len(dataset) < 10:
        raise ParameterError("dataset too small to split")
    ids = sorted(it.id for it in dataset.items)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    n_train = int(np.floor(ratio * len(ids)))
    train = tuple(ids[i] for i in sorted(perm[:n_train]))
    test = tuple(ids[i] for i in sorted(perm[n_train:]))
    return DatasetSplit(train_ids=train, test_ids=test, ratio=ratio, rng_seed=seed)


def split_arrays(dataset: Dataset, sp: DatasetSplit):
    """(train_vectors, train_labels, test_vectors, test_labels) for a split."""
    by_id = {it.id: it for it in dataset.items}
    tr = [by_id[i] for i in sp.train_ids]
    te = [by_id[i] for i in sp.test_ids]
    return (dataset.vectors(tr), dataset.labels(tr),
            dataset.vectors(te), dataset.labels(te))


def duplicate_family(dataset: Dataset, family: str, factor: int) -> Dataset:
    """Repeat every member of one family `factor` times (fresh ids)."""
    if factor < 1 or int(factor) != factor:
        raise ParameterError("factor must be a positive integer")
    if family not in FAMILIES:
        raise ParameterError(f"unknown family {family!r}")
    items = list(dataset.items)
    for k in range(1, int(factor)):
        for it in dataset.items:
            if it.family == family:
                items.append(replace(it, id=f"{it.id}#dup{k}"))
    meta = dict(dataset.meta)
    meta["duplicated"] = {"family": family, "factor": int(factor)}
    return Dataset(items=items, n_points=dataset.n_points, alpha=dataset.alpha, meta=meta)


def save(dataset: Dataset, path) -> None:
    """Plain-text records with 17-significant-digit coordinates (lossless)."""
    lines = [json.dumps({"format": FORMAT_TAG, "version": FORMAT_VERSION,
                         "n": dataset.n_points, "alpha": dataset.alpha,
                         "count": len(dataset), "meta": dataset.meta},
                        sort_keys=True)]
    for it in dataset.items:
        coords = " ".join("%.17g" % v for v in geometry.flatten(it.shape))
        rec = json.dumps({"id": it.id, "family": it.family, "c_l": it.c_l,
                          "params": it.params}, sort_keys=True)
        lines.append(rec + "|" + coords)
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    with open(path, "w") as fh:
        fh.write(body)
        fh.write(f"#sha256 {digest}\n")


def load(path) -> Dataset:
    with open(path) as fh:
        raw = fh.read()
    if "#sha256 " not in raw:
        raise FormatError("missing checksum line (truncated file?)")
    body, _, tail = raw.rpartition("#sha256 ")
    digest = tail.strip()
    if hashlib.sha256(body.encode()).hexdigest() != digest:
        raise FormatError("checksum mismatch (corrupt or truncated file)")
    lines = body.strip("\n").split("\n")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"unparseable header: {exc}") from exc
    if header.get("format") != FORMAT_TAG:
        raise FormatError("not a dataset file")
    if header.get("version") != FORMAT_VERSION:
        raise FormatError(f"unsupported dataset version {header.get('version')}")
    n = header["n"]
    items = []
    for line in lines[1:]:
        rec_json, _, coords = line.partition("|")
        rec = json.loads(rec_json)
        vec = np.array(coords.split(), dtype=float)
        shape = geometry.unflatten(vec, n)
        items.append(LabeledAirfoil(id=rec["id"], shape=shape, c_l=rec["c_l"],
                                    family=rec["family"], params=rec["params"]))
    if len(items) != header["count"]:
        raise FormatError(f"expected {header['count']} records, found {len(items)}")
    return Dataset(items=items, n_points=n, alpha=header["alpha"], meta=header.get("meta", {}))
