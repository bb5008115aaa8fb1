"""Evaluation quantities for generated shapes: label error, validity filter,
shape variation, nearest-set distances, and fixed-edge histograms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

EPSILON_DEFAULT = 0.02

# fixed bin edges so runs are comparable across experiments
DISTANCE_EDGES = np.linspace(0.0, 2.5, 41)
ROUNDNESS_EDGES = np.logspace(-8, 0, 41)


def cl_error(labels, recomputed) -> float:
    """Mean squared error between requested and recomputed lift coefficients."""
    labels = np.asarray(labels, dtype=float)
    recomputed = np.asarray(recomputed, dtype=float)
    if labels.shape != recomputed.shape or labels.size == 0:
        raise ParameterError("need two equal-length nonempty label vectors")
    return float(np.mean((labels - recomputed) ** 2))


def filter_valid(squared_errors, epsilon: float = EPSILON_DEFAULT) -> np.ndarray:
    """Indices of items whose squared label error is within the tolerance."""
    err = np.asarray(squared_errors, dtype=float)
    return np.flatnonzero(err <= epsilon)


def shape_variation(vectors) -> float:
    """Mean euclidean distance of flattened shapes from their mean shape."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    if len(v) == 0:
        raise ParameterError("shape variation needs at least one item")
    mu = v.mean(axis=0)
    return float(np.mean(np.linalg.norm(v - mu, axis=1)))


def distance_to_set(vector, dataset_vectors) -> float:
    """Distance from one flattened shape to the nearest member of a set."""
    ds = np.atleast_2d(np.asarray(dataset_vectors, dtype=float))
    if len(ds) == 0:
        raise ParameterError("distance to an empty set is undefined")
    return float(np.min(np.linalg.norm(ds - np.asarray(vector, dtype=float), axis=1)))


def distances_to_set(vectors, dataset_vectors, chunk: int = 256) -> np.ndarray:
    """distance_to_set for many shapes at once (chunked pairwise distances)."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    ds = np.atleast_2d(np.asarray(dataset_vectors, dtype=float))
    if len(ds) == 0:
        raise ParameterError("distance to an empty set is undefined")
    out = np.empty(len(v))
    ds_sq = np.sum(ds * ds, axis=1)
    for lo in range(0, len(v), chunk):
        blk = v[lo:lo + chunk]
        d2 = np.sum(blk * blk, axis=1)[:, None] - 2.0 * blk @ ds.T + ds_sq[None, :]
        out[lo:lo + chunk] = np.sqrt(np.maximum(d2.min(axis=1), 0.0))
    return out


def set_distance(set_a, set_b) -> float:
    """Minimum distance over all cross pairs of two shape sets.

    This reading of "distance between two sets" (nearest cross pair) is a
    convention choice; it is recorded in every report that uses it.
    """
    a = np.atleast_2d(np.asarray(set_a, dtype=float))
    if len(a) == 0:
        raise ParameterError("set distance needs nonempty sets")
    return float(np.min(distances_to_set(a, set_b)))


def histogram(values, bins) -> tuple[np.ndarray, np.ndarray]:
    """Counts over fixed edges; values are clipped into the end bins so the
    counts always sum to len(values)."""
    edges = np.asarray(bins, dtype=float) if np.ndim(bins) else np.linspace(0, 1, int(bins) + 1)
    if len(edges) < 2:
        raise ParameterError("need at least one bin")
    vals = np.asarray(values, dtype=float)
    if vals.size:
        vals = np.clip(vals, edges[0], edges[-1])
    counts, _ = np.histogram(vals, bins=edges)
    return counts, edges


@dataclass
class GenerationReport:
    """Per-shape evaluation rows plus the aggregate quantities."""

    ids: list[str]
    labels: np.ndarray
    recomputed: np.ndarray
    squared_errors: np.ndarray
    dist_naca: np.ndarray | None = None
    dist_joukowski: np.ndarray | None = None
    roundness: np.ndarray | None = None
    epsilon: float = EPSILON_DEFAULT
    notes: dict = field(default_factory=dict)

    @property
    def l_cl(self) -> float:
        return cl_error(self.labels, self.recomputed)

    @property
    def valid_indices(self) -> np.ndarray:
        return filter_valid(self.squared_errors, self.epsilon)

    def summary(self) -> dict:
        out = {"count": len(self.ids), "L_CL": self.l_cl,
               "epsilon": self.epsilon, "G_size": int(len(self.valid_indices))}
        out.update(self.notes)
        return out


REPORT_COLUMNS = ["id", "c_l", "C_L_r", "squared_error",
                  "distance_to_NACA", "distance_to_Joukowski", "w"]


def write_report(report: GenerationReport, rows_path, summary_path=None) -> None:
    """Tabular text, one row per shape, plus an optional key=value summary."""
    def col(arr, i, fmt="%.17g"):
        if arr is None:
            return "nan"
        return fmt % arr[i]

    lines = ["\t".join(REPORT_COLUMNS)]
    for i, sid in enumerate(report.ids):
        lines.append("\t".join([
            sid,
            "%.17g" % report.labels[i],
            "%.17g" % report.recomputed[i],
            "%.17g" % report.squared_errors[i],
            col(report.dist_naca, i),
            col(report.dist_joukowski, i),
            col(report.roundness, i),
        ]))
    with open(rows_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if summary_path is not None:
        items = sorted(report.summary().items())
        with open(summary_path, "w") as fh:
            for key, val in items:
                fh.write(f"{key}\t{val!r}\n")
