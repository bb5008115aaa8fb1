"""Shared decode/evaluate plumbing used by both the CLI and the HTTP server,
so the two interfaces produce bit-identical numbers for the same query."""

from __future__ import annotations

import numpy as np

from . import aero, geometry, inverse, vae


def decode_to_shape(model: vae.CvaeModel, z: np.ndarray, c: float) -> geometry.AirfoilShape:
    """Decode one latent vector into a closed, chord-normalized outline.

    Both endpoints are moved onto their average; the correction is blended
    linearly along the contour so the seam does not fold into a micro
    crossing when the raw decoder output has a closure gap.
    """
    vec = vae.decode(model, np.atleast_2d(z), [c])[0]
    shape = geometry.unflatten(vec, model.n_points)
    pts = shape.points.copy()
    target = 0.5 * (pts[0] + pts[-1])
    u = (np.arange(len(pts)) / (len(pts) - 1))[:, None]
    pts = pts + (target - pts[0]) * (1.0 - u) + (target - pts[-1]) * u
    return geometry.AirfoilShape(geometry.normalize_chord(pts))


# decoded shapes carry hair-thin self-crossings at the trailing edge (the
# reconstruction noise exceeds the vanishing thickness there); those are
# tolerated, anything further forward is a degenerate decode
TAIL_X = 0.9
CL_PLAUSIBLE = 5.0


def recompute_lift(shape, flow: aero.FlowCondition) -> float:
    """Lift of a decoded shape, or SolverError for degenerate decodes."""
    crossings = geometry.crossing_x_locations(shape.points)
    if len(crossings) and crossings.min() < TAIL_X:
        raise aero.SolverError("decode self-intersects ahead of the trailing edge")
    c_l = aero.solve_lift(shape, flow, check_simple=False).c_l
    if abs(c_l) > CL_PLAUSIBLE:
        raise aero.SolverError(f"implausible lift {c_l:.2f} (degenerate decode)")
    return c_l


def evaluate_decode(model: vae.CvaeModel, z: np.ndarray, c: float,
                    flow: aero.FlowCondition, with_roundness: bool = True) -> dict:
    """Decode and score one (z, label) query."""
    shape = decode_to_shape(model, z, c)
    out = {"shape": shape.points.tolist(), "c_l": float(c)}
    try:
        c_l = recompute_lift(shape, flow)
        out["c_l_recomputed"] = c_l
        out["error"] = (c_l - float(c)) ** 2
    except Exception as exc:
        out["c_l_recomputed"] = None
        out["error"] = None
        out["solver_failure"] = str(exc)
    if with_roundness:
        try:
            out["w"] = inverse.roundness(shape, refine=False).w
        except Exception as exc:
            out["w"] = None
            out["roundness_failure"] = str(exc)
    return out


def label_sweep(start: float = 0.0, step: float = 0.016, count: int = 100) -> np.ndarray:
    """The default conditioning sweep: 100 labels from 0.0 in steps of 0.016."""
    return start + step * np.arange(count)
