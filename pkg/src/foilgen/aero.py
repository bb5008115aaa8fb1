"""Inviscid lift prediction with a linear-strength vortex panel method.

Surface vorticity is solved from a streamfunction (Dirichlet) system with the
Kutta condition at the trailing edge; sharp/cusped trailing edges are handled
by replacing the redundant node equation with a vorticity extrapolation. Lift
comes from the integrated circulation (Kutta-Joukowski), not Cp integration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SolverError
from .geometry import AirfoilShape, is_simple, signed_area

ALPHA_MIN, ALPHA_MAX = -10.0, 15.0


@dataclass(frozen=True)
class FlowCondition:
    """Angle of attack in degrees; free-stream speed is 1 (nondimensional)."""

    alpha: float = 0.0

    def __post_init__(self):
        if not (ALPHA_MIN <= self.alpha <= ALPHA_MAX):
            raise ParameterError(
                f"alpha {self.alpha} outside solver envelope [{ALPHA_MIN}, {ALPHA_MAX}]")


@dataclass(frozen=True)
class PanelSolution:
    """Per-node vortex strength, per-panel pressure coefficient, lift coefficient."""

    gamma: np.ndarray
    cp: np.ndarray
    c_l: float

    @property
    def kutta_residual(self) -> float:
        return abs(float(self.gamma[0] + self.gamma[-1]))


def _panel_stream_coeffs(xn: np.ndarray, yn: np.ndarray):
    """Streamfunction influence of each linear-vortex panel at every node."""
    dx = xn[1:] - xn[:-1]
    dy = yn[1:] - yn[:-1]
    d = np.hypot(dx, dy)
    if np.any(d <= 0):
        raise SolverError("degenerate geometry: zero-length panel")
    tx, ty = dx / d, dy / d
    rx = xn[:, None] - xn[None, :-1]
    ry = yn[:, None] - yn[None, :-1]
    xl = rx * tx[None, :] + ry * ty[None, :]
    zl = -rx * ty[None, :] + ry * tx[None, :]
    r1 = np.hypot(xl, zl)
    r2 = np.hypot(xl - d[None, :], zl)
    t1 = np.arctan2(zl, xl)
    t2 = np.arctan2(zl, xl - d[None, :])
    eps = 1e-12
    logr1 = np.where(r1 < eps, 0.0, np.log(np.maximum(r1, eps)))
    logr2 = np.where(r2 < eps, 0.0, np.log(np.maximum(r2, eps)))
    p1 = (0.5 / np.pi) * (zl * (t2 - t1) - d[None, :]
                          + xl * logr1 - (xl - d[None, :]) * logr2)
    p2 = xl * p1 + (0.25 / np.pi) * (r2**2 * logr2 - r1**2 * logr1
                                     - 0.5 * r2**2 + 0.5 * r1**2)
    return p1 - p2 / d[None, :], p2 / d[None, :], d


def solve_lift(shape: AirfoilShape, flow: FlowCondition,
               check_simple: bool = True) -> PanelSolution:
    """Solve surface vorticity and lift for one airfoil at one incidence.

    gamma is reported in the input point order; it equals the surface
    tangential speed, so cp per panel is 1 - mean(gamma at ends)^2.
    """
    # the solver normalizes lift by the actual chord, so only closure matters
    shape.validate(chord_tol=None)
    if check_simple and not is_simple(shape.points):
        raise SolverError("contour self-intersects: outside the panel method's domain")
    pts = shape.points
    # solver works clockwise (TE -> lower -> LE -> upper); flip if needed
    flipped = signed_area(pts) > 0
    p = pts[::-1] if flipped else pts
    xn, yn = np.ascontiguousarray(p[:, 0]), np.ascontiguousarray(p[:, 1])
    nn = len(xn)
    a_co, b_co, d = _panel_stream_coeffs(xn, yn)
    a = np.zeros((nn + 1, nn + 1))
    a[:nn, :nn - 1] += a_co
    a[:nn, 1:nn] += b_co
    a[:nn, nn] = -1.0
    rhs = np.zeros(nn + 1)
    alpha = np.radians(flow.alpha)
    rhs[:nn] = -(yn * np.cos(alpha) - xn * np.sin(alpha))
    # duplicated TE node makes its row redundant: extrapolate gamma instead
    a[nn - 1, :] = 0.0
    a[nn - 1, [0, 1, 2, nn - 3, nn - 2, nn - 1]] = [1.0, -2.0, 1.0, -1.0, 2.0, -1.0]
    rhs[nn - 1] = 0.0
    a[nn, 0] = 1.0
    a[nn, nn - 1] = 1.0
    try:
        sol = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular influence matrix: {exc}") from exc
    gam = sol[:nn]
    if not np.all(np.isfinite(gam)):
        raise SolverError("non-finite vorticity solution")
    circ = float(np.sum(d * 0.5 * (gam[:-1] + gam[1:])))
    chord = float(xn.max() - xn.min())
    c_l = 2.0 * circ / chord
    cp = 1.0 - (0.5 * (gam[:-1] + gam[1:])) ** 2
    if flipped:
        gam = gam[::-1].copy()
        cp = cp[::-1].copy()
    return PanelSolution(gamma=gam, cp=cp, c_l=c_l)


def label_dataset(shapes: list[AirfoilShape], flow: FlowCondition
                  ) -> tuple[list[float | None], list[tuple[int, str]]]:
    """Lift coefficient per shape; failures excluded and reported.

    Returns (labels, failures) with labels[i] = None for failed items and
    failures listing (index, reason).
    """
    labels: list[float | None] = []
    failures: list[tuple[int, str]] = []
    for i, shape in enumerate(shapes):
        try:
            labels.append(solve_lift(shape, flow).c_l)
        except Exception as exc:  # per-item errors are collected, never fatal
            labels.append(None)
            failures.append((i, str(exc)))
    return labels, failures
