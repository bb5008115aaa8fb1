"""NACA 4-digit and Joukowski airfoil outlines as fixed-length point loops.

Shapes are closed polylines of ``n`` points (first and last coincide),
ordered trailing edge -> upper surface -> leading edge -> lower surface ->
trailing edge, chord-normalized so x spans exactly [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DegenerateShapeError, ParameterError, ShapeError

DEFAULT_N = 248
MIN_POINTS = 120

# thickness polynomial coefficients; last one closes the trailing edge
THICKNESS_COEFFS = (0.2969, -0.1260, -0.3516, 0.2843, -0.1015)
THICKNESS_COEFF_CLOSED_TE = -0.1036


@dataclass(frozen=True)
class AirfoilShape:
    """Closed airfoil outline, ``points`` with shape (n, 2)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def validate(self, closure_tol: float = 1e-9, chord_tol: float | None = 1e-9) -> None:
        pts = self.points
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ShapeError("points must be an (n, 2) array")
        if self.n < MIN_POINTS:
            raise ShapeError(f"need at least {MIN_POINTS} points, got {self.n}")
        if not np.all(np.isfinite(pts)):
            raise ShapeError("non-finite coordinates")
        if np.max(np.abs(pts[0] - pts[-1])) > closure_tol:
            raise ShapeError("contour is not closed: first/last points differ")
        if chord_tol is not None:
            chord = pts[:, 0].max() - pts[:, 0].min()
            if abs(chord - 1.0) > chord_tol:
                raise ShapeError(f"chord is {chord!r}, expected 1")


@dataclass(frozen=True)
class Naca4Params:
    """Camber m_camber, camber position p_pos, thickness t_thick (chord units)."""

    m_camber: float
    p_pos: float
    t_thick: float

    def __post_init__(self):
        if not (0.0 <= self.m_camber <= 0.095):
            raise ParameterError(f"m_camber {self.m_camber} outside [0, 0.095]")
        if not (0.0 <= self.p_pos <= 0.9):
            raise ParameterError(f"p_pos {self.p_pos} outside [0, 0.9]")
        if not (0.01 <= self.t_thick <= 0.40):
            raise ParameterError(f"t_thick {self.t_thick} outside [0.01, 0.40]")
        if self.m_camber == 0.0 and self.p_pos != 0.0:
            raise ParameterError("p_pos must be 0 when m_camber is 0")
        if self.m_camber > 0.0 and self.p_pos == 0.0:
            raise ParameterError("p_pos must be positive when m_camber > 0")


@dataclass(frozen=True)
class JoukowskiParams:
    """Generating circle |z - (a+bi)| = r; c_j = a + sqrt(r^2 - b^2)."""

    a: float
    b: float
    r: float = 1.1

    def __post_init__(self):
        if self.r <= 0.0:
            raise ParameterError("r must be positive")
        if self.r**2 - self.b**2 <= 0.0:
            raise ParameterError("need r^2 - b^2 > 0 for a real transform constant")

    @property
    def c_j(self) -> float:
        return self.a + np.sqrt(self.r**2 - self.b**2)


def naca4_half_thickness(t_thick: float, x, closed_te: bool = True):
    """Half-thickness of the 4-digit section at chord station x."""
    c0, c1, c2, c3, c4 = THICKNESS_COEFFS
    if closed_te:
        c4 = THICKNESS_COEFF_CLOSED_TE
    x = np.asarray(x, dtype=float)
    return 5.0 * t_thick * (c0 * np.sqrt(x) + c1 * x + c2 * x**2 + c3 * x**3 + c4 * x**4)


def naca4_camber(m_camber: float, p_pos: float, x):
    """Camber line y_c and slope dy_c/dx at chord station x."""
    x = np.asarray(x, dtype=float)
    if m_camber == 0.0:
        return np.zeros_like(x), np.zeros_like(x)
    m, p = m_camber, p_pos
    front = x < p
    yc = np.where(front, m / p**2 * (2 * p * x - x**2),
                  m / (1 - p) ** 2 * ((1 - 2 * p) + 2 * p * x - x**2))
    dyc = np.where(front, 2 * m / p**2 * (p - x), 2 * m / (1 - p) ** 2 * (p - x))
    return yc, dyc


def _cosine_loop_stations(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Chord stations for a single closed cosine loop of n points.

    beta runs 0..2pi; beta <= pi is the upper surface. The leading edge
    falls between the two middle points, so upper/lower get n/2 points each.
    """
    beta = 2.0 * np.pi * np.arange(n) / (n - 1)
    xs = 0.5 * (1.0 + np.cos(beta))
    return xs, beta <= np.pi


def normalize_chord(points: np.ndarray) -> np.ndarray:
    """Scale/shift so x spans exactly [0, 1]; y scales by the same factor."""
    out = np.array(points, dtype=float)
    xmin = out[:, 0].min()
    chord = out[:, 0].max() - xmin
    if chord <= 0:
        raise DegenerateShapeError("zero chord")
    out[:, 0] = (out[:, 0] - xmin) / chord
    out[:, 1] = out[:, 1] / chord
    return out


def signed_area(points: np.ndarray) -> float:
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _crossing_matrix(points: np.ndarray, tol: float = 1e-12):
    p = points[:-1]                       # unique vertices
    q = np.roll(p, -1, axis=0)            # segment ends
    m = len(p)
    d = q - p
    # orientation tests for all segment pairs, vectorized
    px, py = p[:, 0][:, None], p[:, 1][:, None]
    dx, dy = d[:, 0][:, None], d[:, 1][:, None]
    rx, ry = p[:, 0][None, :], p[:, 1][None, :]
    sx, sy = d[:, 0][None, :], d[:, 1][None, :]
    denom = dx * sy - dy * sx
    ux, uy = rx - px, ry - py
    t = ux * sy - uy * sx
    u = ux * dy - uy * dx
    with np.errstate(divide="ignore", invalid="ignore"):
        tt = t / denom
        uu = u / denom
    crossing = (np.abs(denom) > tol) & (tt > tol) & (tt < 1 - tol) \
        & (uu > tol) & (uu < 1 - tol)
    idx = np.arange(m)
    adjacent = (np.abs(idx[:, None] - idx[None, :]) <= 1) | \
               (np.abs(idx[:, None] - idx[None, :]) == m - 1)
    return crossing & ~adjacent, tt


def is_simple(points: np.ndarray, tol: float = 1e-12) -> bool:
    """True when no two non-adjacent segments of the closed loop cross."""
    crossing, _ = _crossing_matrix(points, tol)
    return not bool(np.any(crossing))


def crossing_x_locations(points: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Chordwise positions of all self-intersections of the closed loop."""
    crossing, tt = _crossing_matrix(points, tol)
    i, j = np.nonzero(crossing)
    if len(i) == 0:
        return np.empty(0)
    p = points[:-1]
    q = np.roll(p, -1, axis=0)
    return p[i, 0] + tt[i, j] * (q[i, 0] - p[i, 0])


def naca4_profile(params: Naca4Params, n: int = DEFAULT_N, closed_te: bool = True) -> AirfoilShape:
    """Generate a NACA 4-digit outline on the cosine loop."""
    if n < MIN_POINTS:
        raise ParameterError(f"n must be >= {MIN_POINTS}")
    if n % 2 != 0:
        raise ParameterError("n must be even")
    xs, upper = _cosine_loop_stations(n)
    yt = naca4_half_thickness(params.t_thick, xs, closed_te=closed_te)
    yc, dyc = naca4_camber(params.m_camber, params.p_pos, xs)
    theta = np.arctan(dyc)
    sign = np.where(upper, 1.0, -1.0)
    x = xs - sign * yt * np.sin(theta)
    y = yc + sign * yt * np.cos(theta)
    pts = np.column_stack([x, y])
    pts[-1] = pts[0]
    return AirfoilShape(normalize_chord(pts))


def joukowski_airfoil(params: JoukowskiParams, n: int = DEFAULT_N
                      ) -> tuple[AirfoilShape, float, float]:
    """Map the generating circle through zeta = z + c_j^2/z and rescale.

    Returns (shape, ell, m): ell is the pre-scaling minimum of Re(zeta) and m
    the pre-scaling chord, kept so the shape can be de-normalized later.
    """
    if n < MIN_POINTS:
        raise ParameterError(f"n must be >= {MIN_POINTS}")
    cj = params.c_j
    center = params.a + 1j * params.b
    # start the circle at the preimage of the trailing edge (the critical point)
    phi_te = np.angle(cj - center)
    phi = phi_te + 2.0 * np.pi * np.arange(n) / (n - 1)
    z = center + params.r * np.exp(1j * phi)
    zeta = z + cj * cj / z
    pts = np.column_stack([zeta.real, zeta.imag])
    pts[-1] = pts[0]
    area = signed_area(pts)
    chord = pts[:, 0].max() - pts[:, 0].min()
    if abs(area) < 1e-8 * chord**2:
        raise DegenerateShapeError(
            "mapped contour encloses no area (flat plate or circular arc)")
    if area < 0:   # enforce TE -> upper -> LE -> lower ordering
        pts = pts[::-1].copy()
    if not is_simple(pts):
        raise DegenerateShapeError("mapped contour self-intersects")
    ell = float(pts[:, 0].min())
    m = float(pts[:, 0].max() - ell)
    out = pts.copy()
    out[:, 0] = (pts[:, 0] - ell) / m
    out[:, 1] = pts[:, 1] / m
    return AirfoilShape(out), ell, m


def resample(shape: AirfoilShape, n: int) -> AirfoilShape:
    """Redistribute the outline onto n points with a periodic cubic spline.

    Target points sit at arc-length fractions interpolated from the input's
    own index spacing, so resampling onto the same count is the identity.
    """
    if n < MIN_POINTS:
        raise ParameterError(f"n must be >= {MIN_POINTS}")
    pts = np.asarray(shape.points, dtype=float)
    if len(pts) < 4:
        raise ShapeError("need at least 4 points to resample")
    if not is_simple(pts):
        raise DegenerateShapeError("input contour self-intersects")
    closed = np.max(np.abs(pts[0] - pts[-1])) < 1e-9
    loop = pts if closed else np.vstack([pts, pts[0]])
    seg = np.hypot(np.diff(loop[:, 0]), np.diff(loop[:, 1]))
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        raise DegenerateShapeError("zero-perimeter contour")
    spl = CubicSpline(s, loop, axis=0, bc_type="periodic")
    # index-proportional arc-length targets preserve the input spacing pattern
    u = np.arange(n) * (len(loop) - 1) / (n - 1)
    s_new = np.interp(u, np.arange(len(loop)), s)
    out = spl(s_new)
    out[-1] = out[0]
    return AirfoilShape(out)


def flatten(shape: AirfoilShape) -> np.ndarray:
    """Shape -> vector (x_1..x_n, y_1..y_n)."""
    return np.concatenate([shape.points[:, 0], shape.points[:, 1]])


def unflatten(vector: np.ndarray, n: int = DEFAULT_N) -> AirfoilShape:
    """Vector (x_1..x_n, y_1..y_n) -> shape; length must be exactly 2n."""
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1 or len(vector) != 2 * n:
        raise ShapeError(f"expected a flat vector of length {2 * n}, got {vector.shape}")
    return AirfoilShape(np.column_stack([vector[:n], vector[n:]]))
