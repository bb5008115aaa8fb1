"""Inverse conformal transform, closed-form circle fit, and roundness.

De-normalize a unit-chord shape with (ell, m), pull it back through
z = (zeta +/- sqrt(zeta^2 - 4 c_j^2)) / 2, and measure how well the result
matches a generating circle of the reference radius 1.1. A true mapped-circle
airfoil gives machine-zero roundness; anything else keeps a visible residual.

The search over (c_j, ell, m) is restricted to the geometric envelope of the
mapped-circle family (trailing edge at 2*c_j, chord close to 4*c_j, generator
on the canonical side). Without these walls the problem is degenerate: any
thin shape squeezed onto the branch-cut segment lands on the circle |z| = c_j
and every shape scores near zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import OptimizationError, ParameterError, ShapeError
from .geometry import AirfoilShape

R_REF = 1.1

# family envelope: chord/c_j spans [4.0, 4.146] over the generator grid
RATIO_LO, RATIO_HI = 3.99, 4.17
TE_TOL = 0.02
CJ_LO, CJ_HI = 0.55, 2.2
M_LO, M_HI = 2.0, 9.0
MEMBER_GATE = 5e-6            # mean residual below this counts as family member
COVERAGE_BINS = 12            # inverse image must wrap fully around its center
_BIG = 1e18

_COARSE_C = np.arange(0.80, 1.6001, 0.025)
_COARSE_RATIO = (3.99, 4.03, 4.07, 4.11, 4.15)


@dataclass(frozen=True)
class CircleFit:
    """Least-squares circle through a point set.

    omega is the summed squared residual sum((x^2+y^2+Ax+By+C)^2) with
    A = -2a, B = -2b, C = a^2 + b^2 - r_fit^2.
    """

    a: float
    b: float
    r_fit: float
    omega: float

    @property
    def abc(self) -> tuple[float, float, float]:
        return -2.0 * self.a, -2.0 * self.b, self.a**2 + self.b**2 - self.r_fit**2


@dataclass(frozen=True)
class InverseFitResult:
    """Best inverse transform found for a shape."""

    c_j: float
    ell: float
    m: float
    fit: CircleFit
    w: float                  # fit.omega at the optimum (sum over points)
    refined: bool             # True when the shape was accepted as a family member


def denormalize(shape: AirfoilShape, ell: float, m: float) -> np.ndarray:
    """Undo the chord scaling: complex zeta with Re = x*m + ell, Im = y*m."""
    if m <= 0:
        raise ParameterError("de-normalization scale m must be positive")
    return (shape.x * m + ell) + 1j * (shape.y * m)


def _both_roots(zeta: np.ndarray, c_j: float) -> tuple[np.ndarray, np.ndarray]:
    s = np.sqrt(zeta * zeta - 4.0 * c_j * c_j + 0j)
    return 0.5 * (zeta + s), 0.5 * (zeta - s)


def inverse_map(shape: AirfoilShape, c_j: float, ell: float, m: float,
                branch: int = 1) -> np.ndarray:
    """Inverse transform with the branch chosen continuously along the contour.

    Continuity is enforced by flipping the square-root sign whenever the path
    of zeta^2 - 4 c_j^2 crosses the branch cut, which keeps each returned
    family on one of the two preimage circles even where they nearly touch;
    branch=+1/-1 selects the family. The two families are complementary:
    elementwise their product is c_j^2.
    """
    if branch not in (1, -1):
        raise ParameterError("branch must be +1 or -1")
    zeta = denormalize(shape, ell, m)
    fam_a, fam_b = _families_fast(zeta, c_j)
    return fam_a if branch == 1 else fam_b


def _families_fast(zeta: np.ndarray, c_j: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized continuity split: track branch-cut crossings of zeta^2-4c^2."""
    d = zeta * zeta - 4.0 * c_j * c_j
    s = np.sqrt(d)
    im0, im1 = d.imag[:-1], d.imag[1:]
    re0, re1 = d.real[:-1], d.real[1:]
    opp = (im0 > 0) != (im1 > 0)
    denom = np.where(im0 == im1, 1.0, im0 - im1)
    re_cross = re0 + (re1 - re0) * np.where(im0 == im1, 0.5, im0 / denom)
    flip = np.where(opp & (re_cross < 0.0), -1.0, 1.0)
    sign = np.concatenate([[1.0], np.cumprod(flip)])
    return 0.5 * (zeta + sign * s), 0.5 * (zeta - sign * s)


def fit_circle(points: np.ndarray) -> CircleFit:
    """Solve the 3x3 normal system for (A, B, C) and convert to center/radius."""
    pts = np.asarray(points)
    if np.iscomplexobj(pts):
        x, y = pts.real.astype(float), pts.imag.astype(float)
    else:
        x, y = pts[:, 0].astype(float), pts[:, 1].astype(float)
    if len(x) < 3:
        raise ShapeError("circle fit needs at least 3 points")
    sx, sy = x.sum(), y.sum()
    mat = np.array([[x @ x, x @ y, sx],
                    [x @ y, y @ y, sy],
                    [sx, sy, float(len(x))]])
    r2 = x * x + y * y
    rhs = -np.array([r2 @ x, r2 @ y, r2.sum()])
    try:
        abc = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError as exc:
        raise ShapeError(f"singular circle-fit system (collinear points?): {exc}") from exc
    if not np.all(np.isfinite(abc)):
        raise ShapeError("circle fit produced non-finite coefficients")
    big_a, big_b, big_c = abc
    a, b = -big_a / 2.0, -big_b / 2.0
    rr = a * a + b * b - big_c
    if rr <= 0:
        raise ShapeError("circle fit produced a non-positive radius")
    resid = r2 + big_a * x + big_b * y + big_c
    return CircleFit(a=float(a), b=float(b), r_fit=float(np.sqrt(rr)),
                     omega=float(resid @ resid))


def _kasa_center(x: np.ndarray, y: np.ndarray):
    """Center of the least-squares circle via Cramer's rule (hot path)."""
    n = float(len(x))
    sx, sy = x.sum(), y.sum()
    sxx, sxy, syy = x @ x, x @ y, y @ y
    r2 = x * x + y * y
    b1, b2, b3 = -(r2 @ x), -(r2 @ y), -r2.sum()
    det = (sxx * (syy * n - sy * sy) - sxy * (sxy * n - sy * sx)
           + sx * (sxy * sy - syy * sx))
    if not np.isfinite(det) or abs(det) < 1e-300:
        return None
    big_a = (b1 * (syy * n - sy * sy) - sxy * (b2 * n - sy * b3)
             + sx * (b2 * sy - syy * b3)) / det
    big_b = (sxx * (b2 * n - sy * b3) - b1 * (sxy * n - sy * sx)
             + sx * (sxy * b3 - b2 * sx)) / det
    if not (np.isfinite(big_a) and np.isfinite(big_b)):
        return None
    return -big_a / 2.0, -big_b / 2.0


def _family_mean_resid(fam: np.ndarray) -> float:
    center = _kasa_center(fam.real, fam.imag)
    if center is None or center[0] < CENTER_RE_MIN:
        return np.inf
    resid = (fam.real - center[0]) ** 2 + (fam.imag - center[1]) ** 2 - R_REF**2
    return float(resid @ resid) / len(fam)


def _covers_center(x: np.ndarray, y: np.ndarray, a: float, b: float) -> bool:
    ang = np.arctan2(y - b, x - a)
    bins = ((ang + np.pi) * (COVERAGE_BINS / (2.0 * np.pi))).astype(int) % COVERAGE_BINS
    return len(np.unique(bins)) == COVERAGE_BINS


def _refined_selection(sel: np.ndarray, z1: np.ndarray, z2: np.ndarray
                       ) -> np.ndarray:
    """Let each point switch to the root nearer the currently fitted circle."""
    for _ in range(3):
        center = _kasa_center(sel.real, sel.imag)
        if center is None:
            break
        d1 = np.abs((z1.real - center[0]) ** 2 + (z1.imag - center[1]) ** 2 - R_REF**2)
        d2 = np.abs((z2.real - center[0]) ** 2 + (z2.imag - center[1]) ** 2 - R_REF**2)
        sel = np.where(d1 <= d2, z1, z2)
    return sel


def _pinned_value(sel: np.ndarray) -> float:
    center = _kasa_center(sel.real, sel.imag)
    if center is None or not _covers_center(sel.real, sel.imag, *center):
        return np.inf
    resid = (sel.real - center[0]) ** 2 + (sel.imag - center[1]) ** 2 - R_REF**2
    return float(resid @ resid) / len(sel)


def _member_resid(zeta: np.ndarray, c_j: float) -> float:
    """Pinned-radius residual of the generating-circle family.

    Root families are seeded by branch-cut continuity tracking, then refined
    by reassigning each point to the root nearer the fitted circle (any fixed
    rule mis-tracks near the branch points; the refinement is what makes
    exact members reach zero). The image must wrap fully around the fitted
    center: partial arcs (thin shapes squeezed onto the branch-cut segment)
    are not circles.
    """
    fam_a, fam_b = _families_fast(zeta, c_j)
    best = np.inf
    for seed in (fam_a, fam_b):
        sel = _refined_selection(seed, fam_a, fam_b)
        best = min(best, _pinned_value(sel))
    return best


def _member_family(zeta: np.ndarray, c_j: float) -> np.ndarray:
    """The selected generating-circle family at a configuration."""
    fam_a, fam_b = _families_fast(zeta, c_j)
    best_sel, best_v = fam_a, np.inf
    for seed in (fam_a, fam_b):
        sel = _refined_selection(seed, fam_a, fam_b)
        v = _pinned_value(sel)
        if v < best_v:
            best_sel, best_v = sel, v
    return best_sel


def _in_envelope(theta: np.ndarray) -> bool:
    c_j, ell, m = theta
    if not (CJ_LO <= c_j <= CJ_HI and M_LO <= m <= M_HI):
        return False
    if not (RATIO_LO <= m / c_j <= RATIO_HI):
        return False
    return abs(ell + m - 2.0 * c_j) <= TE_TOL * c_j


def _objective(theta: np.ndarray, shape: AirfoilShape) -> float:
    if not _in_envelope(theta):
        return _BIG
    c_j, ell, m = theta
    v = _member_resid(denormalize(shape, ell, m), c_j)
    return v if np.isfinite(v) else _BIG


def _batched_centers(x: np.ndarray, y: np.ndarray):
    """Rowwise Kasa centers for stacked point sets."""
    n = x.shape[1]
    sx, sy = x.sum(axis=1), y.sum(axis=1)
    sxx = np.einsum("ij,ij->i", x, x)
    sxy = np.einsum("ij,ij->i", x, y)
    syy = np.einsum("ij,ij->i", y, y)
    r2 = x * x + y * y
    b1 = -np.einsum("ij,ij->i", r2, x)
    b2 = -np.einsum("ij,ij->i", r2, y)
    b3 = -r2.sum(axis=1)
    det = (sxx * (syy * n - sy * sy) - sxy * (sxy * n - sy * sx)
           + sx * (sxy * sy - syy * sx))
    safe = (np.abs(det) > 1e-300) & np.isfinite(det)
    det = np.where(safe, det, 1.0)
    big_a = (b1 * (syy * n - sy * sy) - sxy * (b2 * n - sy * b3)
             + sx * (b2 * sy - syy * b3)) / det
    big_b = (sxx * (b2 * n - sy * b3) - b1 * (sxy * n - sy * sx)
             + sx * (sxy * b3 - b2 * sx)) / det
    return -big_a / 2.0, -big_b / 2.0, safe


def _coarse_scan(shape: AirfoilShape) -> tuple[float, np.ndarray]:
    """Best canonical grid node; all nodes evaluated in one batched pass."""
    cs = np.repeat(_COARSE_C, len(_COARSE_RATIO))
    ratios = np.tile(_COARSE_RATIO, len(_COARSE_C))
    ms = ratios * cs
    ells = 2.0 * cs - ms
    k = len(cs)
    zeta = shape.x[None, :] * ms[:, None] + ells[:, None] \
        + 1j * (shape.y[None, :] * ms[:, None])
    d = zeta * zeta - 4.0 * (cs * cs)[:, None]
    s = np.sqrt(d)
    im0, im1 = d.imag[:, :-1], d.imag[:, 1:]
    re0, re1 = d.real[:, :-1], d.real[:, 1:]
    opp = (im0 > 0) != (im1 > 0)
    denom = np.where(im0 == im1, 1.0, im0 - im1)
    re_cross = re0 + (re1 - re0) * np.where(im0 == im1, 0.5, im0 / denom)
    flip = np.where(opp & (re_cross < 0.0), -1.0, 1.0)
    sign = np.concatenate([np.ones((k, 1)), np.cumprod(flip, axis=1)], axis=1)
    fam_a = 0.5 * (zeta + sign * s)
    fam_b = 0.5 * (zeta - sign * s)
    best_v, best_i = np.inf, 0
    for seed in (fam_a, fam_b):
        sel = seed
        for _ in range(3):
            a, b, safe = _batched_centers(sel.real, sel.imag)
            d1 = np.abs((fam_a.real - a[:, None]) ** 2
                        + (fam_a.imag - b[:, None]) ** 2 - R_REF**2)
            d2 = np.abs((fam_b.real - a[:, None]) ** 2
                        + (fam_b.imag - b[:, None]) ** 2 - R_REF**2)
            sel = np.where(d1 <= d2, fam_a, fam_b)
        a, b, safe = _batched_centers(sel.real, sel.imag)
        resid = (sel.real - a[:, None]) ** 2 + (sel.imag - b[:, None]) ** 2 - R_REF**2
        vals = np.einsum("ij,ij->i", resid, resid) / zeta.shape[1]
        ang = np.arctan2(sel.imag - b[:, None], sel.real - a[:, None])
        bins = ((ang + np.pi) * (COVERAGE_BINS / (2.0 * np.pi))).astype(int) % COVERAGE_BINS
        rows = np.arange(k)[:, None] * COVERAGE_BINS + bins
        occupancy = np.bincount(rows.ravel(), minlength=k * COVERAGE_BINS)
        covered = (occupancy.reshape(k, COVERAGE_BINS) > 0).all(axis=1)
        vals = np.where(safe & covered & np.isfinite(vals), vals, np.inf)
        i = int(np.argmin(vals))
        if vals[i] < best_v:
            best_v, best_i = float(vals[i]), i
    return best_v, np.array([cs[best_i], ells[best_i], ms[best_i]])


def roundness(shape: AirfoilShape, refine: bool = True) -> InverseFitResult:
    """Minimized circle-fit residual of the inverse transform.

    Two phases: a deterministic scan plus local Nelder-Mead descents locate
    the best family-envelope configuration; shapes whose residual drops below
    the membership gate are refined to convergence (recovering c_j, ell, m of
    an exact member), all others report the canonical configuration's
    residual. Pass refine=False to skip the costly refinement when only the
    member/non-member distinction matters.
    """
    v0, th0 = _coarse_scan(shape)
    if th0 is None or not np.isfinite(v0) or v0 >= _BIG:
        raise OptimizationError("no admissible inverse-transform configuration found")
    # one local descent from the best node decides membership: true members
    # converge far below the gate from there, non-members stay orders above
    loose = dict(xatol=1e-6, fatol=1e-9, maxiter=250)
    res = minimize(_objective, th0, args=(shape,), method="Nelder-Mead", options=loose)
    best_x, best_f = (res.x, res.fun) if res.fun < v0 else (th0, v0)
    if best_f >= MEMBER_GATE:
        for dc in (-0.012, 0.012):   # borderline: try neighboring starts
            if best_f < MEMBER_GATE or best_f > 50 * MEMBER_GATE:
                break
            c0 = th0[0] + dc
            ratio = th0[2] / th0[0]
            th = np.array([c0, (2.0 - ratio) * c0, ratio * c0])
            res = minimize(_objective, th, args=(shape,), method="Nelder-Mead",
                           options=loose)
            if res.fun < best_f:
                best_x, best_f = res.x, res.fun
    member = best_f < MEMBER_GATE
    if member:
        if refine:
            best_x, best_f = _polish(shape, best_x)
        theta = best_x
    else:
        theta = th0          # canonical configuration, not the descended one
        best_f = v0
    fam = _member_family(denormalize(shape, theta[1], theta[2]), theta[0])
    center = _kasa_center(fam.real, fam.imag)
    if center is None:
        raise OptimizationError("circle fit degenerate at the reported optimum")
    resid = (fam.real - center[0]) ** 2 + (fam.imag - center[1]) ** 2 - R_REF**2
    w = float(resid @ resid)
    fit = CircleFit(a=float(center[0]), b=float(center[1]), r_fit=R_REF, omega=w)
    return InverseFitResult(c_j=float(theta[0]), ell=float(theta[1]), m=float(theta[2]),
                            fit=fit, w=w, refined=bool(member and refine))


def _roundness_w(args) -> float:
    points, refine = args
    return roundness(AirfoilShape(points), refine=refine).w


def roundness_sweep(shapes, refine: bool = False, processes: int | None = None
                    ) -> np.ndarray:
    """Roundness w for many shapes, in order, optionally across processes."""
    import os
    from concurrent.futures import ProcessPoolExecutor

    work = [(np.asarray(s.points if isinstance(s, AirfoilShape) else s), refine)
            for s in shapes]
    if processes is None:
        processes = os.cpu_count() or 1
    if processes <= 1 or len(work) < 8:
        return np.array([_roundness_w(a) for a in work])
    with ProcessPoolExecutor(max_workers=processes) as pool:
        return np.array(list(pool.map(_roundness_w, work, chunksize=32)))


def _polish(shape: AirfoilShape, x0: np.ndarray) -> tuple[np.ndarray, float]:
    """Grind a member to convergence on the trailing-edge-pinned manifold.

    Exact members satisfy ell + m = 2 c_j, so the refinement searches (c_j, m)
    with ell eliminated, restarting with progressively smaller simplexes. If
    the zero found is the inverted-circle twin (fitted center left of the
    axis), rescale onto the canonical generator and refine again.
    """
    def fn2(t2):
        return _objective(np.array([t2[0], 2.0 * t2[0] - t2[1], t2[1]]), shape)

    def descend(x2, f0):
        best_x2, best_f = x2, f0
        for eps in (3e-3, 3e-4, 3e-5, 3e-6, 3e-7, 3e-8):
            sim = [best_x2]
            for k in range(2):
                p = best_x2.copy()
                p[k] += eps * max(abs(best_x2[k]), 1.0)
                sim.append(p)
            res = minimize(fn2, best_x2, method="Nelder-Mead",
                           options=dict(initial_simplex=np.array(sim),
                                        xatol=1e-13, fatol=1e-17, maxiter=500))
            if res.fun < best_f:
                best_x2, best_f = res.x, res.fun
        return best_x2, best_f

    x2 = np.array([x0[0], x0[2]])
    x2, f = descend(x2, fn2(x2))
    x2, f = _picard_refine(shape, x2, f, fn2)
    theta = np.array([x2[0], 2.0 * x2[0] - x2[1], x2[1]])
    zeta = denormalize(shape, theta[1], theta[2])
    sel = _member_family(zeta, theta[0])
    center = _kasa_center(sel.real, sel.imag)
    if center is not None and center[0] < 0.0:
        # complement family is the canonical circle; rescale so it has R_REF
        prod = theta[0] ** 2  # elementwise product of the two roots is c_j^2
        other = prod / sel
        try:
            r_other = fit_circle(other).r_fit
        except ShapeError:
            r_other = None
        if r_other and r_other > 0:
            lam = R_REF / r_other
            x2b = np.array([theta[0] * lam, theta[2] * lam])
            x2b, fb = descend(x2b, fn2(x2b))
            x2b, fb = _picard_refine(shape, x2b, fb, fn2)
            if fb < MEMBER_GATE:
                x2, f = x2b, fb
    return np.array([x2[0], 2.0 * x2[0] - x2[1], x2[1]]), f


def _picard_refine(shape: AirfoilShape, x2: np.ndarray, f: float, fn2
                   ) -> tuple[np.ndarray, float]:
    """Fixed-point refinement for exact members.

    The fitted circle of the current family implies a generator: its critical
    point a + sqrt(r^2 - b^2) and a rescale that pins the radius. Iterating
    the implied parameters contracts straight onto an exact member; for
    non-members the first worsening step stops the loop.
    """
    best_x2, best_f = x2, f
    cur = x2.copy()
    for _ in range(12):
        c_j, m = cur
        if m <= 0 or c_j <= 0:
            break
        zeta = denormalize(shape, 2.0 * c_j - m, m)
        sel = _member_family(zeta, c_j)
        try:
            fit = fit_circle(sel)
        except ShapeError:
            break
        rr = fit.r_fit**2 - fit.b**2
        if rr <= 0:
            break
        lam = R_REF / fit.r_fit
        cur = np.array([lam * (fit.a + np.sqrt(rr)), lam * m])
        val = fn2(cur)
        if val < best_f:
            best_x2, best_f = cur.copy(), val
        if val > 10.0 * best_f + 1e-30:
            break
    return best_x2, best_f
