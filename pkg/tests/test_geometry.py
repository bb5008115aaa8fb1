import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foilgen import geometry
from foilgen.errors import DegenerateShapeError, ParameterError, ShapeError

from oracles import naca4_points_reference

# frozen from the standard thickness polynomial at x = 0.30 (t = 0.12)
NACA0012_HALF_THICKNESS_030_OPEN = 0.060017266393970287
NACA0012_HALF_THICKNESS_030_CLOSED = 0.060007060393970281


class TestNaca4:
    def test_symmetric_mirror(self, naca0012):
        pts = naca0012.points
        # every (x, y) has a mirrored partner (x, -y)
        flipped = pts.copy()
        flipped[:, 1] *= -1
        for p in pts:
            assert np.min(np.linalg.norm(flipped - p, axis=1)) < 1e-9

    def test_half_thickness_standard_polynomial(self):
        got = geometry.naca4_half_thickness(0.12, 0.30, closed_te=False)
        assert abs(got - NACA0012_HALF_THICKNESS_030_OPEN) < 1e-15

    def test_half_thickness_closed_variant(self):
        got = geometry.naca4_half_thickness(0.12, 0.30, closed_te=True)
        assert abs(got - NACA0012_HALF_THICKNESS_030_CLOSED) < 1e-15

    def test_closed_te_thickness_vanishes(self):
        assert abs(geometry.naca4_half_thickness(0.12, 1.0)) < 1e-15

    def test_flattened_length(self, naca2412):
        assert len(geometry.flatten(naca2412)) == 2 * 248

    def test_matches_pointwise_reference(self):
        for (m, p, t) in [(0.0, 0.0, 0.12), (0.02, 0.4, 0.12), (0.09, 0.7, 0.24),
                          (0.01, 0.2, 0.06)]:
            shape = geometry.naca4_profile(geometry.Naca4Params(m, p, t))
            ref = naca4_points_reference(m, p, t)
            assert np.max(np.abs(shape.points - ref)) < 1e-9

    def test_invariants_on_grid(self):
        for (m, p, t) in [(0.0, 0.0, 0.06), (0.05, 0.3, 0.15), (0.09, 0.7, 0.24)]:
            shape = geometry.naca4_profile(geometry.Naca4Params(m, p, t))
            shape.validate()
            assert geometry.is_simple(shape.points)
            assert geometry.signed_area(shape.points) > 0

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            geometry.Naca4Params(0.2, 0.4, 0.12)
        with pytest.raises(ParameterError):
            geometry.Naca4Params(0.0, 0.4, 0.12)   # camberless with p != 0
        with pytest.raises(ParameterError):
            geometry.Naca4Params(0.02, 0.4, 0.005)
        with pytest.raises(ParameterError):
            geometry.naca4_profile(geometry.Naca4Params(0.0, 0.0, 0.12), n=100)
        with pytest.raises(ParameterError):
            geometry.naca4_profile(geometry.Naca4Params(0.0, 0.0, 0.12), n=249)


class TestJoukowski:
    def test_flat_plate_rejected(self):
        with pytest.raises(ParameterError):
            geometry.JoukowskiParams(a=0.0, b=0.0, r=0.0)
        with pytest.raises(DegenerateShapeError):
            geometry.joukowski_airfoil(geometry.JoukowskiParams(a=0.0, b=0.0, r=1.1))

    def test_circular_arc_rejected(self):
        # a = 0 with camber puts both critical points on the circle: zero thickness
        with pytest.raises(DegenerateShapeError):
            geometry.joukowski_airfoil(geometry.JoukowskiParams(a=0.0, b=0.05, r=1.1))

    def test_symmetric_when_uncambered(self):
        shape, _, _ = geometry.joukowski_airfoil(geometry.JoukowskiParams(0.1, 0.0, 1.1))
        pts = shape.points
        flipped = pts.copy()
        flipped[:, 1] *= -1
        for p in pts:
            assert np.min(np.linalg.norm(flipped - p, axis=1)) < 1e-9

    def test_cambered_roundtrip_recovers_circle(self, jouk_default):
        params, shape, ell, m = jouk_default
        from foilgen.inverse import inverse_map

        def circle_residual(branch):
            z = inverse_map(shape, params.c_j, ell, m, branch=branch)
            return np.abs((z.real - params.a) ** 2 + (z.imag - params.b) ** 2
                          - params.r**2)
        resid = min((circle_residual(b) for b in (-1, 1)), key=np.max)
        # the trailing edge sits on the branch point, where one ulp of
        # de-normalization noise is amplified by the square root
        assert np.max(resid[1:-1]) < 1e-9
        assert np.max(resid[[0, -1]]) < 1e-6

    def test_invariants(self, jouk_default):
        _, shape, ell, m = jouk_default
        shape.validate()
        assert m > 0
        assert geometry.signed_area(shape.points) > 0
        assert shape.points[0, 0] == pytest.approx(1.0, abs=1e-12)  # TE first

    def test_scaling_bookkeeping(self, jouk_default):
        params, shape, ell, m = jouk_default
        # de-normalizing puts the trailing edge back at 2*c_j
        assert shape.x.max() * m + ell == pytest.approx(2 * params.c_j, abs=1e-9)


class TestResample:
    def test_near_identity(self, naca2412):
        out = geometry.resample(naca2412, naca2412.n)
        assert np.max(np.abs(out.points - naca2412.points)) < 1e-6

    def test_circle_resample(self):
        th = np.linspace(0, 2 * np.pi, 1000)
        pts = np.column_stack([np.cos(th), np.sin(th)])
        out = geometry.resample(geometry.AirfoilShape(pts), 248)
        radii = np.linalg.norm(out.points, axis=1)
        assert np.max(np.abs(radii - 1.0)) < 1e-5

    def test_point_floor(self, naca2412):
        with pytest.raises(ParameterError):
            geometry.resample(naca2412, 100)

    def test_self_intersection_rejected(self):
        # a bowtie loop
        pts = np.array([[0, 0], [1, 1], [1, 0], [0, 1], [0, 0]], dtype=float)
        with pytest.raises(DegenerateShapeError):
            geometry.resample(geometry.AirfoilShape(pts), 248)

    def test_preserves_closure_and_count(self, jouk_default):
        _, shape, _, _ = jouk_default
        out = geometry.resample(shape, 496)
        assert out.n == 496
        assert np.allclose(out.points[0], out.points[-1])


class TestFlatten:
    def test_roundtrip_exact(self, naca2412):
        vec = geometry.flatten(naca2412)
        back = geometry.unflatten(vec, naca2412.n)
        assert np.array_equal(back.points, naca2412.points)

    def test_bad_length(self):
        with pytest.raises(ShapeError):
            geometry.unflatten(np.zeros(495), 248)

    @given(st.integers(min_value=60, max_value=130))
    @settings(max_examples=20, deadline=None)
    def test_roundtrip_any_n(self, half_n):
        n = 2 * half_n
        rng = np.random.default_rng(half_n)
        pts = rng.standard_normal((n, 2))
        vec = np.concatenate([pts[:, 0], pts[:, 1]])
        assert np.array_equal(
            geometry.flatten(geometry.AirfoilShape(pts)), vec)
        assert np.array_equal(geometry.unflatten(vec, n).points, pts)
