import numpy as np
import pytest

from foilgen import aero, dataset as ds, geometry
from foilgen.errors import FormatError, ParameterError


@pytest.fixture(scope="module")
def small_naca(flow):
    grid = {"m_camber": [0.0, 0.02], "p_pos": [0.4], "t_thick": [0.08, 0.12, 0.16]}
    data, failures = ds.build_naca(flow, grid=grid)
    assert failures == []
    return data


@pytest.fixture(scope="module")
def small_jouk(flow):
    grid = {"a_step": 0.05, "a_max": 0.15, "b_step": 0.05, "b_max": 0.1, "r": 1.1}
    data, failures = ds.build_joukowski(flow, grid=grid, stride=(1, 1))
    return data


class TestBuild:
    def test_single_item_grid(self, flow):
        grid = {"m_camber": [0.02], "p_pos": [0.4], "t_thick": [0.12]}
        data, failures = ds.build_naca(flow, grid=grid)
        assert len(data) == 1 and failures == []
        assert data.items[0].family == ds.FAMILY_NACA
        assert np.isfinite(data.items[0].c_l)

    def test_default_grid_size(self):
        params = ds.naca_param_list()
        # 9 cambered values x 21 positions x 19 thicknesses + 19 symmetric
        assert len(params) == 9 * 21 * 19 + 19

    def test_naca_small(self, small_naca):
        assert len(small_naca) == 2 * 1 * 3
        for it in small_naca.items:
            it.shape.validate()

    def test_joukowski_grid_arithmetic(self):
        # full stated grid: 101 x 201 pairs minus the flat plate at the origin
        params = ds.joukowski_param_list(stride=(1, 1))
        assert len(params) == 101 * 201 - 1

    def test_joukowski_excludes_arcs(self, small_jouk):
        # a = 0 members are zero-thickness arcs and must be excluded
        assert all(it.params["a"] > 0 for it in small_jouk.items)
        assert small_jouk.meta["failures"] > 0

    def test_joukowski_r_fixed(self, small_jouk):
        assert all(it.params["r"] == 1.1 for it in small_jouk.items)

    def test_joukowski_stores_denormalization(self, small_jouk):
        it = small_jouk.items[0]
        assert {"ell", "m", "c_j"} <= set(it.params)
        assert it.params["m"] > 0


class TestSplit:
    def test_ten_items(self, small_naca, small_jouk):
        data = ds.merge(small_naca, small_jouk)
        assert len(data) >= 10
        sp = ds.split(data, ratio=0.9, seed=1)
        n = len(data)
        assert len(sp.train_ids) == int(np.floor(0.9 * n))
        assert len(sp.train_ids) + len(sp.test_ids) == n
        assert set(sp.train_ids) & set(sp.test_ids) == set()

    def test_deterministic(self, small_naca, small_jouk):
        data = ds.merge(small_naca, small_jouk)
        assert ds.split(data, seed=7) == ds.split(data, seed=7)
        assert ds.split(data, seed=7) != ds.split(data, seed=8)

    def test_order_invariance(self, small_naca, small_jouk):
        data = ds.merge(small_naca, small_jouk)
        shuffled = ds.Dataset(items=list(reversed(data.items)),
                              n_points=data.n_points, alpha=data.alpha)
        assert ds.split(data, seed=3) == ds.split(shuffled, seed=3)

    def test_ratio_arithmetic(self):
        # 3696 items at 9:1 -> 3326 train / 370 test (floor convention)
        assert int(np.floor(0.9 * 3696)) == 3326

    def test_too_small(self, flow):
        grid = {"m_camber": [0.0], "p_pos": [0.0], "t_thick": [0.12]}
        data, _ = ds.build_naca(flow, grid=grid)
        with pytest.raises(ParameterError):
            ds.split(data)


class TestDuplicate:
    def test_factor_one_unchanged(self, small_naca):
        out = ds.duplicate_family(small_naca, ds.FAMILY_NACA, 1)
        assert len(out) == len(small_naca)

    def test_triple_joukowski(self, small_naca, small_jouk):
        data = ds.merge(small_naca, small_jouk)
        n_naca = len(data.family(ds.FAMILY_NACA))
        n_jouk = len(data.family(ds.FAMILY_JOUKOWSKI))
        out = ds.duplicate_family(data, ds.FAMILY_JOUKOWSKI, 3)
        assert len(out.family(ds.FAMILY_JOUKOWSKI)) == 3 * n_jouk
        assert len(out.family(ds.FAMILY_NACA)) == n_naca
        assert len(out) == n_naca + 3 * n_jouk
        ids = [it.id for it in out.items]
        assert len(set(ids)) == len(ids)

    def test_unknown_family(self, small_naca):
        with pytest.raises(ParameterError):
            ds.duplicate_family(small_naca, "bezier", 2)


class TestPersistence:
    def test_roundtrip_bit_exact(self, small_naca, tmp_path):
        path = tmp_path / "d.txt"
        ds.save(small_naca, path)
        back = ds.load(path)
        assert len(back) == len(small_naca)
        assert back.n_points == small_naca.n_points
        assert back.alpha == small_naca.alpha
        for a, b in zip(small_naca.items, back.items):
            assert a.id == b.id and a.family == b.family
            assert a.c_l == b.c_l
            assert a.params == b.params
            assert np.array_equal(a.shape.points, b.shape.points)

    def test_truncation_detected(self, small_naca, tmp_path):
        path = tmp_path / "d.txt"
        ds.save(small_naca, path)
        raw = path.read_text()
        path.write_text(raw[: len(raw) // 2])
        with pytest.raises(FormatError):
            ds.load(path)

    def test_corruption_detected(self, small_naca, tmp_path):
        path = tmp_path / "d.txt"
        ds.save(small_naca, path)
        raw = path.read_text().replace("naca-m0.02", "naca-m0.03", 1)
        path.write_text(raw)
        with pytest.raises(FormatError):
            ds.load(path)

    def test_header_declares_n(self, small_naca, tmp_path):
        import json
        path = tmp_path / "d.txt"
        ds.save(small_naca, path)
        header = json.loads(path.read_text().splitlines()[0])
        assert header["n"] == 248
