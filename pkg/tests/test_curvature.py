import math

import numpy as np
import pytest
from scipy import sparse

import oracles
from conftest import log_uniform, random_pattern
from circpat.curvature import (
    CurvatureVector,
    bigon_areas,
    face_cone_angle,
    gauss_bonnet_report,
    jacobian,
    total_curvatures,
    totals,
)
from circpat.graph import Edge, Face, PatternGraph, generate_torus_grid
from circpat.spherical import DomainError

# oracle values for the orthogonal unit torus (all k = 1, theta = pi/2)
T_UNIT = 5.4040868708483198  # 8 c arccot(c), c = 1/sqrt(2), mpmath
ALPHA_UNIT = 7.6425329449960745  # 4 * central angle
AREA_UNIT = 12.234128740348388  # 9 alpha - 18 pi


@pytest.fixture
def grid3():
    return generate_torus_grid(3)


def test_oracle_constants():
    c = 1 / math.sqrt(2)
    assert 8 * c * math.atan2(1, c) == pytest.approx(T_UNIT, abs=1e-14)
    assert oracles.mp_arc_total(1, 1, math.pi / 2) * 4 == pytest.approx(T_UNIT, abs=1e-14)
    assert 4 * oracles.embedded_central_angle(1, 1, math.pi / 2) == pytest.approx(ALPHA_UNIT, abs=1e-13)
    assert 9 * ALPHA_UNIT - 18 * math.pi == pytest.approx(AREA_UNIT, abs=1e-12)


class TestCurvatureVector:
    def test_validation(self):
        with pytest.raises(DomainError):
            CurvatureVector(("a",), np.array([0.0]))
        with pytest.raises(ValueError):
            CurvatureVector(("a", "b"), np.array([1.0]))

    def test_read_only_copy(self):
        src = np.array([1.0, 2.0])
        k = CurvatureVector(("a", "b"), src)
        src[0] = 5.0
        assert k["a"] == 1.0
        with pytest.raises(ValueError):
            k.values[0] = 3.0

    def test_log_view(self):
        k = CurvatureVector.from_log(("a", "b"), np.array([0.0, math.log(3)]))
        assert k.as_dict() == pytest.approx({"a": 1.0, "b": 3.0})
        assert np.allclose(k.u, [0.0, math.log(3)])


class TestTotals:
    def test_unit_grid(self, grid3):
        T = total_curvatures(grid3, np.ones(9))
        assert np.allclose(T, T_UNIT, atol=1e-14, rtol=0)

    def test_face_mapping_input(self, grid3):
        k = {f: 1.0 for f in grid3.face_ids}
        assert np.allclose(total_curvatures(grid3, k), T_UNIT)

    def test_mismatched_faces(self, grid3):
        with pytest.raises(ValueError):
            total_curvatures(grid3, {"f0_0": 1.0})
        with pytest.raises(ValueError):
            total_curvatures(grid3, CurvatureVector(("x",) * 9, np.ones(9)))

    def test_bounds(self, rng):
        for n in range(1, 12):
            g = random_pattern(rng, n)
            T = totals(g, log_uniform(rng, 1e-3, 1e3, n))
            assert (T > 0).all() and (T < g.face_capacity * (1 + 1e-15)).all()

    def test_neighbor_blowup(self, grid3):
        k = np.full(9, 1e9)
        k[0] = 1.0
        assert totals(grid3, k)[0] < 1e-8

    def test_own_blowup(self, grid3):
        k = np.ones(9)
        k[0] = 1e9
        assert abs(totals(grid3, k)[0] - 4 * math.pi) < 1e-8

    def test_self_adjacent_single_face(self):
        g = PatternGraph((Edge("e", math.pi / 2, ("A", "A")),), (Face("A", ("e", "e")),))
        assert total_curvatures(g, np.array([1.0]))[0] == pytest.approx(2 * T_UNIT / 4, abs=1e-14)
        assert face_cone_angle(g, np.array([1.0]), "A") == pytest.approx(ALPHA_UNIT / 2, abs=1e-14)

    def test_order_independent_bits(self, rng):
        g = random_pattern(rng, 8)
        k = log_uniform(rng, 0.1, 10, 8)
        assert np.array_equal(totals(g, k), totals(g, k.copy()))


class TestJacobian:
    def test_unit_grid_entries(self, grid3):
        J = jacobian(grid3, np.ones(9), dense=True)
        off = J - np.diag(np.diag(J))
        assert set(np.round(off[off != 0], 14)) == {round(-2 / 3, 14)}
        # every face of the 3x3 grid has four distinct neighbours
        assert ((off != 0).sum(axis=1) == 4).all()

    def test_shared_edges_accumulate(self):
        # on a 3x3 grid no two faces share two edges; build a 2-face double edge instead
        e = (Edge("a", math.pi / 2, ("A", "B")), Edge("b", math.pi / 2, ("A", "B")))
        g = PatternGraph(e, (Face("A", ("a", "b")), Face("B", ("a", "b"))))
        J = jacobian(g, np.ones(2), dense=True)
        assert J[0, 1] == pytest.approx(-4 / 3, rel=1e-14)

    def test_sparse_for_large(self):
        g = generate_torus_grid(9)
        J = jacobian(g, np.ones(81))
        assert sparse.issparse(J)
        assert np.allclose(J.toarray(), jacobian(g, np.ones(81), dense=True))

    def test_structure_and_row_sums(self, rng):
        for trial in range(1000):
            g = random_pattern(rng, int(rng.integers(1, 9)))
            k = log_uniform(rng, 1e-2, 1e2, g.n_faces)
            J = jacobian(g, k, dense=True)
            d = np.diag(J)
            off = J - np.diag(d)
            assert (d > 0).all()
            assert (off <= 0).all()
            assert (J.sum(axis=1) > 0).all()
            assert np.allclose(J, J.T, rtol=1e-12, atol=0)

    def test_matches_finite_differences(self, rng):
        h = 1e-6
        for trial in range(20):
            g = random_pattern(rng, int(rng.integers(2, 7)))
            k = log_uniform(rng, 0.1, 10, g.n_faces)
            J = jacobian(g, k, dense=True)
            for j in range(g.n_faces):
                up, dn = k.copy(), k.copy()
                up[j] *= math.exp(h)
                dn[j] *= math.exp(-h)
                col = (totals(g, up) - totals(g, dn)) / (2 * h)
                mask = np.abs(J[:, j]) > 1e-12
                assert np.allclose(J[mask, j], col[mask], rtol=1e-6, atol=0)
                assert np.allclose(col[~mask], 0.0, atol=1e-9)

    def test_unit_grid_diagonal_closed_form(self, grid3):
        fd_own, fd_cross = oracles.fd_partials(1, 1, math.pi / 2)
        J = jacobian(grid3, np.ones(9), dense=True)
        assert J[0, 0] == pytest.approx(4 * (fd_own + fd_cross) - 4 * fd_cross, rel=1e-6)


class TestConeAngle:
    def test_unit_grid(self, grid3):
        assert face_cone_angle(grid3, np.ones(9), "f1_2") == pytest.approx(ALPHA_UNIT, abs=1e-13)

    def test_unknown_face(self, grid3):
        with pytest.raises(KeyError):
            face_cone_angle(grid3, np.ones(9), "nope")

    def test_total_identity(self, rng):
        for n in range(1, 10):
            g = random_pattern(rng, n)
            k = log_uniform(rng, 1e-3, 1e3, n)
            T = totals(g, k)
            for i, f in enumerate(g.face_ids):
                alpha = face_cone_angle(g, k, f)
                assert alpha > 0
                assert abs(alpha * math.cos(math.atan2(1, k[i])) - T[i]) < 1e-10


class TestReport:
    def test_unit_grid(self, grid3):
        rep = gauss_bonnet_report(grid3, np.ones(9))
        assert rep.surface_area == pytest.approx(AREA_UNIT, abs=1e-12)
        assert rep.area_residual < 1e-9
        assert rep.gauss_bonnet_residual < 1e-9
        assert abs(AREA_UNIT + 9 * (2 * math.pi - ALPHA_UNIT)) < 1e-9
        assert rep.euler_characteristic == 0
        assert rep.warnings == []
        assert np.allclose(rep.radius, math.pi / 4)
        assert np.allclose(rep.bigon_area, oracles.lens_area(1, 1, math.pi / 2), atol=1e-12)

    def test_random_states(self, rng):
        for n in (3, 4, 5):
            for theta in (0.3, 1.0, math.pi / 2):
                g = generate_torus_grid(n, theta)
                rep = gauss_bonnet_report(g, log_uniform(rng, 1e-2, 1e2, g.n_faces))
                assert rep.area_residual < 1e-9
                assert rep.bigon_balance_residual < 1e-10
                assert rep.gauss_bonnet_residual < 1e-9
                assert (rep.bigon_area > 0).all()
                assert ((rep.radius > 0) & (rep.radius < math.pi / 2)).all()

    def test_without_vertices(self, rng):
        g = random_pattern(rng, 5)
        rep = gauss_bonnet_report(g, np.ones(5))
        assert rep.gauss_bonnet_residual is None
        assert any("Gauss-Bonnet" in w for w in rep.warnings)
        assert "gauss_bonnet_residual" not in rep.to_dict()

    def test_serializes(self, grid3):
        import json

        doc = json.loads(json.dumps(gauss_bonnet_report(grid3, np.ones(9)).to_dict(), allow_nan=False))
        assert set(doc["faces"]) == set(grid3.face_ids)


def test_bigon_balance(rng):
    for trial in range(200):
        g = random_pattern(rng, int(rng.integers(1, 10)))
        k = log_uniform(rng, 1e-3, 1e3, g.n_faces)
        lens = bigon_areas(g, k)
        assert abs(math.fsum(lens) - (2 * math.fsum(g.thetas) - math.fsum(totals(g, k)))) < 1e-10


def test_single_perturbation_changes_area(rng):
    for trial in range(100):
        g = random_pattern(rng, int(rng.integers(1, 8)), self_prob=0.0)
        k = log_uniform(rng, 0.1, 10, g.n_faces)
        base = math.fsum(bigon_areas(g, k))
        f = int(rng.integers(g.n_faces))
        k2 = k.copy()
        k2[f] *= 1.01
        assert math.fsum(bigon_areas(g, k2)) < base
