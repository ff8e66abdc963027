import math

import numpy as np
import pytest

from homog_nd import analytic, cell
from homog_nd.errors import CompatibilityError, SolverError
from homog_nd.fields import CoefficientSpec, TorusField, torus_nodes

DATA = __import__("pathlib").Path(__file__).parent / "data"


def test_constant_coefficient_is_trivial():
    spec = CoefficientSpec.constant([[2.0, 0.3], [0.3, 1.0]])
    sol = cell.solve_cell(spec, 16)
    np.testing.assert_allclose(sol.r.values, 1.0, atol=1e-13)
    np.testing.assert_allclose(sol.Abar, [[2.0, 0.3], [0.3, 1.0]], atol=1e-13)
    for v in sol.V.values():
        assert np.abs(v.values).max() < 1e-13
    assert not np.any(sol.c)
    for chi in sol.chi.values():
        assert np.abs(chi.values).max() < 1e-13
    assert np.abs(sol.psi.values).max() < 1e-13
    assert sol.classification() == "c-good"


def test_cbad_invariants(cbad, cbad_cell128):
    sol = cbad_cell128
    assert sol.r.values.min() > 0
    assert abs(sol.r.values.mean() - 1.0) < 1e-12
    for v in list(sol.V.values()) + list(sol.chi.values()):
        assert abs(v.values.mean()) < 1e-12
    assert np.abs(sol.Abar - np.eye(2)).max() < 1e-6
    np.testing.assert_array_equal(sol.Abar, sol.Abar.T)
    assert np.linalg.eigvalsh(sol.Abar).min() > 0
    assert sol.classification() == "c-bad"


def test_cbad_fields_against_closed_forms(cbad, cbad_cell128):
    sol = cbad_cell128
    Y = torus_nodes(128)
    assert np.abs(sol.r.values - cbad.r(*Y)).max() < 1e-3
    assert np.abs(sol.v(0, 0).values - cbad.v(0, 0)(*Y)).max() < 1e-3
    assert np.abs(sol.v(1, 1).values - cbad.v(1, 1)(*Y)).max() < 1e-3
    assert np.abs(sol.psi.values - cbad.psi(*Y)).max() < 1e-3
    assert sol.c[0, 0, 0] == pytest.approx(-1 / (128 * math.pi), rel=0.01)
    assert sol.c[0, 1, 1] == pytest.approx(-1 / (128 * math.pi), rel=0.01)
    for j, k, l in [(1, 0, 0), (1, 1, 1), (0, 0, 1), (1, 0, 1)]:
        assert abs(sol.c[j, k, l]) < 1e-6


def test_corrector_symmetry_and_c_symmetry(cbad_cell128):
    sol = cbad_cell128
    assert sol.v(0, 1) is sol.v(1, 0)
    np.testing.assert_array_equal(sol.c, np.swapaxes(sol.c, 1, 2))


def test_cgood(cgood, cgood_cell128):
    sol = cgood_cell128
    np.testing.assert_allclose(sol.r.values, 1.0, atol=1e-10)
    assert np.abs(sol.Abar - np.eye(2)).max() < 1e-6
    assert np.abs(sol.c).max() < 1e-6
    assert np.abs(sol.v(0, 1).values).max() < 1e-10
    assert sol.classification() == "c-good"
    assert np.abs(cell.column_divergence(sol.Adiv.values)).max() < 1e-8
    assert abs(sol.psi.values.mean()) < 1e-12


def test_compatibility_integrals(cbad_cell128, cgood_cell128):
    for sol in (cbad_cell128, cgood_cell128):
        a = sol.A.values
        r = sol.r.values
        for k, l in cell.PAIRS:
            assert abs(np.mean((a[k, l] - sol.Abar[k, l]) * r)) < 1e-8
            for j in range(2):
                src = cell.chi_source(a, sol.v(k, l), sol.c[j, k, l], j)
                assert abs(np.mean(src * r)) < 1e-8


def test_cgood_chi_compatibility_from_closed_forms(cgood):
    # quadrature of closed forms only (no solver involved)
    Y = torus_nodes(64)
    A = cgood.A(*Y)
    for k, l in cell.PAIRS:
        g = cgood.v(k, l).grad(*Y)
        for j in range(2):
            assert abs(np.mean(A[0, j] * g[0] + A[1, j] * g[1] - cgood.c_tensor[j, k, l])) < 1e-8


def test_skew_structure(cbad_cell128):
    sol = cbad_cell128
    Ad = sol.Adiv.values
    skew = Ad - np.swapaxes(Ad, 0, 1)
    np.testing.assert_array_equal(skew[0, 0], 0.0)
    np.testing.assert_array_equal(skew[1, 1], 0.0)
    np.testing.assert_array_equal(skew[0, 1], 2 * sol.psi.values)
    np.testing.assert_array_equal(skew[1, 0], -2 * sol.psi.values)
    rA = sol.r.values * sol.A.values
    np.testing.assert_array_equal(0.5 * (Ad + np.swapaxes(Ad, 0, 1)), rA)
    # r solves the compact adjoint stencil, the flux uses composed differences: O(h^2) mismatch
    assert np.abs(cell.column_divergence(Ad)).max() < 1e-6


def test_chi_against_fourier_collocation_oracle(cbad_cell128):
    oracle = np.load(DATA / "chi111_N64.npy")
    chi = cbad_cell128.chi[(0, 0, 0)].values[::2, ::2]
    assert np.abs(chi - oracle).max() < 1e-4
    # frozen sample of the oracle itself, to catch a corrupted data file
    assert oracle[8, 8] == pytest.approx(1.2226270914037602e-04, rel=1e-12)


def test_classify_rules():
    c = np.zeros((2, 2, 2))
    assert cell.classify(c) == "c-good"
    c[0, 0, 0] = 1e-5
    assert cell.classify(c, scale=1.0, tol=1e-5) == "c-good"  # tie
    c[0, 0, 0] = 1.0001e-5
    assert cell.classify(c, scale=1.0, tol=1e-5) == "c-bad"
    assert cell.classify(-c, scale=1.0, tol=1e-5) == "c-bad"


def test_effective_coefficient_grid_mismatch(cbad):
    with pytest.raises(ValueError):
        cell.effective_coefficient(cbad.spec.sample(16), TorusField(np.ones((32, 32))))


def test_non_elliptic_rejected():
    with pytest.raises(ValueError):
        CoefficientSpec.constant([[1.0, 2.0], [2.0, 1.0]])


def test_incompatible_chi_rejected(cbad_cell128, cbad):
    bad = cbad_cell128.c.copy()
    bad[0, 0, 0] += 1e-3
    with pytest.raises(CompatibilityError, match="inconsistent"):
        cell.solve_chi(cbad.spec, cbad_cell128.r, cbad_cell128.V, bad, 0, 0, 0, 128)


def test_solver_stagnation_reports_residual(cbad):
    with pytest.raises(SolverError) as info:
        cell.solve_corrector(cbad.spec, np.eye(2), 0, 0, 64, maxiter=1, tol=1e-17)
    assert info.value.residual is not None and info.value.residual > 0


def test_order_of_accuracy_correctors(cbad):
    errs = []
    for N in (32, 64, 128):
        sol = cell.solve_cell(cbad.spec, N, with_chi=False)
        Y = torus_nodes(N)
        errs.append(max(np.abs(sol.v(0, 0).values - cbad.v(0, 0)(*Y)).max(),
                        np.abs(sol.v(1, 1).values - cbad.v(1, 1)(*Y)).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.3)


def test_results_independent_of_call_order(cbad):
    a = cell.solve_cell(cbad.spec, 32)
    cell.solve_cell(analytic.builtin_cgood().spec, 32)
    b = cell.solve_cell(cbad.spec, 32)
    np.testing.assert_array_equal(a.chi[(1, 1, 1)].values, b.chi[(1, 1, 1)].values)
