import math

import numpy as np
import pytest

from homog_nd import analytic, epssolve as es
from homog_nd.fields import GridFunction, square_nodes

IDENTITY = analytic.get_coefficient("constant-identity")
# c-bad, sinsin, eps = 1/5: u_eps(1/2, 1/4) from an independent assembly solved by algebraic
# multigrid at M = 1280 and 2560, Richardson extrapolated
ORACLE_UEPS_HALF_QUARTER = -0.010731988980976237


def _identity_problem(f, eps=1.0, backend="fd-nondiv", mrule=1):
    return es.EpsProblem(IDENTITY.A, f, eps, backend, r=IDENTITY.r, Adiv=IDENTITY.Adiv, mrule=mrule)


@pytest.mark.parametrize("backend", es.BACKENDS)
def test_manufactured_order_two(backend):
    rhs = analytic.builtin_rhs("sinsin")
    errs = []
    for M in (64, 128, 256):
        u = es.solve_eps(_identity_problem(rhs.f, 0.25, backend, mrule=16), M)
        errs.append(np.abs(u.values - rhs.u(*square_nodes(M))).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.2), orders


def test_cbad_point_value_against_richardson_oracle(cbad):
    # oracle: same stencil, independent assembly, AMG at M = 1280 and 2560, Richardson extrapolated
    rhs = analytic.builtin_rhs("sinsin")
    u = es.solve_eps(es.EpsProblem(cbad.A, rhs.f, 1 / 5), 640)
    value = u.values[320, 160]
    assert value == pytest.approx(ORACLE_UEPS_HALF_QUARTER, rel=5e-4)


def test_backends_agree(cbad):
    rhs = analytic.builtin_rhs("sinsin")
    kw = dict(A=cbad.A, f=rhs.f, epsilon=1 / 8, r=cbad.r, Adiv=cbad.Adiv)
    fd = es.solve_eps(es.EpsProblem(backend="fd-nondiv", **kw), 256)
    fem = es.solve_eps(es.EpsProblem(backend="fem-div", **kw), 256)
    assert np.abs(fd.values - fem.values).max() < 5e-3


def test_backend_consistency_improves_with_M(cbad):
    rhs = analytic.builtin_rhs("poly")
    kw = dict(A=cbad.A, f=rhs.f, epsilon=1 / 4, r=cbad.r, Adiv=cbad.Adiv)
    diffs = []
    for M in (64, 128, 256):
        fd = es.solve_eps(es.EpsProblem(backend="fd-nondiv", **kw), M)
        fem = es.solve_eps(es.EpsProblem(backend="fem-div", **kw), M)
        diffs.append(np.abs(fd.values - fem.values).max())
    assert diffs[0] > diffs[1] > diffs[2]


def test_homogenized_problems():
    poly = analytic.builtin_rhs("poly")
    errs = []
    for M in (32, 64):
        u = es.solve_homogenized(np.eye(2), poly.f, M)
        errs.append(abs(u.values[M // 2, M // 2] - 1 / 32))
    assert errs[0] < 1e-12 or errs[1] < errs[0] / 3.5
    zero = es.solve_homogenized(np.eye(2), lambda x1, x2: 0 * x1, 32)
    assert not zero.values.any()
    with pytest.raises(ValueError, match="positive definite"):
        es.solve_homogenized(-np.eye(2), poly.f, 16)


def test_compute_h(cbad):
    poly = analytic.builtin_rhs("poly")
    sinsin = analytic.builtin_rhs("sinsin")
    X1, X2 = square_nodes(32)
    assert not es.compute_h(poly.u.third, np.zeros((2, 2, 2)), 32).any()
    np.testing.assert_allclose(es.compute_h(poly.u.third, cbad.c_tensor, 32), (1 - 2 * X1) / (128 * np.pi),
                               atol=1e-15)
    expected = (np.pi**2 / 8) * np.cos(2 * np.pi * X1) * np.sin(2 * np.pi * X2)
    np.testing.assert_allclose(es.compute_h(sinsin.u.third, cbad.c_tensor, 32), expected, atol=1e-12)
    # h = d1 f / (128 pi) for any u with -Lap u = f
    np.testing.assert_allclose(expected, sinsin.f.deriv(X1, X2, 1, 0) / (128 * np.pi), atol=1e-12)
    with pytest.raises(ValueError, match="third-derivative"):
        es.compute_h(None, cbad.c_tensor, 8)


def test_z_sinsin_order_two(cbad):
    sinsin = analytic.builtin_rhs("sinsin")
    errs = []
    for M in (32, 64, 128):
        z = es.solve_z(np.eye(2), es.compute_h(sinsin.u.third, cbad.c_tensor, M), M)
        errs.append(np.abs(z.values - sinsin.z(*square_nodes(M))).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.2), orders
    assert not es.solve_z(np.eye(2), np.zeros((9, 9)), 8).values.any()


def test_z_poly_against_sine_transform_oracle(cbad):
    # oracle: 5-point Laplacian at M = 2048 diagonalized by the type-I sine transform
    poly = analytic.builtin_rhs("poly")
    M = 256
    z = es.solve_z(np.eye(2), es.compute_h(poly.u.third, cbad.c_tensor, M), M).values
    assert abs(z[M // 2, M // 2]) < 1e-15  # odd source about x1 = 1/2
    assert z[M // 4, M // 2] == pytest.approx(-3.539699340201064e-05, rel=5e-4)
    assert z[M // 4, M // 4] == pytest.approx(-3.018908220241073e-05, rel=5e-4)


def test_boundary_corrector(cbad):
    poly = analytic.builtin_rhs("poly")
    eps, M = 1 / 4, 64
    zero_V = lambda y1, y2: np.zeros((2, 2) + np.shape(y1))  # noqa: E731
    theta0 = es.solve_boundary_corrector(cbad.A, eps, zero_V, poly.u.hess, M)
    assert not theta0.values.any()
    V = lambda y1, y2: np.array([[cbad.v(i, j)(y1, y2) for j in range(2)] for i in range(2)])  # noqa: E731
    theta = es.solve_boundary_corrector(cbad.A, eps, V, poly.u.hess, M)
    g = es.boundary_data(V, poly.u.hess, eps, M)
    wall = np.zeros_like(g, dtype=bool)
    wall[0] = wall[-1] = wall[:, 0] = wall[:, -1] = True
    np.testing.assert_array_equal(theta.values[wall], g[wall])
    assert theta.values.max() <= g[wall].max() + 1e-15
    assert theta.values.min() >= g[wall].min() - 1e-15


def test_maximum_principle_and_linearity(cbad, rng):
    M, eps = 64, 1 / 4
    f1 = analytic.builtin_rhs("poly").f
    u1 = es.solve_eps(es.EpsProblem(cbad.A, f1, eps), M).values
    assert u1.min() >= 0.0
    g = np.abs(rng.standard_normal((M + 1, M + 1)))
    ug = es.solve_eps(es.EpsProblem(cbad.A, lambda x1, x2: g, eps), M).values
    assert ug.min() >= 0.0
    f2 = analytic.builtin_rhs("sinsin").f
    u2 = es.solve_eps(es.EpsProblem(cbad.A, f2, eps), M).values
    u12 = es.solve_eps(es.EpsProblem(cbad.A, lambda x1, x2: f1(x1, x2) + f2(x1, x2), eps), M).values
    assert np.abs(u12 - u1 - u2).max() < 1e-10 * np.abs(u12).max()


def test_epsilon_uniform_stability(cbad):
    f = analytic.builtin_rhs("sinsin").f
    ratios = []
    for k in (2, 4, 8, 16):
        u = es.solve_eps(es.EpsProblem(cbad.A, f, 1 / k), 16 * k).values
        ratios.append(np.abs(u).max() / (8 * np.pi**2))
    assert max(ratios) < 2 * min(ratios)


def test_rejections(cbad):
    f = analytic.builtin_rhs("poly").f
    with pytest.raises(ValueError, match="minimum M is 160"):
        es.solve_eps(es.EpsProblem(cbad.A, f, 1 / 10), 100)
    with pytest.raises(ValueError, match="reciprocal"):
        es.EpsProblem(cbad.A, f, 0.3)
    with pytest.raises(ValueError, match="divergence_form_transform"):
        es.solve_eps(es.EpsProblem(cbad.A, f, 1 / 2, backend="fem-div"), 32)
    with pytest.raises(ValueError, match="unknown backend"):
        es.EpsProblem(cbad.A, f, 1 / 2, backend="fv")
    assert es.as_reciprocal("1/10") == 10
    assert es.as_reciprocal(0.125) == 8


def test_iterative_path_matches_direct(cbad, monkeypatch):
    f = analytic.builtin_rhs("poly").f
    direct = es.solve_eps(es.EpsProblem(cbad.A, f, 1 / 2), 64).values
    monkeypatch.setattr(es, "DIRECT_LIMIT", 10)
    krylov = es.solve_eps(es.EpsProblem(cbad.A, f, 1 / 2), 64).values
    assert np.abs(krylov - direct).max() < 1e-8 * np.abs(direct).max()


def test_discrete_derivatives():
    M = 16
    X1, X2 = square_nodes(M)
    H = es.discrete_hessian(X1**2)
    np.testing.assert_allclose(H[0, 0], 2.0, atol=1e-10)
    np.testing.assert_allclose(H[0, 1], 0.0, atol=1e-10)
    np.testing.assert_allclose(es.discrete_hessian(X1 * X2)[0, 1], 1.0, atol=1e-10)
    assert not es.discrete_gradient(np.zeros((M + 1, M + 1))).any()
    assert not es.discrete_hessian(np.zeros((M + 1, M + 1))).any()
    errs = []
    for M in (32, 64, 128):
        X1, _ = square_nodes(M)
        g = es.discrete_gradient(GridFunction(np.sin(2 * np.pi * X1), dirichlet=False))
        errs.append(np.abs(g[0] - 2 * np.pi * np.cos(2 * np.pi * X1)).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.2)
    with pytest.raises(ValueError):
        es.discrete_hessian(np.zeros((4, 4)))


def test_numeric_third_derivatives():
    u = analytic.builtin_rhs("poly").u
    M = 32
    t = es.numeric_third_derivatives(u(*square_nodes(M)))(*square_nodes(M))
    np.testing.assert_allclose(t, u.third(*square_nodes(M)), atol=1e-7)
    s = analytic.builtin_rhs("sinsin").u
    errs = []
    for M in (32, 64):
        X = square_nodes(M)
        errs.append(np.abs(es.numeric_third_derivatives(s(*X))(*X) - s.third(*X)).max())
    assert math.log2(errs[0] / errs[1]) > 3.5
