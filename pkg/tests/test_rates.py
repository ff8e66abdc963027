import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from homog_nd import analytic, epssolve as es, rates
from homog_nd.fields import square_nodes


def test_lp_norm_examples():
    M = 256
    X1, X2 = square_nodes(M)
    for p in (1.5, 2, 5):
        assert rates.lp_norm(np.ones((M + 1, M + 1)), p) == pytest.approx(1.0)
    g = np.sin(2 * np.pi * X1) * np.sin(2 * np.pi * X2)
    assert rates.lp_norm(g, 2) == pytest.approx(0.5, abs=1e-4)
    assert rates.lp_norm(np.zeros((9, 9)), 3) == 0.0
    assert rates.sup_norm(-3 * g) == pytest.approx(3.0)


def test_lp_norm_rejections():
    with pytest.raises(ValueError, match="no cells"):
        rates.lp_norm(np.ones((5, 5)), 2, np.zeros((5, 5), dtype=bool))
    with pytest.raises(ValueError):
        rates.lp_norm(np.ones((5, 5)), 1)
    with pytest.raises(ValueError):
        rates.lp_norm(np.ones((5, 5)), math.inf)


def test_interior_mask():
    m = rates.interior_mask(8)
    assert m.sum() == 49 and not m[0].any() and m[1, 1]


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(1.1, 6.0))
def test_lp_norm_homogeneous(c, p):
    g = np.linspace(0, 1, 17)[:, None] * np.ones((17, 17))
    assert rates.lp_norm(c * g, p) == pytest.approx(c * rates.lp_norm(g, p), rel=1e-12)


def test_functionals_vanish_on_exact_input():
    M = 32
    u = analytic.builtin_rhs("poly").u(*square_nodes(M))
    zero = np.zeros_like(u)
    zV = lambda y1, y2: np.zeros((2, 2, 2) + np.shape(y1))  # noqa: E731
    zH = lambda y1, y2: np.zeros((2, 2, 2, 2) + np.shape(y1))  # noqa: E731
    hess = analytic.builtin_rhs("poly").u.hess
    assert rates.error_sup(u, u, zero, 0.1) == (0.0, 0.0)
    assert rates.error_grad(u, u, zero, zV, hess, 0.1, 2) == 0.0
    assert rates.error_hess(u, u, zH, hess, 0.1, 2) == 0.0
    with pytest.raises(ValueError, match="grid mismatch"):
        rates.error_sup(u, np.zeros((9, 9)), zero, 0.1)


def test_error_sup_sign_convention():
    u = np.zeros((5, 5))
    z = np.ones((5, 5))
    ue = -0.2 * np.ones((5, 5))  # u_eps = u - 2 eps z with eps = 0.1
    plain, corrected = rates.error_sup(ue, u, z, 0.1)
    assert plain == pytest.approx(0.2) and corrected == pytest.approx(0.0, abs=1e-15)


def test_fit_rate_exact_power_laws():
    fit = rates.fit_rate([(e, e**2) for e in (1 / 5, 1 / 10, 1 / 20)])
    assert fit.slope == pytest.approx(2.0) and fit.r_squared == pytest.approx(1.0)
    fit = rates.fit_rate([(e, 3 * e**1.5) for e in (1 / 5, 1 / 8, 1 / 10, 1 / 20)])
    assert fit.slope == pytest.approx(1.5) and fit.intercept == pytest.approx(math.log(3))


def test_fit_rate_noise_seeded():
    rng = np.random.default_rng(7)
    eps = 1.0 / np.array([5, 8, 10, 16, 20, 32, 40])
    noisy = eps * (1 + 0.05 * rng.uniform(-1, 1, eps.size))
    assert rates.fit_rate(list(zip(eps, noisy))).slope == pytest.approx(1.0, abs=0.1)


def test_fit_rate_rejections():
    with pytest.raises(ValueError, match="at least 3"):
        rates.fit_rate([(0.1, 1.0), (0.2, 2.0)])
    with pytest.raises(ValueError, match="positive"):
        rates.fit_rate([(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)])
    fit = rates.fit_samples([(0.5, 0.0), (0.25, 1.0), (0.125, 0.5), (0.0625, 0.25)], "x")
    assert fit.excluded == [0.5] and fit.slope == pytest.approx(1.0)


def test_fit_samples_uses_smallest_eps():
    pts = [(1 / k, (1 / k) ** (2 if k >= 16 else 1)) for k in (5, 8, 10, 16, 20, 32, 40)]
    fit = rates.fit_samples(pts, "x")
    assert sorted(fit.points_used) == sorted(1 / k for k in (16, 20, 32, 40))
    assert fit.slope == pytest.approx(2.0)


def test_config_validation():
    rates.ExperimentConfig().validate()
    bad = [dict(epsilons=()), dict(coefficient="nope"), dict(rhs="nope"), dict(backend="x"),
           dict(functionals=("E3p",)), dict(ps=(1,)), dict(oracles={"q": "numeric"}),
           dict(oracles={"V": "exact"}), dict(epsilons=(2.5,)), dict(mrule=0)]
    for kw in bad:
        with pytest.raises(ValueError):
            replace(rates.ExperimentConfig(), **kw).validate()


def test_empty_epsilon_list_rejected():
    with pytest.raises(ValueError, match="empty"):
        rates.run_experiment(rates.ExperimentConfig(epsilons=()))


def test_numeric_corrector_accessor_matches_closed_form(cbad):
    from homog_nd import cell

    sol = cell.solve_cell(cbad.spec, 64, with_chi=False)
    tc = rates.TorusCorrector(sol)
    y1, y2 = np.meshgrid(np.arange(64) / 64, np.arange(64) / 64, indexing="ij")
    V = tc.V(y1 + 2, y2)
    np.testing.assert_array_equal(V[0, 0], sol.v(0, 0).values)
    np.testing.assert_allclose(tc.gradV(y1, y2)[1, 1], cbad.v(1, 1).grad(y1, y2), atol=2e-3 * 0.08)
    np.testing.assert_allclose(tc.hessV(y1, y2)[0, 0], cbad.v(0, 0).hess(y1, y2), atol=0.01 * 0.13)


def test_small_sweep_report_structure():
    cfg = rates.ExperimentConfig(coefficient="cbad", rhs="poly", epsilons=(2, 3, 4), ps=(2, 4),
                                 functionals=("plainLinf", "E0inf", "E1p", "E2p", "plainW1p", "theta"))
    rep = rates.run_experiment(cfg)
    assert [s.epsilon for s in rep.samples] == [1 / 2, 1 / 3, 1 / 4]
    assert list(rep.samples[0].values) == ["plainLinf", "E0inf", "plainW1p[2]", "plainW1p[4]",
                                           "E1p[2]", "E1p[4]", "E2p[2]", "E2p[4]", "theta"]
    assert all(v >= 0 for s in rep.samples for v in s.values.values())
    assert rep.samples[1].M == 48
    assert rep.fit("E1p", 4).p == 4.0
    assert rep.provenance["V"] == "closed-form"
    assert rep.config["epsilons"] == ["1/2", "1/3", "1/4"]
    with pytest.raises(KeyError):
        rep.fit("E0inf", 3)


def test_deterministic_and_parallel_equivalent():
    cfg = rates.ExperimentConfig(coefficient="cbad", rhs="sinsin", epsilons=(2, 3, 4), functionals=("E0inf",))
    a = rates.run_experiment(cfg, jobs=1).to_dict()
    b = rates.run_experiment(cfg, jobs=3).to_dict()
    assert a == b


def test_numeric_u_route_matches_closed_form():
    base = dict(coefficient="cbad", rhs="poly", epsilons=(2, 4, 8), functionals=("plainLinf", "E0inf"),
                u_resolution=512)
    exact = rates.run_experiment(rates.ExperimentConfig(**base))
    numeric = rates.run_experiment(rates.ExperimentConfig(**base, oracles={"u": "numeric", "z": "numeric"}))
    assert numeric.provenance["u"].startswith("numeric")
    for a, b in zip(exact.samples, numeric.samples):
        for k in a.values:
            assert b.values[k] == pytest.approx(a.values[k], rel=0.05)


def test_oracle_numeric_slope_agreement_sinsin():
    """Swapping closed-form r, V, z for computed counterparts moves slopes by < 0.05."""
    base = dict(coefficient="cbad", rhs="sinsin", epsilons=(8, 10, 16, 20), ps=(2,),
                functionals=("plainLinf", "E0inf", "E1p"))
    exact = rates.run_experiment(rates.ExperimentConfig(**base))
    numeric = rates.run_experiment(rates.ExperimentConfig(
        **base, oracles={"r": "numeric", "V": "numeric", "z": "numeric"}))
    for f in exact.fits:
        assert abs(numeric.fit(f.functional, f.p).slope - f.slope) < 0.05, f.functional


def test_sampled_coefficient_file(tmp_path, cgood):
    path = tmp_path / "cgood.txt"
    cgood.spec.sample(32).save(path)
    cfg = rates.ExperimentConfig(coefficient=str(path), rhs="poly", epsilons=(2, 3, 4),
                                 functionals=("plainLinf",), cell_resolution=32, u_resolution=192)
    rep = rates.run_experiment(cfg)
    assert rep.provenance["A"].startswith("sampled")
    assert rep.provenance["r"].startswith("numeric")


def test_solver_error_carries_epsilon(monkeypatch):
    from homog_nd.errors import SolverError

    def boom(*a, **k):
        raise SolverError("stuck", 0.5)

    monkeypatch.setattr(es, "sparse_solve", boom)
    with pytest.raises(SolverError, match=r"eps=1/2") as info:
        rates.run_experiment(rates.ExperimentConfig(epsilons=(2, 3, 4)))
    assert info.value.residual == 0.5


def test_presets_validate():
    for name in rates.PRESETS:
        for _, cfg in rates.preset(name):
            cfg.validate()
    with pytest.raises(ValueError, match="valid"):
        rates.preset("figure-9")


def test_monotone_refinement_cbad_sinsin():
    cfg = rates.ExperimentConfig(coefficient="cbad", rhs="sinsin", ps=(2, 5),
                                 functionals=("plainLinf", "E0inf", "E1p", "E2p"))
    coarse, fine = rates.mesh_study(cfg, 10, factors=(1, 2))
    assert (coarse.M, fine.M) == (160, 320)
    for k, v in coarse.values.items():
        assert abs(fine.values[k] - v) < 0.05 * v, k
