"""Error functionals, epsilon sweeps and log-log rate fits."""

from __future__ import annotations

import logging
import math
import multiprocessing
import os
from pathlib import Path
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import analytic, cell, epssolve
from scipy.interpolate import RectBivariateSpline

from .epssolve import discrete_gradient, discrete_hessian
from .errors import SolverError
from .fields import CoefficientSpec, GridFunction, TorusField, periodic_interpolate, square_nodes

log = logging.getLogger(__name__)

DEFAULT_EPSILONS = (5, 8, 10, 16, 20, 32, 40)  # reciprocals
DEFAULT_PS = (2, 3, 4, 5)
FIT_POINTS = 4
FUNCTIONALS = ("plainLinf", "E0inf", "plainW1p", "E1p", "E2p", "theta")


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------


def interior_mask(M: int, width: int = 1) -> np.ndarray:
    """Nodes at distance >= ``width`` cells from the boundary."""
    mask = np.zeros((M + 1, M + 1), dtype=bool)
    mask[width : M + 1 - width, width : M + 1 - width] = True
    return mask


def _arr(g) -> np.ndarray:
    return g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)


def lp_norm(g, p: float, mask: np.ndarray | None = None) -> float:
    """Trapezoidal ``L^p`` norm over the cells whose four corners are in ``mask``."""
    v = np.abs(_arr(g))
    if not 1 < p < math.inf:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    M = v.shape[0] - 1
    if mask is None:
        mask = np.ones_like(v, dtype=bool)
    cells = mask[:-1, :-1] & mask[1:, :-1] & mask[:-1, 1:] & mask[1:, 1:]
    if not cells.any():
        raise ValueError("quadrature mask selects no cells")
    w = v**p
    corner_mean = 0.25 * (w[:-1, :-1] + w[1:, :-1] + w[:-1, 1:] + w[1:, 1:])
    return float((corner_mean[cells].sum() / M**2) ** (1.0 / p))


def sup_norm(g) -> float:
    return float(np.abs(_arr(g)).max())


def _same_grid(*gs):
    shapes = {_arr(g).shape[-2:] for g in gs if g is not None}
    if len(shapes) != 1:
        raise ValueError(f"grid mismatch: {sorted(shapes)}")


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def error_sup(u_eps, u, z, epsilon: float) -> tuple[float, float]:
    """``(sup|u_eps - u|, sup|u_eps - u + 2 eps z|)``."""
    _same_grid(u_eps, u, z)
    d = _arr(u_eps) - _arr(u)
    return sup_norm(d), sup_norm(d + 2 * epsilon * _arr(z))


def _pointwise_norm(field_: np.ndarray, lead: int) -> np.ndarray:
    axes = tuple(range(lead))
    return np.sqrt((field_**2).sum(axis=axes))


def corrector_gradient_term(gradV: Callable, hess_u: Callable, epsilon: float, M: int) -> np.ndarray:
    """``sum_ij (grad v^{ij})(x/eps) d_ij u(x)``, shape ``(2, M+1, M+1)``.

    ``gradV(y1, y2)`` returns ``(2, 2, 2, ...)`` with index order
    ``[i, j, component]``.
    """
    X1, X2 = square_nodes(M)
    return np.einsum("ijc...,ij...->c...", gradV(X1 / epsilon, X2 / epsilon), hess_u(X1, X2))


def corrector_hessian_term(hessV: Callable, hess_u: Callable, epsilon: float, M: int) -> np.ndarray:
    """``sum_ij (D^2 v^{ij})(x/eps) d_ij u(x)``, shape ``(2, 2, M+1, M+1)``."""
    X1, X2 = square_nodes(M)
    return np.einsum("ijab...,ij...->ab...", hessV(X1 / epsilon, X2 / epsilon), hess_u(X1, X2))


def error_grad(u_eps, u, z, gradV: Callable, hess_u: Callable, epsilon: float, p: float,
               mask: np.ndarray | None = None) -> float:
    """``|| grad u_eps - grad u + 2 eps grad z - eps sum grad v^{ij}(x/eps) d_ij u ||_p``.

    Gradients of nodal data are second-order finite differences; the
    Euclidean norm is taken pointwise.
    """
    _same_grid(u_eps, u, z)
    M = _arr(u_eps).shape[0] - 1
    resid = discrete_gradient(_arr(u_eps) - _arr(u) + 2 * epsilon * _arr(z))
    resid = resid - epsilon * corrector_gradient_term(gradV, hess_u, epsilon, M)
    return lp_norm(_pointwise_norm(resid, 1), p, mask)


def error_hess(u_eps, u, hessV: Callable, hess_u: Callable, epsilon: float, p: float,
               mask: np.ndarray | None = None) -> float:
    """``|| D^2 u_eps - D^2 u - sum D^2 v^{ij}(x/eps) d_ij u ||_p`` (Frobenius pointwise).

    Defaults to the interior strip one cell away from the boundary.
    """
    _same_grid(u_eps, u)
    M = _arr(u_eps).shape[0] - 1
    resid = discrete_hessian(_arr(u_eps) - _arr(u)) - corrector_hessian_term(hessV, hess_u, epsilon, M)
    return lp_norm(_pointwise_norm(resid, 2), p, interior_mask(M) if mask is None else mask)


def w1p_norm(g, p: float, mask: np.ndarray | None = None) -> float:
    """``(||g||_p^p + ||grad g||_p^p)^(1/p)`` with finite-difference gradients."""
    v = _arr(g)
    grad = _pointwise_norm(discrete_gradient(v), 1)
    return (lp_norm(v, p, mask) ** p + lp_norm(grad, p, mask) ** p) ** (1.0 / p)


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


@dataclass
class RateFit:
    functional: str
    p: float | None
    slope: float
    intercept: float
    r_squared: float
    points_used: list[float]
    excluded: list[float] = field(default_factory=list)


def fit_rate(samples, functional: str = "", p: float | None = None) -> RateFit:
    """Least-squares line through ``(log eps, log E)``.

    ``samples`` is a sequence of ``(eps, E)``.  Zero values are rejected; use
    :func:`fit_samples` to drop them instead.
    """
    eps = np.array([s[0] for s in samples], dtype=float)
    err = np.array([s[1] for s in samples], dtype=float)
    if len(eps) < 3:
        raise ValueError(f"a rate fit needs at least 3 points, got {len(eps)}")
    if np.any(err <= 0):
        raise ValueError("rate fit needs positive errors; an exact zero cannot be placed on a log scale")
    x, y = np.log(eps), np.log(err)
    if np.ptp(x) == 0:
        raise ValueError("rate fit needs distinct epsilon values")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else max(0.0, 1.0 - ss_res / ss_tot)
    return RateFit(functional, p, float(slope), float(intercept), r2, eps.tolist())


def fit_samples(samples, functional: str, p: float | None = None, npoints: int = FIT_POINTS) -> RateFit:
    """Fit on the ``npoints`` smallest epsilons, excluding exact zeros."""
    usable = sorted((s for s in samples if s[1] > 0), key=lambda s: s[0])[:npoints]
    excluded = [float(s[0]) for s in samples if not s[1] > 0]
    fit = fit_rate(usable, functional, p)
    fit.excluded = excluded
    return fit


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one sweep.

    ``epsilons`` holds reciprocals ``k`` (eps = 1/k).  ``oracles`` maps each of
    ``r``, ``V``, ``u``, ``z`` to ``"closed-form"`` or ``"numeric"``.
    """

    coefficient: str = "cbad"
    rhs: str = "sinsin"
    backend: str = "fd-nondiv"
    epsilons: tuple[int, ...] = DEFAULT_EPSILONS
    ps: tuple[float, ...] = DEFAULT_PS
    functionals: tuple[str, ...] = ("plainLinf", "E0inf")
    mrule: int = epssolve.MRULE
    oracles: dict[str, str] = field(default_factory=lambda: {"r": "closed-form", "V": "closed-form",
                                                              "u": "closed-form", "z": "closed-form"})
    u_resolution: int = 1024
    cell_resolution: int | None = None  # None: the lattice of the fine grid, N = mrule
    fit_points: int = FIT_POINTS
    seed: int = 0

    def validate(self) -> None:
        if not Path(self.coefficient).is_file():
            analytic.get_coefficient(self.coefficient)
        analytic.builtin_rhs(self.rhs)
        if self.backend not in epssolve.BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; valid: {', '.join(epssolve.BACKENDS)}")
        if not self.epsilons:
            raise ValueError("epsilon list is empty")
        for k in self.epsilons:
            if int(k) != k or k < 1:
                raise ValueError(f"epsilon reciprocals must be positive integers, got {k}")
        bad = set(self.functionals) - set(FUNCTIONALS)
        if bad:
            raise ValueError(f"unknown functionals {sorted(bad)}; valid: {', '.join(FUNCTIONALS)}")
        for p in self.ps:
            if not 1 < p < math.inf:
                raise ValueError(f"p must lie in (1, inf), got {p}")
        for key, val in self.oracles.items():
            if key not in ("r", "V", "u", "z") or val not in ("closed-form", "numeric"):
                raise ValueError(f"bad oracle toggle {key}={val}")
        if self.mrule < 1:
            raise ValueError("mrule must be positive")
        if self.u_resolution < 8:
            raise ValueError("u_resolution must be at least 8")
        if self.fit_points < 3:
            raise ValueError("fit_points must be at least 3")
        if self.needs_cell() or Path(self.coefficient).is_file():
            from .fields import check_resolution
            check_resolution(self.cell_n)

    @property
    def cell_n(self) -> int:
        return self.mrule if self.cell_resolution is None else self.cell_resolution

    def needs_cell(self) -> bool:
        if Path(self.coefficient).is_file():
            return True
        return any(self.oracles.get(k) == "numeric" for k in ("r", "V"))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilons"] = [f"1/{k}" for k in self.epsilons]
        d["ps"] = list(self.ps)
        d["functionals"] = list(self.functionals)
        d["oracles"] = dict(sorted(self.oracles.items()))
        return d


@dataclass
class ErrorFunctionalSample:
    epsilon: float
    values: dict[str, float]
    M: int
    backend: str
    coefficient: str
    rhs: str


@dataclass
class RateReport:
    config: dict
    samples: list[ErrorFunctionalSample]
    fits: list[RateFit]
    provenance: dict[str, str]

    def fit(self, functional: str, p: float | None = None) -> RateFit:
        for f in self.fits:
            if f.functional == functional and (p is None or f.p == p):
                return f
        raise KeyError((functional, p))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "provenance": self.provenance,
            "samples": [asdict(s) for s in self.samples],
            "fits": [asdict(f) for f in self.fits],
        }


class TorusCorrector:
    """Numeric correctors with derivative accessors shaped like the closed forms.

    Gradients and Hessians of the discrete ``v^{ij}`` are taken with the
    same periodic central differences as the cell solver and evaluated
    off-grid by bilinear interpolation (exact at torus nodes).
    """

    def __init__(self, sol: cell.CellSolution):
        N = sol.N
        h = 1.0 / N
        self.N = N
        self.values = np.empty((2, 2, N, N))
        self.grad = np.empty((2, 2, 2, N, N))
        self.hess = np.empty((2, 2, 2, 2, N, N))
        for i in range(2):
            for j in range(2):
                v = sol.v(i, j).values
                self.values[i, j] = v
                self.grad[i, j] = cell.gradient(v)
                self.hess[i, j, 0, 0] = cell.d11(v, h)
                self.hess[i, j, 1, 1] = cell.d22(v, h)
                self.hess[i, j, 0, 1] = self.hess[i, j, 1, 0] = cell.d12(v, h)

    def V(self, y1, y2):
        return periodic_interpolate(self.values, y1, y2)

    def gradV(self, y1, y2):
        return periodic_interpolate(self.grad, y1, y2)

    def hessV(self, y1, y2):
        return periodic_interpolate(self.hess, y1, y2)


class _SplineField:
    """Tensor-product cubic spline through nodal data on the unit square."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        x = np.linspace(0.0, 1.0, values.shape[-1])
        lead = values.shape[:-2]
        flat = values.reshape((-1,) + values.shape[-2:])
        self._lead = lead
        self._splines = [RectBivariateSpline(x, x, v, kx=3, ky=3, s=0) for v in flat]

    def __call__(self, x1, x2) -> np.ndarray:
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        out = np.stack([s.ev(x1.ravel(), x2.ravel()).reshape(x1.shape) for s in self._splines])
        return out.reshape(self._lead + x1.shape)


class ExperimentInputs:
    """Resolved ingredients of one sweep: coefficient pieces and ``u``, ``z`` providers.

    Every ingredient is either the closed form or a computed counterpart,
    according to ``config.oracles``; the choice is recorded in
    ``provenance``.
    """

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.rhs = analytic.builtin_rhs(cfg.rhs)
        oracles = {"r": "closed-form", "V": "closed-form", "u": "closed-form", "z": "closed-form"}
        oracles.update(cfg.oracles)
        if Path(cfg.coefficient).is_file():
            # sampled coefficient: nothing is known in closed form
            self.pack = None
            self.A = CoefficientSpec.from_torus(TorusField.load(cfg.coefficient), Path(cfg.coefficient).stem)
            oracles = dict.fromkeys(oracles, "numeric")
        else:
            self.pack = analytic.get_coefficient(cfg.coefficient)
            self.A = self.pack.A
        if self.rhs.u is None:
            oracles["u"] = "numeric"
        exact_z = self.rhs.z is not None and cfg.coefficient == "cbad"
        if not exact_z:
            oracles["z"] = "numeric"
        self.oracles = oracles

        self.cell = None
        if oracles["r"] == "numeric" or oracles["V"] == "numeric":
            spec = self.A if self.pack is None else self.pack.spec
            self.cell = cell.solve_cell(spec, cfg.cell_n, with_chi=False)

        if oracles["r"] == "numeric":
            self.r = self.cell.r.interpolate
            self.Adiv = self.cell.Adiv.interpolate
        else:
            self.r, self.Adiv = self.pack.r, self.pack.Adiv

        if oracles["V"] == "numeric":
            tc = TorusCorrector(self.cell)
            self.V, self.gradV, self.hessV = tc.V, tc.gradV, tc.hessV
            self.Abar, self.c = self.cell.Abar, self.cell.c
        else:
            self.V, self.gradV, self.hessV = self._closed_V, self._closed_gradV, self._closed_hessV
            self.Abar, self.c = np.asarray(self.pack.Abar, dtype=float), np.asarray(self.pack.c_tensor)

        self._u = self._d2u = self._z = None
        if oracles["u"] == "numeric":
            fine = epssolve.solve_homogenized(self.Abar, self.rhs.f, cfg.u_resolution)
            self._u = _SplineField(fine.values)
            self._d2u = _SplineField(discrete_hessian(fine))
            if oracles["z"] == "numeric" and np.any(self.c):
                third = epssolve.numeric_third_derivatives(fine)
                hz = epssolve.compute_h(third, self.c, cfg.u_resolution)
                self._z = _SplineField(epssolve.solve_z(self.Abar, hz, cfg.u_resolution).values)

        self.provenance = {f"{k}": ("closed-form" if v == "closed-form" else self._describe(k))
                           for k, v in sorted(oracles.items())}
        if not np.any(self.c):
            self.provenance["z"] = "zero (vanishing c-tensor)"
        self.provenance["A"] = "closed-form" if self.pack is not None else f"sampled ({cfg.coefficient})"

    def _describe(self, key: str) -> str:
        if key in ("r", "V"):
            return f"numeric (cell grid N={self.cfg.cell_n})"
        if key == "u":
            return f"numeric (homogenized solve at M={self.cfg.u_resolution}, cubic spline)"
        if self.oracles["u"] == "numeric":
            return f"numeric (z solve at M={self.cfg.u_resolution}, h from finite differences)"
        return "numeric (z solve on the sweep grid, h from closed-form third derivatives)"

    # closed-form correctors, index layout [i, j, ...]
    def _closed(self, method: str, y1, y2):
        return np.array([[getattr(self.pack.v(i, j), method)(y1, y2) for j in range(2)] for i in range(2)])

    def _closed_V(self, y1, y2):
        return np.array([[self.pack.v(i, j)(y1, y2) for j in range(2)] for i in range(2)])

    def _closed_gradV(self, y1, y2):
        return self._closed("grad", y1, y2)

    def _closed_hessV(self, y1, y2):
        return self._closed("hess", y1, y2)

    def u_nodes(self, M: int) -> np.ndarray:
        X = square_nodes(M)
        return self.rhs.u(*X) if self._u is None else self._u(*X)

    def hess_u(self, x1, x2) -> np.ndarray:
        return self.rhs.u.hess(x1, x2) if self._d2u is None else self._d2u(x1, x2)

    def z_nodes(self, M: int) -> np.ndarray:
        if not np.any(self.c):
            return np.zeros((M + 1, M + 1))
        if self.oracles["z"] == "closed-form":
            return self.rhs.z(*square_nodes(M))
        if self._z is not None:
            return self._z(*square_nodes(M))
        h = epssolve.compute_h(self.rhs.u.third, self.c, M)
        return epssolve.solve_z(self.Abar, h, M).values


def key(functional: str, p: float | None = None) -> str:
    """Sample key such as ``"E1p[2]"``."""
    return functional if p is None else f"{functional}[{p:g}]"


def _per_p(functional: str) -> bool:
    return functional in ("plainW1p", "E1p", "E2p")


def evaluate_sample(inputs: ExperimentInputs, k: int, M: int | None = None) -> ErrorFunctionalSample:
    """All requested functionals at ``eps = 1/k`` on the ``M`` grid (default ``mrule * k``)."""
    cfg = inputs.cfg
    eps = 1.0 / k
    M = cfg.mrule * k if M is None else M
    wanted = set(cfg.functionals)
    values: dict[str, float] = {}
    try:
        needs_u = wanted - {"theta"}
        if needs_u:
            problem = epssolve.EpsProblem(inputs.A, inputs.rhs.f, eps, cfg.backend,
                                          r=inputs.r, Adiv=inputs.Adiv, mrule=cfg.mrule)
            u_eps = epssolve.solve_eps(problem, M).values
            u = inputs.u_nodes(M)
            z = inputs.z_nodes(M) if wanted & {"E0inf", "E1p"} else None
        if wanted & {"plainLinf", "E0inf"}:
            plain, corrected = error_sup(u_eps, u, np.zeros_like(u) if z is None else z, eps)
            if "plainLinf" in wanted:
                values["plainLinf"] = plain
            if "E0inf" in wanted:
                values["E0inf"] = corrected
        for p in cfg.ps:
            if "plainW1p" in wanted:
                values[key("plainW1p", p)] = w1p_norm(u_eps - u, p)
            if "E1p" in wanted:
                values[key("E1p", p)] = error_grad(u_eps, u, z, inputs.gradV, inputs.hess_u, eps, p)
            if "E2p" in wanted:
                values[key("E2p", p)] = error_hess(u_eps, u, inputs.hessV, inputs.hess_u, eps, p)
        if "theta" in wanted:
            theta = epssolve.solve_boundary_corrector(inputs.A, eps, inputs.V, inputs.hess_u, M, cfg.mrule)
            values["theta"] = eps * w1p_norm(theta, 2)
    except SolverError as exc:
        raise SolverError(f"eps=1/{k}, M={M}: {exc}", exc.residual) from exc
    except ValueError as exc:
        raise ValueError(f"eps=1/{k}, M={M}: {exc}") from exc
    ordered = {kk: float(values[kk]) for kk in _value_order(cfg) if kk in values}
    return ErrorFunctionalSample(eps, ordered, M, cfg.backend, cfg.coefficient, cfg.rhs)


def _value_order(cfg: ExperimentConfig) -> list[str]:
    out = []
    for fn in FUNCTIONALS:
        if fn in cfg.functionals:
            out += [key(fn, p) for p in cfg.ps] if _per_p(fn) else [key(fn)]
    return out


_WORKER_INPUTS: ExperimentInputs | None = None


def _worker(k: int) -> ErrorFunctionalSample:
    return evaluate_sample(_WORKER_INPUTS, k)


def run_experiment(cfg: ExperimentConfig, jobs: int | None = 1, inputs: ExperimentInputs | None = None) -> RateReport:
    """Run the full sweep and fit every functional.

    Per-epsilon jobs are independent; with ``jobs > 1`` they run in forked
    worker processes.  Samples are ordered by decreasing epsilon regardless
    of completion order, so the report is deterministic.
    """
    global _WORKER_INPUTS
    cfg.validate()
    inputs = inputs or ExperimentInputs(cfg)
    ks = sorted(set(int(k) for k in cfg.epsilons))
    if jobs is None:
        jobs = os.cpu_count() or 1
    if jobs > 1 and len(ks) > 1 and "fork" in multiprocessing.get_all_start_methods():
        _WORKER_INPUTS = inputs
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=min(jobs, len(ks)), mp_context=ctx) as pool:
                samples = list(pool.map(_worker, ks))
        finally:
            _WORKER_INPUTS = None
    else:
        samples = []
        for k in ks:
            log.info("eps=1/%d", k)
            samples.append(evaluate_sample(inputs, k))

    fits = []
    if len(ks) >= 3:
        for kk in _value_order(cfg):
            fn, _, rest = kk.partition("[")
            p = float(rest[:-1]) if rest else None
            pts = [(s.epsilon, s.values[kk]) for s in samples]
            usable = [pt for pt in pts if pt[1] > 0]
            if len(usable) < 3:
                log.warning("%s: fewer than 3 nonzero samples, no fit", kk)
                continue
            fits.append(fit_samples(pts, fn, p, cfg.fit_points))
    from . import __version__

    provenance = dict(inputs.provenance)
    provenance["version"] = __version__
    return RateReport(cfg.to_dict(), samples, fits, provenance)


def mesh_study(cfg: ExperimentConfig, k: int, factors=(1, 2, 4)) -> list[ErrorFunctionalSample]:
    """Functionals at fixed ``eps = 1/k`` on the grids ``M = factor * mrule * k``."""
    cfg.validate()
    inputs = ExperimentInputs(cfg)
    return [evaluate_sample(inputs, k, f * cfg.mrule * k) for f in factors]


def _cfg(**kw) -> ExperimentConfig:
    return ExperimentConfig(**kw)


PRESETS: dict[str, list[tuple[str, ExperimentConfig]]] = {
    "figure-1": [("cbad-sinsin", _cfg(coefficient="cbad", rhs="sinsin", functionals=("plainLinf", "E0inf")))],
    "figure-2": [("cbad-poly", _cfg(coefficient="cbad", rhs="poly", functionals=("plainW1p", "E1p")))],
    # grid-lattice correctors: the Hessian residual then compares like stencils with like
    "figure-3": [("cbad-poly", _cfg(coefficient="cbad", rhs="poly", functionals=("E2p",),
                                    oracles={"V": "numeric"}))],
    "figure-4": [("cbad-poly", _cfg(coefficient="cbad", rhs="poly", functionals=("plainLinf", "E0inf"))),
                 ("cgood-poly", _cfg(coefficient="cgood", rhs="poly", functionals=("plainLinf",)))],
    "figure-5": [("cbad-cubic-sine", _cfg(coefficient="cbad", rhs="cubic-sine", functionals=("plainLinf", "E0inf"))),
                 ("cgood-cubic-sine", _cfg(coefficient="cgood", rhs="cubic-sine", functionals=("plainLinf",)))],
    # sinsin has vanishing boundary data (diagonal V, d11 u = d22 u = 0 on the walls), so theta is nontrivial only for poly
    "boundary-layer": [("cbad-poly", _cfg(coefficient="cbad", rhs="poly", functionals=("theta",)))],
}


def preset(name: str) -> list[tuple[str, ExperimentConfig]]:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; valid: {', '.join(PRESETS)}")
    return [(label, ExperimentConfig(**asdict(c))) for label, c in PRESETS[name]]
