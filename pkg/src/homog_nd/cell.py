"""Periodic cell problems on the unit torus.

All operators use second-order central differences on the uniform ``N x N``
periodic grid with spacing ``h = 1/N``:

* ``A:D_h^2 v = a11 d11 v + 2 a12 d12 v + a22 d22 v`` (compact 3-point
  second differences, 4-point cross stencil for the mixed term);
* its transpose ``D_h^2:(A r) = d11(a11 r) + 2 d12(a12 r) + d22(a22 r)``.

Both singular systems are solved on the mean-zero subspace by GMRES, left
preconditioned with the FFT inverse of the constant-coefficient operator
built from the grid mean of ``A``.  Integrals over ``Y`` are node averages
(periodic trapezoidal rule).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .errors import CompatibilityError, SolverError
from .fields import CoefficientSpec, TorusField, check_resolution

log = logging.getLogger(__name__)

TOL = 1e-10
MAXITER = 10_000
COMPAT_TOL = 1e-8
RESTART = 60


# ---------------------------------------------------------------------------
# periodic difference operators
# ---------------------------------------------------------------------------


def _s(v, di, dj):
    """v[i + di, j + dj] with periodic wrap."""
    return np.roll(v, (-di, -dj), axis=(-2, -1))


def d1(v, h):
    return (_s(v, 1, 0) - _s(v, -1, 0)) / (2 * h)


def d2(v, h):
    return (_s(v, 0, 1) - _s(v, 0, -1)) / (2 * h)


def d11(v, h):
    return (_s(v, 1, 0) - 2 * v + _s(v, -1, 0)) / h**2


def d22(v, h):
    return (_s(v, 0, 1) - 2 * v + _s(v, 0, -1)) / h**2


def d12(v, h):
    return (_s(v, 1, 1) - _s(v, 1, -1) - _s(v, -1, 1) + _s(v, -1, -1)) / (4 * h**2)


def gradient(v: np.ndarray) -> np.ndarray:
    h = 1.0 / v.shape[-1]
    return np.stack([d1(v, h), d2(v, h)])


def nondiv_apply(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``A:D_h^2 v`` for matrix samples ``a`` of shape ``(2, 2, N, N)``."""
    h = 1.0 / v.shape[-1]
    return a[0, 0] * d11(v, h) + 2 * a[0, 1] * d12(v, h) + a[1, 1] * d22(v, h)


def adjoint_apply(a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``D_h^2:(A w)``, the transpose of :func:`nondiv_apply`."""
    h = 1.0 / w.shape[-1]
    return d11(a[0, 0] * w, h) + 2 * d12(a[0, 1] * w, h) + d22(a[1, 1] * w, h)


def _angles(N):
    theta = 2 * np.pi * np.fft.fftfreq(N)
    return np.meshgrid(theta, theta, indexing="ij")


def constant_symbol(abar: np.ndarray, N: int) -> np.ndarray:
    """Fourier symbol of ``abar:D_h^2`` (same stencils as :func:`nondiv_apply`)."""
    h = 1.0 / N
    t1, t2 = _angles(N)
    l11 = -4 * np.sin(t1 / 2) ** 2 / h**2
    l22 = -4 * np.sin(t2 / 2) ** 2 / h**2
    l12 = -np.sin(t1) * np.sin(t2) / h**2
    return abar[0, 0] * l11 + 2 * abar[0, 1] * l12 + abar[1, 1] * l22


def _fft_inverse(symbol: np.ndarray, g: np.ndarray) -> np.ndarray:
    ghat = np.fft.fft2(g)
    out = np.zeros_like(ghat)
    nz = np.abs(symbol) > 1e-12 * np.abs(symbol).max()
    out[nz] = ghat[nz] / symbol[nz]
    return np.fft.ifft2(out).real


def solve_periodic(apply, rhs: np.ndarray, abar0: np.ndarray, *, tol: float = TOL,
                   maxiter: int = MAXITER) -> tuple[np.ndarray, float]:
    """Mean-zero solution of ``apply(x) = rhs`` for a singular periodic operator.

    Returns the solution and the achieved relative residual of the
    preconditioned system.  Raises :class:`SolverError` when GMRES cannot
    reach ``tol`` within ``maxiter`` inner iterations.
    """
    N = rhs.shape[-1]
    n = N * N
    symbol = constant_symbol(abar0, N)

    def precond(g):
        return _fft_inverse(symbol, g)

    b = precond(rhs).ravel()
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0 or np.abs(rhs).max() == 0.0:
        return np.zeros_like(rhs), 0.0

    def matvec(x):
        x = x.reshape(N, N)
        y = precond(apply(x - x.mean()))
        return (y - y.mean()).ravel()

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    x, info = gmres(op, b, rtol=tol, atol=0.0, restart=RESTART, maxiter=max(1, maxiter // RESTART))
    res = float(np.linalg.norm(op.matvec(x) - b) / bnorm)
    if res > tol * 1.01:
        raise SolverError(f"periodic GMRES stagnated at relative residual {res:.3e} (info={info})", res)
    x = x.reshape(N, N)
    return x - x.mean(), res


# ---------------------------------------------------------------------------
# cell quantities
# ---------------------------------------------------------------------------


def _samples(A, N: int | None = None) -> np.ndarray:
    if isinstance(A, TorusField):
        if N is not None and A.N != N:
            raise ValueError(f"coefficient sampled at N={A.N}, requested N={N}")
        return A.values
    if isinstance(A, np.ndarray):
        return A
    return A.sample(N).values


def _check_same_grid(*arrays):
    shapes = {a.shape[-2:] for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"dimension mismatch between grids {sorted(shapes)}")


def solve_invariant_measure(A: CoefficientSpec | TorusField, N: int, *, tol: float = TOL,
                            maxiter: int = MAXITER) -> TorusField:
    """Positive periodic ``r`` with ``D_h^2:(A r) = 0`` and unit node mean.

    The null vector of the adjoint is sought as ``r = 1 + w`` with ``w``
    mean-zero, i.e. ``D_h^2:(A w) = -D_h^2:A``; since the adjoint is
    injective on mean-zero fields this is one exact step of inverse
    iteration from the constant vector.
    """
    check_resolution(N)
    a = _samples(A, N)
    abar0 = a.mean(axis=(-2, -1))
    rhs = -adjoint_apply(a, np.ones((N, N)))
    w, _ = solve_periodic(lambda x: adjoint_apply(a, x), rhs, abar0, tol=tol, maxiter=maxiter)
    r = 1.0 + w
    r /= r.mean()
    if r.min() <= 0:
        raise SolverError(f"invariant measure has nonpositive node value {r.min():.3e}; resolution N={N} too coarse")
    return TorusField(r)


def effective_coefficient(A: CoefficientSpec | TorusField, r: TorusField) -> np.ndarray:
    """``Abar = mean(A r)`` over the nodes of ``r``."""
    a = _samples(A, r.N)
    _check_same_grid(a, r.values)
    abar = (a * r.values).mean(axis=(-2, -1))
    return 0.5 * (abar + abar.T)


def solve_corrector(A: CoefficientSpec | TorusField, Abar: np.ndarray, k: int, l: int, N: int,
                    r: TorusField | None = None, *, tol: float = TOL,
                    maxiter: int = MAXITER) -> TorusField:
    """Mean-zero ``v^{kl}`` with ``-A:D_h^2 v = a_kl - abar_kl`` (0-based k, l).

    If ``r`` is given, the solvability condition ``mean((a_kl - abar_kl) r) = 0``
    is checked first.
    """
    check_resolution(N)
    k, l = min(k, l), max(k, l)
    a = _samples(A, N)
    src = a[k, l] - Abar[k, l]
    if r is not None:
        _check_same_grid(a, r.values)
        defect = float(np.mean(src * r.values))
        if abs(defect) > COMPAT_TOL:
            raise CompatibilityError(
                f"corrector ({k + 1},{l + 1}): right-hand side has mean {defect:.3e} against r; "
                "Abar is inconsistent with the coefficient"
            )
    abar0 = a.mean(axis=(-2, -1))
    v, _ = solve_periodic(lambda x: nondiv_apply(a, x), -src, abar0, tol=tol, maxiter=maxiter)
    return TorusField(v)


def c_tensor(A: CoefficientSpec | TorusField, r: TorusField,
             V: dict[tuple[int, int], TorusField]) -> np.ndarray:
    """``c[j, k, l] = mean(r (A e_j) . grad v^{kl})``, symmetric in ``(k, l)``."""
    a = _samples(A, r.N)
    c = np.zeros((2, 2, 2))
    for (k, l), v in V.items():
        _check_same_grid(a, v.values)
        g = gradient(v.values)
        for j in range(2):
            flux = a[0, j] * g[0] + a[1, j] * g[1]
            c[j, k, l] = c[j, l, k] = float(np.mean(flux * r.values))
    return c


def classify(c: np.ndarray, scale: float = 1.0, tol: float = 1e-5) -> str:
    """``"c-bad"`` iff some ``|c_j^{kl}| > tol * scale`` (ties are c-good)."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    return "c-bad" if float(np.abs(c).max()) > tol * scale else "c-good"


def chi_source(a: np.ndarray, v: TorusField, c_jkl: float, j: int) -> np.ndarray:
    g = gradient(v.values)
    return a[0, j] * g[0] + a[1, j] * g[1] - c_jkl


def solve_chi(A: CoefficientSpec | TorusField, r: TorusField, V: dict[tuple[int, int], TorusField],
              c: np.ndarray, j: int, k: int, l: int, N: int, *, tol: float = TOL,
              maxiter: int = MAXITER) -> TorusField:
    """Mean-zero ``chi^{jkl}`` with ``-A:D_h^2 chi = A e_j . grad v^{kl} - c_j^{kl}``."""
    check_resolution(N)
    a = _samples(A, N)
    v = V[(min(k, l), max(k, l))]
    _check_same_grid(a, r.values, v.values)
    src = chi_source(a, v, c[j, k, l], j)
    defect = float(np.mean(src * r.values))
    if abs(defect) > COMPAT_TOL:
        raise CompatibilityError(
            f"chi ({j + 1},{k + 1},{l + 1}): source has mean {defect:.3e} against r; c-tensor is inconsistent"
        )
    abar0 = a.mean(axis=(-2, -1))
    chi, _ = solve_periodic(lambda x: nondiv_apply(a, x), -src, abar0, tol=tol, maxiter=maxiter)
    return TorusField(chi)


def column_divergence(adiv: np.ndarray) -> np.ndarray:
    """``sum_i D_i adiv[i, j]`` for j = 1, 2, shape ``(2, N, N)``."""
    h = 1.0 / adiv.shape[-1]
    return np.stack([d1(adiv[0, j], h) + d2(adiv[1, j], h) for j in range(2)])


def divergence_form_transform(A: CoefficientSpec | TorusField, r: TorusField,
                              N: int | None = None) -> tuple[TorusField, TorusField]:
    """Skew potential ``psi`` and ``Adiv = r A + [[0, psi], [-psi, 0]]``.

    With ``b_j = sum_i D_i (r a_ij)``, ``psi`` is the mean-zero solution of
    ``(D_1^2 + D_2^2) psi = D_2 b_1 - D_1 b_2``.  Using the composed central
    differences (rather than the compact Laplacian) makes the column
    divergences of ``Adiv`` vanish whenever ``b`` is discretely
    divergence-free.
    """
    N = r.N if N is None else N
    a = _samples(A, N)
    _check_same_grid(a, r.values)
    h = 1.0 / N
    ra = a * r.values
    b = [d1(ra[0, j], h) + d2(ra[1, j], h) for j in range(2)]
    mean_b = max(abs(float(bj.mean())) for bj in b)
    scale = max(1.0, float(np.abs(b).max()))
    if mean_b > COMPAT_TOL * scale:
        raise CompatibilityError(f"flux b has nonzero mean {mean_b:.3e}; r does not solve the adjoint problem")
    rhs = d2(b[0], h) - d1(b[1], h)
    t1, t2 = _angles(N)
    symbol = -(np.sin(t1) ** 2 + np.sin(t2) ** 2) / h**2
    psi = _fft_inverse(symbol, rhs)
    psi -= psi.mean()
    adiv = ra.copy()
    adiv[0, 1] += psi
    adiv[1, 0] -= psi
    return TorusField(psi), TorusField(adiv)


# ---------------------------------------------------------------------------
# full bundle
# ---------------------------------------------------------------------------

PAIRS = ((0, 0), (0, 1), (1, 1))


@dataclass
class CellSolution:
    """Everything the torus engine produces for one coefficient and resolution.

    ``V`` and ``chi`` use 0-based keys: ``V[(k, l)]`` with ``k <= l`` and
    ``chi[(j, k, l)]``.
    """

    N: int
    r: TorusField
    Abar: np.ndarray
    V: dict[tuple[int, int], TorusField]
    c: np.ndarray
    chi: dict[tuple[int, int, int], TorusField]
    psi: TorusField
    Adiv: TorusField
    A: TorusField
    residuals: dict[str, float] = field(default_factory=dict)

    def v(self, k: int, l: int) -> TorusField:
        return self.V[(min(k, l), max(k, l))]

    def classification(self, tol: float = 1e-5) -> str:
        return classify(self.c, scale=float(np.abs(self.Abar).max()), tol=tol)

    def c_entries(self) -> dict[str, float]:
        return {f"c_{j + 1}^{k + 1}{l + 1}": float(self.c[j, k, l]) for j in range(2) for k, l in PAIRS}


def solve_cell(A: CoefficientSpec, N: int = 128, *, with_chi: bool = True, tol: float = TOL) -> CellSolution:
    """Run every cell problem for ``A`` at resolution ``N``."""
    check_resolution(N)
    a = A.sample(N) if not isinstance(A, TorusField) else A
    residuals: dict[str, float] = {}
    r = solve_invariant_measure(a, N, tol=tol)
    residuals["invariant_measure"] = float(np.abs(adjoint_apply(a.values, r.values)).max())
    Abar = effective_coefficient(a, r)
    V = {}
    for k, l in PAIRS:
        V[(k, l)] = solve_corrector(a, Abar, k, l, N, r, tol=tol)
        res = nondiv_apply(a.values, V[(k, l)].values) + (a.values[k, l] - Abar[k, l])
        residuals[f"v{k + 1}{l + 1}"] = float(np.abs(res).max())
    c = c_tensor(a, r, V)
    chi = {}
    if with_chi:
        for j in range(2):
            for k, l in PAIRS:
                chi[(j, k, l)] = solve_chi(a, r, V, c, j, k, l, N, tol=tol)
    psi, adiv = divergence_form_transform(a, r)
    residuals["adiv_column_divergence"] = float(np.abs(column_divergence(adiv.values)).max())
    log.info("cell N=%d Abar=%s max|c|=%.3e", N, Abar.tolist(), np.abs(c).max())
    return CellSolution(N, r, Abar, V, c, chi, psi, adiv, a, residuals)
