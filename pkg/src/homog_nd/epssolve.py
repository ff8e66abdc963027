"""Dirichlet solvers on the unit square.

Two discretizations of ``-A(x/eps):D^2 u = f``:

``fd-nondiv``
    second-order central differences of the nondivergence operator at the
    interior nodes (compact second differences, cross stencil for the mixed
    term); monotone when ``A`` is diagonal.
``fem-div``
    piecewise-linear elements on the right-triangle mesh for the equivalent
    divergence form ``-div(Adiv(x/eps) grad u) = r(x/eps) f``.

Boundary nodes are eliminated; Dirichlet data enters the right-hand side.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from .errors import SolverError
from .fields import GridFunction, square_nodes

log = logging.getLogger(__name__)

BACKENDS = ("fd-nondiv", "fem-div")
DIRECT_LIMIT = 2_000_000
TOL = 1e-10
MRULE = 16


def as_reciprocal(epsilon) -> int:
    """Return ``k`` with ``epsilon == 1/k``; reject anything else."""
    if isinstance(epsilon, str):
        epsilon = float(Fraction(epsilon))
    epsilon = float(epsilon)
    if not 0 < epsilon <= 1:
        raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
    k = round(1.0 / epsilon)
    if abs(k * epsilon - 1.0) > 1e-9:
        raise ValueError(f"epsilon must be the reciprocal of an integer, got {epsilon}")
    return k


def check_resolution(epsilon: float, M: int, mrule: int = MRULE) -> None:
    k = as_reciprocal(epsilon)
    if M < mrule * k:
        raise ValueError(f"M={M} violates the resolution rule M >= {mrule}/eps; minimum M is {mrule * k}")


@dataclass
class EpsProblem:
    """One instance of the oscillatory Dirichlet problem.

    ``A`` and ``Adiv`` map periodic cell coordinates to ``(2, 2, ...)``
    arrays, ``r`` and ``f`` map to scalars.  ``Adiv`` is only needed for the
    ``fem-div`` backend.
    """

    A: Callable
    f: Callable
    epsilon: float
    backend: str = "fd-nondiv"
    r: Callable | None = None
    Adiv: Callable | None = None
    mrule: int = MRULE

    def __post_init__(self):
        as_reciprocal(self.epsilon)
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; valid: {', '.join(BACKENDS)}")


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------


def sparse_solve(K: sp.spmatrix, b: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Direct LU below ``DIRECT_LIMIT`` unknowns, ILU-preconditioned GMRES above."""
    K = K.tocsc()
    n = K.shape[0]
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    if n < DIRECT_LIMIT:
        x = splu(K, permc_spec="COLAMD").solve(b)
    else:
        ilu = spilu(K, drop_tol=1e-5, fill_factor=20)
        prec = LinearOperator(K.shape, matvec=ilu.solve, dtype=float)
        x, info = gmres(K, b, M=prec, rtol=tol, atol=0.0, restart=200, maxiter=50)
    res = float(np.linalg.norm(K @ x - b) / bnorm)
    if not np.isfinite(res) or res > max(tol, 1e-12 * n):
        raise SolverError(f"sparse solve reached relative residual {res:.3e}", res)
    return x


def _interior_index(M: int) -> np.ndarray:
    idx = -np.ones((M + 1, M + 1), dtype=np.int64)
    idx[1:-1, 1:-1] = np.arange((M - 1) ** 2).reshape(M - 1, M - 1)
    return idx


def _boundary_mask(M: int) -> np.ndarray:
    mask = np.zeros((M + 1, M + 1), dtype=bool)
    mask[0] = mask[-1] = mask[:, 0] = mask[:, -1] = True
    return mask


def _fd_system(a: np.ndarray, M: int, g: np.ndarray | None):
    """Matrix of ``-A:D_h^2`` on interior nodes and boundary contribution.

    ``a`` holds nodal coefficient values of shape ``(2, 2, M+1, M+1)``.
    """
    h = 1.0 / M
    idx = _interior_index(M)
    I, J = np.meshgrid(np.arange(1, M), np.arange(1, M), indexing="ij")
    a11 = a[0, 0, 1:-1, 1:-1]
    a12 = a[0, 1, 1:-1, 1:-1]
    a22 = a[1, 1, 1:-1, 1:-1]
    stencil = [
        (0, 0, 2 * (a11 + a22) / h**2),
        (1, 0, -a11 / h**2),
        (-1, 0, -a11 / h**2),
        (0, 1, -a22 / h**2),
        (0, -1, -a22 / h**2),
    ]
    if np.any(a12 != 0):
        w = -2 * a12 / (4 * h**2)
        stencil += [(1, 1, w), (-1, -1, w), (1, -1, -w), (-1, 1, -w)]
    rows, cols, vals = [], [], []
    bcorr = np.zeros((M - 1, M - 1))
    row = idx[1:-1, 1:-1]
    for di, dj, coef in stencil:
        coef = np.broadcast_to(coef, row.shape)
        nb = idx[I + di, J + dj]
        inside = nb >= 0
        rows.append(row[inside])
        cols.append(nb[inside])
        vals.append(coef[inside])
        if g is not None:
            bcorr -= np.where(inside, 0.0, coef * g[I + di, J + dj])
    n = (M - 1) ** 2
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return K, bcorr


def _fem_system(adiv_cell: Callable, weight: np.ndarray, M: int, epsilon: float, g: np.ndarray | None):
    """P1 stiffness for ``int Adiv(x/eps) grad u . grad v`` and lumped load weights.

    Each cell ``[i, i+1] x [j, j+1]`` is cut along its ``(i, j)-(i+1, j+1)``
    diagonal; ``Adiv`` is evaluated at triangle centroids.
    """
    h = 1.0 / M
    area = 0.5 * h * h
    I, J = np.meshgrid(np.arange(M), np.arange(M), indexing="ij")
    node = lambda di, dj: ((I + di) * (M + 1) + (J + dj)).ravel()
    # vertex lists and reference gradients (times h) of the two triangle types
    tris = [
        ((node(0, 0), node(1, 0), node(1, 1)), np.array([[-1.0, 0.0], [1.0, -1.0], [0.0, 1.0]]), (2 / 3, 1 / 3)),
        ((node(0, 0), node(1, 1), node(0, 1)), np.array([[0.0, -1.0], [1.0, 0.0], [-1.0, 1.0]]), (1 / 3, 2 / 3)),
    ]
    rows, cols, vals = [], [], []
    for verts, grads, (cx, cy) in tris:
        xc = ((I + cx) * h).ravel()
        yc = ((J + cy) * h).ravel()
        Ac = adiv_cell(xc / epsilon, yc / epsilon)  # (2, 2, T)
        for p in range(3):
            for q in range(3):
                # grad phi_p . Adiv grad phi_q
                val = area / h**2 * np.einsum("i,ijt,j->t", grads[p], Ac, grads[q])
                rows.append(verts[p])
                cols.append(verts[q])
                vals.append(val)
    nn = (M + 1) ** 2
    K = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nn, nn))
    # lumped mass: each node gets area/3 from every incident triangle
    count = np.zeros((M + 1, M + 1))
    count[:-1, :-1] += 2
    count[1:, 1:] += 2
    count[1:, :-1] += 1
    count[:-1, 1:] += 1
    load = (area / 3.0) * count * weight
    interior = ~_boundary_mask(M).ravel()
    Kii = K[interior][:, interior]
    rhs = load.ravel()[interior]
    if g is not None:
        rhs = rhs - K[interior][:, ~interior] @ g.ravel()[~interior]
    return Kii, rhs


def _assemble_and_solve(problem: EpsProblem, M: int, f_nodes: np.ndarray, g: np.ndarray | None) -> GridFunction:
    X1, X2 = square_nodes(M)
    eps = problem.epsilon
    if problem.backend == "fd-nondiv":
        a = problem.A(X1 / eps, X2 / eps)
        K, bcorr = _fd_system(a, M, g)
        rhs = (f_nodes[1:-1, 1:-1] + bcorr).ravel()
    else:
        if problem.Adiv is None or problem.r is None:
            raise ValueError("fem-div backend needs Adiv and r; compute them with cell.divergence_form_transform")
        weight = problem.r(X1 / eps, X2 / eps) * f_nodes
        K, rhs = _fem_system(problem.Adiv, weight, M, eps, g)
    x = sparse_solve(K, rhs)
    u = np.zeros((M + 1, M + 1)) if g is None else g.copy()
    u[1:-1, 1:-1] = x.reshape(M - 1, M - 1)
    return GridFunction(u, dirichlet=g is None)


# ---------------------------------------------------------------------------
# public solvers
# ---------------------------------------------------------------------------


def solve_eps(problem: EpsProblem, M: int) -> GridFunction:
    """Nodal solution of the oscillatory problem with zero Dirichlet data."""
    check_resolution(problem.epsilon, M, problem.mrule)
    f_nodes = problem.f(*square_nodes(M))
    return _assemble_and_solve(problem, M, np.asarray(f_nodes, dtype=float), None)


def _constant(Abar) -> Callable:
    m = np.asarray(Abar, dtype=float)
    if m.shape != (2, 2) or not np.allclose(m, m.T) or np.linalg.eigvalsh(m).min() <= 0:
        raise ValueError("Abar must be symmetric positive definite")
    return lambda y1, y2: np.broadcast_to(m.reshape(2, 2, 1, 1), (2, 2) + np.shape(y1)).copy()


def solve_homogenized(Abar, f: Callable | np.ndarray, M: int) -> GridFunction:
    """``-Abar:D_h^2 u = f`` with zero Dirichlet data.

    ``f`` is a callable on the square or an array of nodal values.
    """
    problem = EpsProblem(_constant(Abar), f if callable(f) else (lambda x1, x2: f), 1.0, mrule=1)
    f_nodes = f(*square_nodes(M)) if callable(f) else np.asarray(f, dtype=float)
    if f_nodes.shape != (M + 1, M + 1):
        raise ValueError(f"nodal source has shape {f_nodes.shape}, expected {(M + 1, M + 1)}")
    return _assemble_and_solve(problem, M, f_nodes, None)


def compute_h(third: Callable | None, c: np.ndarray, M: int) -> np.ndarray:
    """Nodal ``h = sum_jkl c_j^{kl} d^3_{jkl} u``.

    ``third(x1, x2)`` returns all third derivatives of ``u`` as a
    ``(2, 2, 2, ...)`` array (see :func:`numeric_third_derivatives` for a
    grid-based accessor).
    """
    if third is None:
        raise ValueError("compute_h needs a third-derivative accessor for u")
    t = third(*square_nodes(M))
    return np.einsum("jkl,jkl...->...", np.asarray(c, dtype=float), t)


def solve_z(Abar, h: Callable | np.ndarray, M: int) -> GridFunction:
    """``-Abar:D_h^2 z = -h`` with zero Dirichlet data."""
    if callable(h):
        return solve_homogenized(Abar, lambda x1, x2: -h(x1, x2), M)
    return solve_homogenized(Abar, -np.asarray(h, dtype=float), M)


def boundary_data(V: Callable, hess_u: Callable, epsilon: float, M: int) -> np.ndarray:
    """``-V(x/eps):D^2 u(x)`` on all nodes (only boundary values are used).

    ``V(y1, y2)`` and ``hess_u(x1, x2)`` return ``(2, 2, ...)`` arrays.
    """
    X1, X2 = square_nodes(M)
    return -np.einsum("ij...,ij...->...", V(X1 / epsilon, X2 / epsilon), hess_u(X1, X2))


def solve_boundary_corrector(A: Callable, epsilon: float, V: Callable, hess_u: Callable, M: int,
                             mrule: int = MRULE) -> GridFunction:
    """``-A(x/eps):D_h^2 theta = 0`` with oscillatory data ``-V(x/eps):D^2 u`` on the boundary."""
    check_resolution(epsilon, M, mrule)
    g = boundary_data(V, hess_u, epsilon, M)
    g[~_boundary_mask(M)] = 0.0
    problem = EpsProblem(A, lambda x1, x2: np.zeros_like(x1), epsilon, mrule=mrule)
    return _assemble_and_solve(problem, M, np.zeros((M + 1, M + 1)), g)


# ---------------------------------------------------------------------------
# nodal derivatives
# ---------------------------------------------------------------------------


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, GridFunction) else np.asarray(g, dtype=float)


def discrete_gradient(g: GridFunction | np.ndarray) -> np.ndarray:
    """Second-order gradient on all nodes, shape ``(2, M+1, M+1)``.

    Central differences inside, second-order one-sided formulas on the
    boundary rows.
    """
    v = _values(g)
    h = 1.0 / (v.shape[0] - 1)
    return np.stack(np.gradient(v, h, edge_order=2))


def _second(v: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(v, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2 * v[1:-1] + v[:-2]) / h**2
    out[0] = (2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]) / h**2
    out[-1] = (2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def discrete_hessian(g: GridFunction | np.ndarray) -> np.ndarray:
    """Second-order Hessian on all nodes, shape ``(2, 2, M+1, M+1)``.

    Interior values use the compact second differences and the 4-point
    cross stencil; boundary rows use one-sided formulas.
    """
    v = _values(g)
    M = v.shape[0] - 1
    if M < 4:
        raise ValueError("discrete_hessian needs M >= 4")
    h = 1.0 / M
    d11 = _second(v, h, 0)
    d22 = _second(v, h, 1)
    d12 = np.gradient(np.gradient(v, h, axis=0, edge_order=2), h, axis=1, edge_order=2)
    return np.stack([np.stack([d11, d12]), np.stack([d12, d22])])


def _fd_weights(offsets: np.ndarray, m: int) -> np.ndarray:
    """Weights of the ``m``-th derivative at 0 from samples at integer offsets."""
    n = len(offsets)
    V = np.vander(offsets.astype(float), n, increasing=True).T
    rhs = np.zeros(n)
    rhs[m] = float(np.prod(np.arange(1, m + 1)))
    return np.linalg.solve(V, rhs)


def _diff_matrix(M: int, m: int, width: int) -> sp.csr_matrix:
    """1-D derivative matrix of order ``m`` on ``M+1`` nodes, shifted stencils near the ends."""
    h = 1.0 / M
    rows, cols, vals = [], [], []
    half = width // 2
    for i in range(M + 1):
        start = min(max(i - half, 0), M + 1 - width)
        offs = np.arange(start, start + width) - i
        w = _fd_weights(offs, m) / h**m
        rows += [i] * width
        cols += list(range(start, start + width))
        vals += list(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(M + 1, M + 1))


def numeric_third_derivatives(u: GridFunction | np.ndarray) -> Callable:
    """Grid accessor for all third derivatives of nodal ``u``.

    Uses fourth-order finite differences (5 points for first derivatives,
    7 for third) with one-sided stencils near the boundary.  The returned
    callable ignores its arguments' values beyond their shape and expects
    the nodes of the same grid.
    """
    v = _values(u)
    M = v.shape[0] - 1
    D = {m: _diff_matrix(M, m, w) for m, w in ((1, 5), (2, 6), (3, 7))}

    def apply(n1: int, n2: int) -> np.ndarray:
        out = v
        if n1:
            out = D[n1] @ out
        if n2:
            out = (D[n2] @ out.T).T
        return out

    t = np.empty((2, 2, 2, M + 1, M + 1))
    for j in range(2):
        for k in range(2):
            for l in range(2):
                n2 = j + k + l
                t[j, k, l] = apply(3 - n2, n2)

    def third(x1, x2):
        if np.shape(x1) != (M + 1, M + 1):
            raise ValueError("numeric third derivatives are only available on their own grid")
        return t

    return third
