"""Closed-form coefficients, correctors and right-hand sides.

Every scalar here is a finite sum of separable terms ``c * g(x1) * h(x2)``
whose one-dimensional factors know their own derivatives in closed form, so
all derivative evaluators are exact (no numerical differentiation).  The two
coefficient packs are the explicit c-bad matrix and its c-good sibling
obtained by dropping the ``1/r`` factor.
"""

from __future__ import annotations

import difflib
from dataclasses import dataclass, field
from math import comb, pi
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from .fields import CoefficientSpec

TWO_PI = 2.0 * pi


# ---------------------------------------------------------------------------
# one-dimensional factors: f(x, n) returns the n-th derivative at x
# ---------------------------------------------------------------------------


class Factor:
    def __call__(self, x, n: int = 0):
        raise NotImplementedError

    def __mul__(self, other: "Factor") -> "Factor":
        return ProductFactor(self, other)


class Const(Factor):
    def __call__(self, x, n=0):
        x = np.asarray(x, dtype=float)
        return np.ones_like(x) if n == 0 else np.zeros_like(x)


class Sin(Factor):
    """sin(omega * x)."""

    def __init__(self, omega: float):
        self.omega = omega

    def __call__(self, x, n=0):
        return self.omega**n * np.sin(self.omega * np.asarray(x, dtype=float) + n * pi / 2)


class Cos(Factor):
    """cos(omega * x)."""

    def __init__(self, omega: float):
        self.omega = omega

    def __call__(self, x, n=0):
        return self.omega**n * np.cos(self.omega * np.asarray(x, dtype=float) + n * pi / 2)


class CoshShift(Factor):
    """cosh(omega * x - shift) / cosh(shift)."""

    def __init__(self, omega: float, shift: float):
        self.omega = omega
        self.shift = shift

    def __call__(self, x, n=0):
        arg = self.omega * np.asarray(x, dtype=float) - self.shift
        core = np.cosh(arg) if n % 2 == 0 else np.sinh(arg)
        return self.omega**n * core / np.cosh(self.shift)


class Poly(Factor):
    def __init__(self, coeffs):
        self.p = Polynomial(coeffs)

    def __call__(self, x, n=0):
        return self.p.deriv(n)(np.asarray(x, dtype=float)) if n else self.p(np.asarray(x, dtype=float))


class ProductFactor(Factor):
    def __init__(self, a: Factor, b: Factor):
        self.a = a
        self.b = b

    def __call__(self, x, n=0):
        # Leibniz rule
        return sum(comb(n, k) * self.a(x, k) * self.b(x, n - k) for k in range(n + 1))


# ---------------------------------------------------------------------------
# two-dimensional closed forms
# ---------------------------------------------------------------------------


@dataclass
class ClosedFormScalar:
    """Sum of separable terms ``coef * f1(y1) * f2(y2)``.

    ``deriv(y1, y2, n1, n2)`` returns the mixed partial derivative
    d^(n1+n2) / dy1^n1 dy2^n2 exactly.
    """

    terms: list[tuple[float, Factor, Factor]]
    periodic: bool = False
    name: str = ""

    def __call__(self, y1, y2):
        return self.deriv(y1, y2, 0, 0)

    def deriv(self, y1, y2, n1: int, n2: int):
        y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
        out = np.zeros(y1.shape)
        for c, f1, f2 in self.terms:
            out = out + c * f1(y1, n1) * f2(y2, n2)
        return out

    def grad(self, y1, y2):
        return np.stack([self.deriv(y1, y2, 1, 0), self.deriv(y1, y2, 0, 1)])

    def hess(self, y1, y2):
        """Full 2x2 Hessian, shape (2, 2, ...)."""
        d11 = self.deriv(y1, y2, 2, 0)
        d12 = self.deriv(y1, y2, 1, 1)
        d22 = self.deriv(y1, y2, 0, 2)
        return np.stack([np.stack([d11, d12]), np.stack([d12, d22])])

    def third(self, y1, y2):
        """All third derivatives as an array t[j, k, l] of shape (2, 2, 2, ...)."""
        y1, y2 = np.broadcast_arrays(np.asarray(y1, dtype=float), np.asarray(y2, dtype=float))
        t = np.empty((2, 2, 2) + y1.shape)
        for j in range(2):
            for k in range(2):
                for m in range(2):
                    n2 = j + k + m
                    t[j, k, m] = self.deriv(y1, y2, 3 - n2, n2)
        return t

    def laplacian(self, y1, y2):
        return self.deriv(y1, y2, 2, 0) + self.deriv(y1, y2, 0, 2)

    def __add__(self, other: "ClosedFormScalar") -> "ClosedFormScalar":
        return ClosedFormScalar(self.terms + other.terms, self.periodic and other.periodic)

    def __neg__(self) -> "ClosedFormScalar":
        return self * -1.0

    def __sub__(self, other: "ClosedFormScalar") -> "ClosedFormScalar":
        return self + (-other)

    def __mul__(self, other) -> "ClosedFormScalar":
        if isinstance(other, ClosedFormScalar):
            terms = [
                (c * d, f1 * g1, f2 * g2)
                for c, f1, f2 in self.terms
                for d, g1, g2 in other.terms
            ]
            return ClosedFormScalar(terms, self.periodic and other.periodic)
        return ClosedFormScalar([(other * c, f1, f2) for c, f1, f2 in self.terms], self.periodic)

    __rmul__ = __mul__


@dataclass
class QuotientScalar:
    """``num / den`` with value evaluation only (no derivative evaluators)."""

    num: ClosedFormScalar
    den: ClosedFormScalar
    periodic: bool = True

    def __call__(self, y1, y2):
        return self.num(y1, y2) / self.den(y1, y2)


def constant(value: float, periodic: bool = True) -> ClosedFormScalar:
    return ClosedFormScalar([(float(value), Const(), Const())], periodic)


def _sep(coef: float, f1: Factor, f2: Factor, periodic: bool = True) -> ClosedFormScalar:
    return ClosedFormScalar([(coef, f1, f2)], periodic)


@dataclass
class ClosedFormMatrix:
    """2x2 matrix field given entrywise; ``a21 is None`` means symmetric."""

    a11: Callable
    a12: Callable
    a22: Callable
    a21: Callable | None = None

    @property
    def symmetric(self) -> bool:
        return self.a21 is None

    def __call__(self, y1, y2):
        a11 = self.a11(y1, y2)
        a12 = self.a12(y1, y2)
        a22 = self.a22(y1, y2)
        a21 = a12 if self.a21 is None else self.a21(y1, y2)
        return np.stack([np.stack([a11, a12]), np.stack([a21, a22])])

    def entry(self, i: int, j: int) -> Callable:
        if (i, j) == (1, 0) and self.a21 is not None:
            return self.a21
        return {(0, 0): self.a11, (0, 1): self.a12, (1, 0): self.a12, (1, 1): self.a22}[(i, j)]

    def min_eigenvalue(self, n: int = 64) -> float:
        y = np.arange(n) / n
        Y1, Y2 = np.meshgrid(y, y, indexing="ij")
        mat = np.moveaxis(self(Y1, Y2), (0, 1), (-2, -1))
        sym = 0.5 * (mat + np.swapaxes(mat, -1, -2))
        return float(np.linalg.eigvalsh(sym).min())


# ---------------------------------------------------------------------------
# coefficient packs
# ---------------------------------------------------------------------------


@dataclass
class CoefficientPack:
    """A coefficient together with its exact homogenization objects.

    ``V`` maps ``(k, l)`` (0-based, k <= l) to the corrector ``v^{kl}``.
    ``c_tensor[j, k, l]`` is ``c_j^{kl}`` with 0-based indices.
    """

    name: str
    A: ClosedFormMatrix
    r: ClosedFormScalar
    V: dict[tuple[int, int], ClosedFormScalar]
    Adiv: ClosedFormMatrix
    psi: ClosedFormScalar
    c_tensor: np.ndarray
    Abar: np.ndarray
    spec: CoefficientSpec = field(init=False)

    def __post_init__(self):
        self.spec = CoefficientSpec.from_matrix(self.A, name=self.name)

    def v(self, k: int, l: int) -> ClosedFormScalar:
        return self.V[(min(k, l), max(k, l))]


def _s1s2() -> ClosedFormScalar:
    return _sep(1.0, Sin(TWO_PI), Sin(TWO_PI))


def _rA_diagonal() -> tuple[ClosedFormScalar, ClosedFormScalar]:
    s1s2 = _s1s2()
    return constant(1.0) - 0.5 * s1s2, constant(1.0) + 0.5 * s1s2


def _adiv_and_psi() -> tuple[ClosedFormMatrix, ClosedFormScalar]:
    d11, d22 = _rA_diagonal()
    psi = _sep(0.5, Cos(TWO_PI), Cos(TWO_PI))
    return ClosedFormMatrix(d11, psi, d22, a21=-psi), psi


def builtin_cbad() -> CoefficientPack:
    """The explicit c-bad coefficient ``A = diag(1 - s/2, 1 + s/2) / r``.

    Here ``s = sin(2 pi y1) sin(2 pi y2)`` and
    ``r = 1 + (cos(2 pi y1) - 2 sin(2 pi y1)) sin(2 pi y2) / 4`` is its
    invariant measure.  The only nonzero c-tensor entries are
    ``c_1^{11} = c_1^{22} = -1/(128 pi)``.
    """
    r = constant(1.0) + _sep(0.25, Cos(TWO_PI), Sin(TWO_PI)) + _sep(-0.5, Sin(TWO_PI), Sin(TWO_PI))
    n11, n22 = _rA_diagonal()
    zero = constant(0.0)
    A = ClosedFormMatrix(QuotientScalar(n11, r), zero, QuotientScalar(n22, r))
    scale = -1.0 / (32.0 * pi**2)
    v11 = _sep(scale, Cos(TWO_PI), Sin(TWO_PI))
    v22 = _sep(scale, Cos(TWO_PI), Sin(TWO_PI)) + _sep(-4.0 * scale, Sin(TWO_PI), Sin(TWO_PI))
    Adiv, psi = _adiv_and_psi()
    c = np.zeros((2, 2, 2))
    c[0, 0, 0] = c[0, 1, 1] = -1.0 / (128.0 * pi)
    return CoefficientPack("cbad", A, r, {(0, 0): v11, (0, 1): zero, (1, 1): v22}, Adiv, psi, c, np.eye(2))


def builtin_cgood() -> CoefficientPack:
    """The c-good coefficient ``diag(1 - s/2, 1 + s/2)`` with ``r == 1``."""
    a11, a22 = _rA_diagonal()
    zero = constant(0.0)
    A = ClosedFormMatrix(a11, zero, a22)
    v11 = _sep(-1.0 / (16.0 * pi**2), Sin(TWO_PI), Sin(TWO_PI))
    Adiv, psi = _adiv_and_psi()
    return CoefficientPack(
        "cgood", A, constant(1.0), {(0, 0): v11, (0, 1): zero, (1, 1): -v11},
        Adiv, psi, np.zeros((2, 2, 2)), np.eye(2),
    )


def constant_pack(matrix, name: str = "constant") -> CoefficientPack:
    """Constant symmetric positive definite coefficient (r == 1, V == 0)."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (2, 2) or not np.allclose(m, m.T):
        raise ValueError("constant coefficient must be a symmetric 2x2 matrix")
    zero = constant(0.0)
    A = ClosedFormMatrix(constant(m[0, 0]), constant(m[0, 1]), constant(m[1, 1]))
    return CoefficientPack(
        name, A, constant(1.0), {(0, 0): zero, (0, 1): zero, (1, 1): zero},
        A, zero, np.zeros((2, 2, 2)), m.copy(),
    )


COEFFICIENTS: dict[str, Callable[[], CoefficientPack]] = {
    "cbad": builtin_cbad,
    "cgood": builtin_cgood,
    "constant-identity": lambda: constant_pack(np.eye(2), "constant-identity"),
}


def _suggest(name, valid) -> str:
    close = difflib.get_close_matches(str(name), list(valid), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def get_coefficient(name: str) -> CoefficientPack:
    try:
        return COEFFICIENTS[name]()
    except KeyError:
        raise ValueError(f"unknown coefficient {name!r}{_suggest(name, COEFFICIENTS)}; "
                         f"valid names: {', '.join(COEFFICIENTS)}") from None


# ---------------------------------------------------------------------------
# right-hand sides on the unit square
# ---------------------------------------------------------------------------


@dataclass
class RightHandSide:
    """Source term with optional exact homogenized solution.

    ``u`` solves ``-Laplace u = f`` with zero Dirichlet data (both builtin
    coefficients have identity effective matrix).  ``z`` is the first-order
    correction for the c-bad tensor, i.e. the solution of
    ``-Laplace z = -d1 f / (128 pi)``.
    """

    name: str
    f: ClosedFormScalar
    u: ClosedFormScalar | None = None
    z: ClosedFormScalar | None = None


def _sinsin() -> RightHandSide:
    f = _sep(8.0 * pi**2, Sin(TWO_PI), Sin(TWO_PI), periodic=False)
    u = _sep(1.0, Sin(TWO_PI), Sin(TWO_PI), periodic=False)
    z = ClosedFormScalar(
        [(1.0 / 64.0, CoshShift(TWO_PI, pi), Sin(TWO_PI)), (-1.0 / 64.0, Cos(TWO_PI), Sin(TWO_PI))]
    )
    return RightHandSide("sinsin", f, u, z)


def _poly() -> RightHandSide:
    bump = Poly([0.0, 1.0, -1.0])  # x (1 - x)
    f = ClosedFormScalar([(1.0, bump, Const()), (1.0, Const(), bump)])
    u = ClosedFormScalar([(0.5, bump, bump)])
    return RightHandSide("poly", f, u)


def _cubic_sine() -> RightHandSide:
    cube = Poly([0.0, 0.0, 0.0, 1.0, -3.0, 3.0, -1.0])  # x^3 (1 - x)^3
    # sin(2 pi (x1 - 2 x2)) = sin(2 pi x1) cos(4 pi x2) - cos(2 pi x1) sin(4 pi x2)
    f = ClosedFormScalar(
        [(1.0, cube * Sin(TWO_PI), Cos(2 * TWO_PI)), (-1.0, cube * Cos(TWO_PI), Sin(2 * TWO_PI))]
    )
    return RightHandSide("cubic-sine", f)


RIGHT_HAND_SIDES: dict[str, Callable[[], RightHandSide]] = {
    "sinsin": _sinsin,
    "poly": _poly,
    "cubic-sine": _cubic_sine,
}


def builtin_rhs(name: str) -> RightHandSide:
    try:
        return RIGHT_HAND_SIDES[name]()
    except KeyError:
        raise ValueError(f"unknown right-hand side {name!r}{_suggest(name, RIGHT_HAND_SIDES)}; "
                         f"valid names: {', '.join(RIGHT_HAND_SIDES)}") from None
