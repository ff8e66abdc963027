"""Grid containers shared by the cell and Dirichlet solvers.

``TorusField`` holds samples on the periodic ``N x N`` grid over ``Y = [0, 1)^2``
(node ``(i/N, j/N)`` at index ``[i, j]``); ``GridFunction`` holds nodal values
on the ``(M+1) x (M+1)`` grid over the closed unit square.  Both round-trip
through a small text or binary grid file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np


class GridFileError(ValueError):
    pass


def _write_grid(path, header: str, values: np.ndarray) -> None:
    path = Path(path)
    flat = np.ascontiguousarray(values, dtype="<f8").ravel()
    if path.suffix == ".bin":
        with open(path, "wb") as fh:
            fh.write((header + "\n").encode("ascii"))
            fh.write(flat.tobytes())
    else:
        with open(path, "w") as fh:
            fh.write(header + "\n")
            np.savetxt(fh, flat, fmt="%.17g")


def _read_grid(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if path.suffix == ".bin":
        raw = path.read_bytes()
        nl = raw.index(b"\n")
        header = raw[:nl].decode("ascii").split()
        values = np.frombuffer(raw[nl + 1 :], dtype="<f8").copy()
    else:
        with open(path) as fh:
            header = fh.readline().split()
            values = np.loadtxt(fh, ndmin=1)
    return header, values


@dataclass
class TorusField:
    """Scalar ``(N, N)`` or matrix ``(2, 2, N, N)`` samples on the unit torus."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (2, 4) or self.values.shape[-1] != self.values.shape[-2]:
            raise ValueError(f"bad torus field shape {self.values.shape}")
        if self.values.ndim == 4 and self.values.shape[:2] != (2, 2):
            raise ValueError(f"bad matrix field shape {self.values.shape}")
        check_resolution(self.N)

    @property
    def N(self) -> int:
        return self.values.shape[-1]

    @property
    def kind(self) -> str:
        return "scalar" if self.values.ndim == 2 else "matrix"

    def mean(self):
        return self.values.mean(axis=(-2, -1))

    def interpolate(self, y1, y2):
        """Periodic bilinear interpolation at arbitrary points."""
        return periodic_interpolate(self.values, y1, y2)

    def save(self, path) -> None:
        _write_grid(path, f"{self.N} {self.kind}", self.values)

    @classmethod
    def load(cls, path) -> "TorusField":
        header, values = _read_grid(path)
        if len(header) != 2 or header[1] not in ("scalar", "matrix"):
            raise GridFileError(f"{path}: expected header 'N kind'")
        N = int(header[0])
        shape = (N, N) if header[1] == "scalar" else (2, 2, N, N)
        if values.size != int(np.prod(shape)):
            raise GridFileError(f"{path}: expected {np.prod(shape)} values, found {values.size}")
        return cls(values.reshape(shape))


def periodic_interpolate(values: np.ndarray, y1, y2) -> np.ndarray:
    """Bilinear interpolation of periodic samples ``values[..., i, j]`` at ``(y1, y2)``.

    Exact at grid nodes; leading axes of ``values`` are carried through.
    """
    N = values.shape[-1]
    t1 = np.mod(np.asarray(y1, dtype=float), 1.0) * N
    t2 = np.mod(np.asarray(y2, dtype=float), 1.0) * N
    # snap points that sit on a node up to rounding, so aligned grids read samples exactly
    r1, r2 = np.rint(t1), np.rint(t2)
    t1 = np.where(np.abs(t1 - r1) < 1e-9, r1, t1)
    t2 = np.where(np.abs(t2 - r2) < 1e-9, r2, t2)
    f1, f2 = np.floor(t1), np.floor(t2)
    i0 = f1.astype(int) % N
    j0 = f2.astype(int) % N
    w1 = t1 - f1
    w2 = t2 - f2
    i1 = (i0 + 1) % N
    j1 = (j0 + 1) % N
    v = values
    return (
        v[..., i0, j0] * (1 - w1) * (1 - w2)
        + v[..., i1, j0] * w1 * (1 - w2)
        + v[..., i0, j1] * (1 - w1) * w2
        + v[..., i1, j1] * w1 * w2
    )


def check_resolution(N: int) -> None:
    if N < 8 or N % 2:
        raise ValueError(f"torus resolution must be even and >= 8, got {N}")


def torus_nodes(N: int) -> tuple[np.ndarray, np.ndarray]:
    y = np.arange(N) / N
    return np.meshgrid(y, y, indexing="ij")


@dataclass
class GridFunction:
    """Nodal values on the uniform grid over the closed unit square."""

    values: np.ndarray
    dirichlet: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError(f"bad grid function shape {self.values.shape}")

    @property
    def M(self) -> int:
        return self.values.shape[0] - 1

    @property
    def h(self) -> float:
        return 1.0 / self.M

    def save(self, path) -> None:
        _write_grid(path, f"{self.M}", self.values)

    @classmethod
    def load(cls, path) -> "GridFunction":
        header, values = _read_grid(path)
        if len(header) != 1:
            raise GridFileError(f"{path}: expected header 'M'")
        M = int(header[0])
        if values.size != (M + 1) ** 2:
            raise GridFileError(f"{path}: expected {(M + 1) ** 2} values, found {values.size}")
        vals = values.reshape(M + 1, M + 1)
        on_boundary = np.concatenate([vals[0], vals[-1], vals[:, 0], vals[:, -1]])
        return cls(vals, dirichlet=bool(np.all(on_boundary == 0.0)))


def square_nodes(M: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(M + 1) / M
    return np.meshgrid(x, x, indexing="ij")


class CoefficientSpec:
    """Periodic symmetric coefficient field ``A(y)``.

    Wraps any evaluator returning a ``(2, 2, ...)`` array.  Ellipticity
    bounds are estimated from the eigenvalues on a 64 x 64 sample grid.
    """

    def __init__(self, evaluator: Callable, name: str = "custom", *, sample_n: int = 64):
        self.evaluator = evaluator
        self.name = name
        Y1, Y2 = torus_nodes(sample_n)
        mat = np.moveaxis(np.asarray(evaluator(Y1, Y2), dtype=float), (0, 1), (-2, -1))
        if not np.allclose(mat, np.swapaxes(mat, -1, -2), rtol=0, atol=1e-13):
            raise ValueError(f"coefficient {name!r} is not symmetric")
        eig = np.linalg.eigvalsh(mat)
        self.lam = float(eig.min())
        self.Lam = float(eig.max())
        if not self.lam > 0:
            raise ValueError(f"coefficient {name!r} is not elliptic (min eigenvalue {self.lam:.3g})")

    def __call__(self, y1, y2) -> np.ndarray:
        return np.asarray(self.evaluator(y1, y2), dtype=float)

    def sample(self, N: int) -> TorusField:
        return TorusField(self(*torus_nodes(N)))

    @classmethod
    def from_matrix(cls, matrix, name: str = "custom") -> "CoefficientSpec":
        return cls(matrix, name)

    @classmethod
    def constant(cls, matrix, name: str = "constant") -> "CoefficientSpec":
        m = np.asarray(matrix, dtype=float)

        def ev(y1, y2):
            shape = np.broadcast(np.asarray(y1), np.asarray(y2)).shape
            return np.broadcast_to(m.reshape((2, 2) + (1,) * len(shape)), (2, 2) + shape).copy()

        return cls(ev, name)

    @classmethod
    def from_torus(cls, field: TorusField, name: str = "sampled") -> "CoefficientSpec":
        if field.kind != "matrix":
            raise ValueError("coefficient field must be matrix-valued")
        return cls(field.interpolate, name)

    def __repr__(self) -> str:
        return f"CoefficientSpec({self.name!r}, lam={self.lam:.4g}, Lam={self.Lam:.4g})"
