"""Periodic homogenization of nondivergence-form elliptic problems in 2-D.

Modules
-------
analytic
    Closed-form coefficients, correctors, right-hand sides and solutions.
cell
    Periodic cell problems on the unit torus.
epssolve
    Dirichlet solvers for the oscillatory, homogenized and corrector problems.
rates
    Error functionals, epsilon sweeps and rate fits.
"""

__version__ = "0.1.0"

from . import analytic, cell, epssolve, fields, rates  # noqa: E402,F401
from .errors import CompatibilityError, SolverError  # noqa: E402,F401
