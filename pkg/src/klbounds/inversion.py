"""Rigorous bounds on linear functionals of the spectral density.

For a correlator known at points ``x_i`` up to a constant slack ``δC`` the
feasible densities on a grid are

    ρ_j >= 0,   Σ_j Δ_j ρ_j = 1,   |Σ_j Δ_j ρ_j G_E(x_i; s_j) - C_i| <= δC.

Any linear functional of ρ is then bracketed by maximising and minimising it
over this polytope. Three functionals are provided: the Gaussian-smeared
density, the retarded propagator and the spectral weight in a window.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import warnings

import numpy as np

from .errors import DomainError, TruncationWarning
from .lpcore import LinearProgram, Sense, Status, solve
from .specfun import bessel_j0, gaussian_weight
from .spectral import kernel_matrix, retarded_true, smear, window_true

__all__ = [
    "GaussianSmear",
    "Retarded",
    "Window",
    "BoundPair",
    "BoundsRow",
    "BoundsTable",
    "constant_error",
    "build_bound_problem",
    "solve_bounds",
    "sweep",
    "DEFAULT_S_MIN",
    "DEFAULT_S_MAX",
    "DEFAULT_N_V",
    "DEFAULT_X_LO",
    "DEFAULT_X_HI",
    "DEFAULT_N_C",
]

DEFAULT_S_MIN = 0.0
DEFAULT_S_MAX = 60.0
DEFAULT_N_V = 10_000
DEFAULT_X_LO = 1e-5
DEFAULT_X_HI = 3.0
DEFAULT_N_C = 100


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianSmear:
    """``ρ^σ(μ²)``, the density smeared with a unit Gaussian of width ``sigma``."""

    mu2: float
    sigma: float
    kind = "GAUSSIAN_SMEAR"

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be > 0, got {self.sigma}")

    @property
    def parameter(self):
        return self.mu2

    def coefficients(self, grid):
        return grid.weights * gaussian_weight(self.mu2, grid.nodes, self.sigma)

    def zero_bins(self, grid):
        return np.zeros(len(grid), dtype=bool)

    def truth(self, rho):
        return smear(rho, self.mu2, self.sigma)


@dataclass(frozen=True)
class Retarded:
    """Retarded propagator ``G_R(t) = ½ ∫ ρ(s) J0(sqrt(s) t) ds``.

    Bins with ``s_j <= s_reg`` are pinned to zero.
    """

    t: float
    s_reg: float = 0.0
    kind = "RETARDED"

    def __post_init__(self):
        if not self.t >= 0:
            raise DomainError(f"t must be >= 0, got {self.t}")
        if not self.s_reg >= 0:
            raise DomainError(f"s_reg must be >= 0, got {self.s_reg}")

    @property
    def parameter(self):
        return self.t

    def coefficients(self, grid):
        return 0.5 * grid.weights * bessel_j0(np.sqrt(grid.nodes) * self.t)

    def zero_bins(self, grid):
        if self.s_reg == 0:
            return np.zeros(len(grid), dtype=bool)
        return grid.nodes <= self.s_reg

    def truth(self, rho):
        return retarded_true(rho, self.t)


@dataclass(frozen=True)
class Window:
    """Spectral weight in the half-open window ``[a, b)``."""

    a: float
    b: float
    kind = "WINDOW"

    def __post_init__(self):
        if not self.a < self.b:
            raise DomainError("window needs a < b")

    @property
    def parameter(self):
        return self.b

    def coefficients(self, grid):
        inside = (grid.nodes >= self.a) & (grid.nodes < self.b)
        return grid.weights * inside

    def zero_bins(self, grid):
        return np.zeros(len(grid), dtype=bool)

    def truth(self, rho):
        return window_true(rho, max(self.a, 0.0), self.b)


def constant_error(x):
    """Per-point weighting of the slack; only the constant model ships."""
    return np.ones_like(np.asarray(x, dtype=float))


# ---------------------------------------------------------------------------
# Assembly and solution
# ---------------------------------------------------------------------------


def _constraint_rows(corr, grid, error_model):
    w = grid.weights
    kern = kernel_matrix(corr.x, grid.nodes) * w[None, :]
    slack = corr.slack * error_model(corr.x)
    A = np.vstack([w[None, :], kern, kern])
    rel = ("=",) + (">=",) * len(corr) + ("<=",) * len(corr)
    b = np.concatenate([[1.0], corr.values - slack, corr.values + slack])
    return A, rel, b


def _check_tail(corr, grid, A, feas_tol=1e-9):
    # last bin's kernel contribution at the smallest x
    tail = A[1, -1]
    if tail > feas_tol:
        warnings.warn(
            f"kernel weight of the last grid bin at x={corr.x[0]:g} is {tail:.3g} "
            f"(> {feas_tol:g}); consider a larger s_max",
            TruncationWarning, stacklevel=3,
        )
    return tail


def build_bound_problem(corr, grid, obj, sense=Sense.MAX, error_model=constant_error):
    """Assemble the bounding linear program.

    Parameters
    ----------
    corr : CorrelatorSet
        Data and slack ``δC``.
    grid : SpectralGrid
        Discretisation of ``s``; the ``values`` are ignored.
    obj : GaussianSmear, Retarded or Window
    sense : Sense

    Returns
    -------
    LinearProgram
        Variables ``ρ_j``. Row 0 is the sum rule, rows ``1..N_c`` the lower
        and rows ``N_c+1..2N_c`` the upper correlator constraints, followed
        by one ``ρ_j = 0`` row per regularised bin.
    """
    if len(grid) == 0 or len(corr) == 0:
        raise DomainError("empty grid or correlator")
    A, rel, b = _constraint_rows(corr, grid, error_model)
    _check_tail(corr, grid, A)
    zero = np.flatnonzero(obj.zero_bins(grid))
    if len(zero):
        Z = np.zeros((len(zero), len(grid)))
        Z[np.arange(len(zero)), zero] = 1.0
        A = np.vstack([A, Z])
        rel = rel + ("=",) * len(zero)
        b = np.concatenate([b, np.zeros(len(zero))])
    return LinearProgram(obj.coefficients(grid), A, rel, b, sense)


@dataclass(frozen=True)
class BoundPair:
    lower: object
    upper: object

    def __iter__(self):
        yield self.lower
        yield self.upper

    @property
    def interval(self):
        lo = self.lower.objective_value if self.lower.status is Status.OPTIMAL else None
        hi = self.upper.objective_value if self.upper.status is Status.OPTIMAL else None
        return lo, hi


def _solve_pair(lp, feas_tol, opt_tol):
    lower = solve(lp.with_objective(lp.c, Sense.MIN), feas_tol, opt_tol)
    upper = solve(lp.with_objective(lp.c, Sense.MAX), feas_tol, opt_tol)
    return BoundPair(lower, upper)


def solve_bounds(corr, grid, obj, feas_tol=1e-9, opt_tol=1e-9, error_model=constant_error):
    """Minimum and maximum of ``obj`` over the feasible densities."""
    lp = build_bound_problem(corr, grid, obj, Sense.MAX, error_model)
    return _solve_pair(lp, feas_tol, opt_tol)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundsRow:
    parameter: float
    lower: float
    upper: float
    lower_status: str
    upper_status: str


@dataclass
class BoundsTable:
    """Bounds on a one-parameter family of objectives, in sweep order."""

    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    @property
    def parameters(self):
        return self.column("parameter")

    @property
    def lower(self):
        return self.column("lower")

    @property
    def upper(self):
        return self.column("upper")


def _row(param, pair):
    lo, hi = pair.interval
    return BoundsRow(
        float(param),
        float("nan") if lo is None else lo,
        float("nan") if hi is None else hi,
        pair.lower.status.value,
        pair.upper.status.value,
    )


def sweep(corr, grid, family, parameters, feas_tol=1e-9, opt_tol=1e-9, workers=1,
          error_model=constant_error):
    """Bound ``family(p)`` for every ``p`` in ``parameters``.

    ``family`` maps a parameter value to an objective, e.g.
    ``lambda mu2: GaussianSmear(mu2, 0.1)``. The constraint matrix is built
    once. Rows come back in input order whatever ``workers`` is; an
    infeasible parameter is recorded in its row and does not stop the sweep.
    """
    parameters = [float(p) for p in parameters]
    if not parameters:
        raise DomainError("empty parameter list")
    objectives = [family(p) for p in parameters]
    A, rel, b = _constraint_rows(corr, grid, error_model)
    _check_tail(corr, grid, A)

    def one(obj):
        zero = np.flatnonzero(obj.zero_bins(grid))
        if len(zero):
            lp = build_bound_problem(corr, grid, obj, Sense.MAX, error_model)
        else:
            lp = LinearProgram(obj.coefficients(grid), A, rel, b, Sense.MAX)
        return _solve_pair(lp, feas_tol, opt_tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(one, objectives))
    else:
        pairs = [one(o) for o in objectives]
    meta = {
        "delta_C": corr.slack,
        "N_c": len(corr),
        "N_v": len(grid),
        "grid_range": [float(grid.nodes[0]), float(grid.nodes[-1])],
        "objective_kind": objectives[0].kind,
    }
    return BoundsTable([_row(p, pr) for p, pr in zip(parameters, pairs)], meta)
