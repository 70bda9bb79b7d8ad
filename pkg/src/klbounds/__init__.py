"""Rigorous bounds on spectral data from Euclidean two-point functions.

A correlator known at a set of points, up to a tolerated slack, is matched
by a nonnegative spectral density on a grid. Linear programming then
brackets smeared spectral densities, the retarded propagator and windowed
spectral weights, and feasibility bisections give a lower bound on the
data's error and an estimate of the mass gap.
"""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BisectionError,
    ConfigError,
    DomainError,
    NonContiguousError,
    ParseError,
    SolverError,
    TruncationWarning,
)
from .spectral import (  # noqa: E402
    CorrelatorSet,
    SpectralGrid,
    SpectralModel,
    euclid_propagator,
    grid_correlator,
    log_spaced,
    retarded_true,
    smear,
    synth_correlator,
    window_true,
)
from .lpcore import LinearProgram, Sense, Status, check_feasible, solve  # noqa: E402
from .inversion import (  # noqa: E402
    BoundsTable,
    GaussianSmear,
    Retarded,
    Window,
    build_bound_problem,
    solve_bounds,
    sweep,
)
from .bootstrap import (  # noqa: E402
    BisectionConfig,
    GapResult,
    bootstrap_gap,
    feasible_mass_interval,
    min_slack,
)
