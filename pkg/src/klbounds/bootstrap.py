"""Feasibility bisections: minimal slack and the mass-gap bootstrap.

Both drivers rely on monotonicity in the slack: enlarging ``δC`` only widens
the correlator constraints, so feasibility at ``δC`` implies feasibility at
every larger value.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import BisectionError, DomainError, NonContiguousError
from .inversion import _constraint_rows, constant_error
from .lpcore import LinearProgram, Sense, Status, check_feasible, solve
from .spectral import euclid_propagator

__all__ = [
    "BisectionConfig",
    "GapResult",
    "MassInterval",
    "min_slack",
    "mass_feasibility_problem",
    "probe_mass",
    "feasible_mass_interval",
    "bootstrap_gap",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BisectionConfig:
    """Knobs of the slack and mass bisections (masses in units of m)."""

    delta_hi: float = 1e-2
    delta_rel_tol: float = 1e-2
    m_lo: float = 0.1
    m_hi: float = 1.5
    m_step: float = 0.01
    max_iter: int = 60
    mass_resolution: float = 1e-4
    # below this slack the data is taken as exactly representable
    delta_floor: float = 1e-12
    feas_tol: float = 1e-9

    def __post_init__(self):
        if not self.delta_hi > 0:
            raise DomainError("delta_hi must be > 0")
        if not (self.delta_rel_tol > 0 and self.mass_resolution > 0 and self.m_step > 0):
            raise DomainError("tolerances and steps must be > 0")
        if not 0 < self.m_lo < self.m_hi:
            raise DomainError("need 0 < m_lo < m_hi")
        if self.max_iter < 1:
            raise DomainError("max_iter must be >= 1")


# ---------------------------------------------------------------------------
# Minimal slack
# ---------------------------------------------------------------------------


def _slack_feasible(corr, grid, delta, feas_tol, error_model):
    A, rel, b = _constraint_rows(corr.with_slack(delta), grid, error_model)
    lp = LinearProgram(np.zeros(len(grid)), A, rel, b, Sense.MAX)
    return check_feasible(lp, feas_tol).feasible


def _bisect_slack(is_feasible, cfg):
    """Smallest feasible slack, located by decade descent then bisection.

    Returns ``(delta_min, bracket, probes)``.
    """
    hi = cfg.delta_hi
    if not is_feasible(hi):
        raise BisectionError(
            f"infeasible at the starting slack {hi:g}; raise delta_hi", bracket=(hi, math.inf)
        )
    lo = 0.0
    probes = 1
    # decade descent until infeasible or down at the floor
    while hi > cfg.delta_floor:
        trial = hi / 10.0
        probes += 1
        if is_feasible(trial):
            hi = trial
        else:
            lo = trial
            break
        if probes > cfg.max_iter:
            raise BisectionError("slack descent hit the iteration cap", bracket=(lo, hi))
    if lo == 0.0:
        return hi, (0.0, hi), probes
    while hi - lo > cfg.delta_rel_tol * hi:
        if probes > cfg.max_iter:
            raise BisectionError("slack bisection hit the iteration cap", bracket=(lo, hi))
        mid = 0.5 * (lo + hi)
        probes += 1
        if is_feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi, (lo, hi), probes


def min_slack(corr, grid, cfg=BisectionConfig(), error_model=constant_error):
    """Smallest constant slack for which a nonnegative, normalised density
    on ``grid`` reproduces ``corr``.

    The result is a lower bound on the systematic error of the data (up to
    the grid discretisation). The starting value ``cfg.delta_hi`` must be
    feasible; the slack is then divided by ten until infeasible and the
    edge bisected to relative width ``cfg.delta_rel_tol``.

    Raises
    ------
    BisectionError
        If ``delta_hi`` is infeasible or the iteration cap is reached; the
        exception carries the current bracket.
    """
    delta, _, _ = _bisect_slack(
        lambda d: _slack_feasible(corr, grid, d, cfg.feas_tol, error_model), cfg
    )
    return delta


# ---------------------------------------------------------------------------
# Fixed-mass feasibility
# ---------------------------------------------------------------------------


def mass_feasibility_problem(corr, grid, mass, threshold_factor, error_model=constant_error):
    """Linear program in ``(Z, ρ_j)`` for a pole at ``mass``.

    The continuum lives on the grid nodes with ``s_j >= threshold_factor *
    mass²``; variable 0 is the pole weight ``Z``. The objective is ``Z``.
    """
    if threshold_factor <= 1:
        raise DomainError("threshold factor must exceed 1")
    m2 = mass * mass
    sub = grid.above(threshold_factor * m2)
    A, rel, b = _constraint_rows(corr, sub, error_model)
    pole = np.concatenate([[1.0], np.tile(euclid_propagator(corr.x, m2), 2)])
    A = np.column_stack([pole, A])
    c = np.zeros(A.shape[1])
    c[0] = 1.0
    return LinearProgram(c, A, rel, b, Sense.MAX)


@dataclass(frozen=True)
class MassProbe:
    mass: float
    feasible: bool
    pole_weight: float = float("nan")
    measure: float = 0.0


def probe_mass(corr, grid, mass, threshold_factor, feas_tol=1e-9, error_model=constant_error):
    """Phase-1 feasibility of the fixed-mass problem; reports the vertex's ``Z``."""
    lp = mass_feasibility_problem(corr, grid, mass, threshold_factor, error_model)
    res = check_feasible(lp, feas_tol)
    z = float(res.point[0]) if res.feasible else float("nan")
    return MassProbe(float(mass), res.feasible, z, res.infeasibility_measure)


@dataclass(frozen=True)
class MassInterval:
    """Feasible masses ``[lo, hi]`` at one slack; empty when ``lo`` is None."""

    lo: float = None
    hi: float = None
    scan: tuple = ()
    probes: int = 0
    discarded: tuple = ()

    @property
    def empty(self):
        return self.lo is None

    @property
    def width(self):
        return 0.0 if self.empty else self.hi - self.lo

    @property
    def midpoint(self):
        return None if self.empty else 0.5 * (self.lo + self.hi)

    def __contains__(self, m):
        return not self.empty and self.lo <= m <= self.hi


def _scan_points(lo, hi, step, extra=()):
    n = max(int(math.ceil((hi - lo) / step - 1e-9)), 1)
    pts = np.linspace(lo, hi, n + 1)
    return np.unique(np.concatenate([pts, [p for p in extra if lo <= p <= hi]]))


def _runs(flags):
    idx = np.flatnonzero(flags)
    cuts = np.flatnonzero(np.diff(idx) > 1)
    return np.split(idx, cuts + 1)


def feasible_mass_interval(corr, grid, delta, threshold_factor=9, m_lo=0.1, m_hi=1.5,
                           m_step=0.01, resolution=1e-4, feas_tol=1e-9, workers=1,
                           extra_points=(), error_model=constant_error, split="error"):
    """Masses ``M`` for which the pole-plus-continuum problem is feasible.

    A coarse scan over ``[m_lo, m_hi]`` in steps of ``m_step`` is followed by
    a bisection of both edges down to ``resolution``. The edges are the
    feasible side of the bracket.

    If a pole at ``M_h`` is feasible, so is (up to the grid) every lighter
    mass ``M`` with ``sqrt(threshold_factor) * M <= M_h``: the heavy pole can
    be carried by the lighter model's continuum. A scan reaching below
    ``M_true / sqrt(threshold_factor)`` therefore shows a spurious light run.
    With ``split="heaviest"`` such runs are dropped (and listed in
    ``discarded``) provided each one is implied by the heaviest run in this
    way; any other split still raises.

    Returns
    -------
    MassInterval
        Empty when no scanned mass is feasible.

    Raises
    ------
    NonContiguousError
        If the feasible scan points form more than one run that cannot be
        accounted for as above; ``scan`` holds the full ``(mass, feasible)``
        map.
    """
    if split not in ("error", "heaviest"):
        raise DomainError(f"unknown split policy {split!r}")
    if threshold_factor not in (4, 9):
        raise DomainError("threshold factor must be 4 or 9")
    c = corr.with_slack(delta)
    probe = lambda m: probe_mass(c, grid, m, threshold_factor, feas_tol, error_model)
    masses = _scan_points(m_lo, m_hi, m_step, extra_points)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(probe, masses))
    else:
        results = [probe(m) for m in masses]
    flags = np.array([r.feasible for r in results])
    scan = tuple((float(m), bool(f)) for m, f in zip(masses, flags))
    probes = len(masses)
    if not flags.any():
        return MassInterval(scan=scan, probes=probes)
    runs = _runs(flags)
    discarded = ()
    if len(runs) > 1:
        heavy_hi = masses[runs[-1][-1] + 1] if runs[-1][-1] + 1 < len(masses) else masses[-1]
        implied = all(masses[r[0]] * math.sqrt(threshold_factor) <= heavy_hi for r in runs[:-1])
        if split == "error" or not implied:
            raise NonContiguousError(f"feasible masses at slack {delta:g} are not contiguous", scan)
        discarded = tuple((float(masses[r[0]]), float(masses[r[-1]])) for r in runs[:-1])
        log.info("slack %.3g: dropped light feasible runs %s implied by the heaviest", delta, discarded)
    idx = runs[-1]

    def refine(inside, outside):
        nonlocal probes
        while abs(outside - inside) > resolution:
            mid = 0.5 * (inside + outside)
            probes += 1
            if probe(mid).feasible:
                inside = mid
            else:
                outside = mid
        return inside

    i0, i1 = idx[0], idx[-1]
    lo = masses[i0] if i0 == 0 else refine(masses[i0], masses[i0 - 1])
    hi = masses[i1] if i1 == len(masses) - 1 else refine(masses[i1], masses[i1 + 1])
    return MassInterval(float(lo), float(hi), scan, probes, discarded)


# ---------------------------------------------------------------------------
# Gap bootstrap
# ---------------------------------------------------------------------------


@dataclass
class GapResult:
    """Outcome of :func:`bootstrap_gap`. ``interval`` is ``[sqrt(s1), sqrt(s2)]``."""

    m_opt: float
    z_opt: float
    delta_c_min: float
    interval: tuple
    diagnostics: dict = field(default_factory=dict)


def _z_range(corr, grid, mass, threshold_factor, feas_tol, error_model):
    lp = mass_feasibility_problem(corr, grid, mass, threshold_factor, error_model)
    out = []
    for sense in (Sense.MIN, Sense.MAX):
        r = solve(lp.with_objective(lp.c, sense), feas_tol)
        out.append(r.objective_value if r.status is Status.OPTIMAL else float("nan"))
    return tuple(out)


def bootstrap_gap(corr, grid, cfg=BisectionConfig(), threshold_factor=9, workers=1,
                  error_model=constant_error, split="heaviest"):
    """Jointly bootstrap the mass gap and the minimal slack.

    Starting from ``cfg.delta_hi`` the slack is lowered (decade descent, then
    bisection) while the feasible mass interval is nonempty. Each new scan is
    confined to the interval found at the last feasible slack, since
    intervals are nested in ``δC``. The search stops once that interval is
    narrower than ``cfg.mass_resolution`` or the slack bracket reaches
    relative width ``cfg.delta_rel_tol``.

    The pole weight is read off the phase-1 vertex at the optimal mass; the
    full range of ``Z`` compatible with the data at that mass is recorded in
    ``diagnostics["z_range"]``.

    ``split`` is passed to :func:`feasible_mass_interval`. The default keeps
    the heaviest run, since the default scan starts at ``0.1 m``, below a
    third of any realistic gap. Dropped runs appear in
    ``diagnostics["discarded_runs"]``.
    """
    intervals = {}
    state = {"region": (cfg.m_lo, cfg.m_hi), "hint": (), "probes": 0}

    def interval_at(delta):
        lo, hi = state["region"]
        step = cfg.m_step
        if (lo, hi) != (cfg.m_lo, cfg.m_hi):
            step = min(cfg.m_step, max((hi - lo) / 10.0, cfg.mass_resolution))
        iv = feasible_mass_interval(
            corr, grid, delta, threshold_factor, lo, hi, step, cfg.mass_resolution,
            cfg.feas_tol, workers, state["hint"], error_model, split,
        )
        state["probes"] += iv.probes
        intervals[delta] = iv
        if not iv.empty:
            state["region"] = (iv.lo, iv.hi)
            state["hint"] = (iv.midpoint,)
        return iv

    collapsed = {"flag": False}

    def nonempty(delta):
        if collapsed["flag"]:
            # interval already below resolution: no smaller slack is probed
            return False
        iv = interval_at(delta)
        if not iv.empty and iv.width < cfg.mass_resolution:
            collapsed["flag"] = True
        return not iv.empty

    try:
        delta_min, bracket, outer = _bisect_slack(nonempty, cfg)
    except BisectionError as exc:
        raise BisectionError(
            f"mass bootstrap: {exc}", bracket=exc.bracket
        ) from None

    iv = intervals[delta_min]
    m_opt = iv.midpoint
    if iv.width > 10 * cfg.mass_resolution:
        log.warning(
            "mass interval did not collapse: width %.3g at slack %.3g", iv.width, delta_min
        )
    c = corr.with_slack(delta_min)
    probe = probe_mass(c, grid, m_opt, threshold_factor, cfg.feas_tol, error_model)
    if not probe.feasible:
        # midpoint of a refined interval can sit in a sliver; fall back to an edge
        for m in (iv.lo, iv.hi):
            probe = probe_mass(c, grid, m, threshold_factor, cfg.feas_tol, error_model)
            if probe.feasible:
                break
    z_lo, z_hi = _z_range(c, grid, probe.mass, threshold_factor, cfg.feas_tol, error_model)
    diagnostics = {
        "outer_iterations": outer,
        "feasibility_solves": state["probes"],
        "delta_bracket": [float(bracket[0]), float(bracket[1])],
        "collapsed": bool(iv.width <= 10 * cfg.mass_resolution),
        "z_vertex": probe.pole_weight,
        "z_range": [z_lo, z_hi],
        "z_mass": probe.mass,
        "threshold_factor": threshold_factor,
        "discarded_runs": sorted({r for v in intervals.values() for r in v.discarded}),
    }
    return GapResult(float(m_opt), float(probe.pole_weight), float(delta_min),
                     (float(iv.lo), float(iv.hi)), diagnostics)
