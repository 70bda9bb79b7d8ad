"""Spectral densities, the Euclidean Källén–Lehmann kernel and synthetic data.

Units throughout are those of the bare mass, ``m = 1``. Masses squared and
spectral variables ``s`` share one unit, lengths and times its inverse square
root.

Two representations of a spectral density are used:

* :class:`SpectralModel`, an analytic ground truth made of a single pole and a
  piecewise-linear continuum above threshold;
* :class:`SpectralGrid`, a rectangle-rule discretisation ``{s_j, Δ_j, ρ_j}``
  which is exactly the variable vector of the linear programs.
"""
from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy import integrate

from .errors import DomainError
from .specfun import bessel_j0, bessel_k0, gaussian_weight

__all__ = [
    "SpectralModel",
    "SpectralGrid",
    "CorrelatorSet",
    "euclid_propagator",
    "kernel_matrix",
    "smear",
    "synth_correlator",
    "grid_correlator",
    "retarded_true",
    "window_true",
    "log_spaced",
]

_QUAD_REL = 1e-10


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Pole plus continuum: ``Z δ(s - M²) + ρ̃(s) θ(s - s_th)``.

    Parameters
    ----------
    pole_weight : float
        ``Z_φ >= 0``.
    pole_mass2 : float
        ``M² > 0``.
    threshold : float
        Start of the continuum, ``s_th > M²``.
    continuum : array_like, shape (k, 2)
        Tabulated ``(s, ρ̃(s))`` pairs, linearly interpolated and zero outside
        the table. ``s`` must be strictly increasing and ``>= threshold``.
        May be empty.
    normalized : bool
        If set, ``Z + ∫ρ̃ ds = 1`` is enforced to 1e-10.
    """

    pole_weight: float
    pole_mass2: float
    threshold: float
    continuum: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    normalized: bool = False

    def __post_init__(self):
        cont = np.asarray(self.continuum, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "continuum", _readonly(cont))
        if not (self.pole_weight >= 0 and math.isfinite(self.pole_weight)):
            raise DomainError(f"pole weight must be >= 0, got {self.pole_weight}")
        if not self.pole_mass2 > 0:
            raise DomainError(f"pole mass² must be > 0, got {self.pole_mass2}")
        if not self.threshold > self.pole_mass2:
            raise DomainError("threshold must lie above the pole")
        if not np.all(np.isfinite(cont)):
            raise DomainError("continuum table contains non-finite values")
        if len(cont):
            s, r = cont.T
            if np.any(np.diff(s) <= 0):
                raise DomainError("continuum nodes must be strictly increasing")
            if s[0] < self.threshold:
                raise DomainError("continuum starts below threshold")
            if np.any(r < 0):
                raise DomainError("continuum density must be nonnegative")
        if self.normalized and abs(self.total_mass - 1.0) > 1e-10:
            raise DomainError(f"model flagged normalized but has mass {self.total_mass!r}")

    @classmethod
    def from_shape(cls, pole_weight, pole_mass2, threshold, s, shape):
        """Normalized model whose continuum is ``shape`` rescaled to mass ``1 - Z``."""
        s = np.asarray(s, dtype=float)
        shape = np.asarray(shape, dtype=float)
        area = np.trapezoid(shape, s)
        if not area > 0:
            raise DomainError("continuum shape must have positive area")
        rho = shape * ((1.0 - pole_weight) / area)
        return cls(pole_weight, pole_mass2, threshold, np.column_stack([s, rho]), normalized=True)

    @property
    def s_max(self):
        return float(self.continuum[-1, 0]) if len(self.continuum) else float(self.threshold)

    @property
    def continuum_mass(self):
        if len(self.continuum) < 2:
            return 0.0
        return float(np.trapezoid(self.continuum[:, 1], self.continuum[:, 0]))

    @property
    def total_mass(self):
        return self.pole_weight + self.continuum_mass

    def density(self, s):
        """Continuum part ``ρ̃(s)`` (the pole is not included)."""
        if len(self.continuum) == 0:
            return np.zeros_like(np.asarray(s, dtype=float))
        cs, cr = self.continuum.T
        return np.interp(s, cs, cr, left=0.0, right=0.0)

    def _integrate(self, f, extra_points=(), what="continuum integral", limit=500):
        """``∫ ρ̃(s) f(s) ds`` by adaptive quadrature split at the table nodes."""
        if len(self.continuum) < 2:
            return 0.0
        cs = self.continuum[:, 0]
        a, b = cs[0], cs[-1]
        breaks = np.union1d(cs, [p for p in extra_points if a < p < b])
        total = 0.0
        # one quad call per chunk keeps the breakpoint count under quad's limit
        chunk = 50
        for k in range(0, len(breaks) - 1, chunk):
            lo, hi = breaks[k], breaks[min(k + chunk, len(breaks) - 1)]
            inner = breaks[k + 1:min(k + chunk, len(breaks) - 1)]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err, info, *msg = integrate.quad(
                    lambda s: self.density(s) * f(s), lo, hi,
                    points=inner if len(inner) else None,
                    epsabs=0.0, epsrel=_QUAD_REL, limit=limit, full_output=1,
                )
            if msg and err > 1e-8 * max(abs(val), 1e-300) + 1e-15:
                raise RuntimeError(f"{what} did not converge: {msg[0]}")
            total += val
        return total

    def _integrate_many(self, f, order=24, abs_floor=1e-300):
        """``∫ ρ̃(s) f(s) ds`` for a vector-valued ``f``: ``(m,) -> (k, m)``.

        Composite Gauss-Legendre on the table segments at two orders. Returns
        the estimate and a boolean mask of components whose two orders agree
        to the quadrature tolerance; the caller redoes the others adaptively.
        """
        if len(self.continuum) < 2:
            return 0.0, None
        cs = self.continuum[:, 0]
        lo, hi = cs[:-1], cs[1:]
        est = []
        for n in (order, 2 * order):
            t, w = np.polynomial.legendre.leggauss(n)
            half = 0.5 * (hi - lo)
            s = (0.5 * (hi + lo))[:, None] + half[:, None] * t[None, :]
            ww = (half[:, None] * w[None, :]).ravel()
            s = s.ravel()
            est.append(f(s) @ (self.density(s) * ww))
        coarse, fine = est
        ok = np.abs(fine - coarse) <= _QUAD_REL * np.abs(fine) + abs_floor
        return fine, ok


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Rectangle-rule discretisation of a spectral density.

    ``weights`` are derived from the nodes: ``Δ_j = s_{j+1} - s_j`` with the
    last weight copied from its predecessor.
    """

    nodes: np.ndarray
    values: np.ndarray = None
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        s = np.asarray(self.nodes, dtype=float)
        if s.ndim != 1 or len(s) < 2:
            raise DomainError("a spectral grid needs at least two nodes")
        if not np.all(np.isfinite(s)):
            raise DomainError("grid nodes must be finite")
        d = np.diff(s)
        if np.any(d <= 0):
            raise DomainError("grid nodes must be strictly increasing")
        w = np.append(d, d[-1])
        v = np.zeros_like(s) if self.values is None else np.asarray(self.values, dtype=float)
        if v.shape != s.shape:
            raise DomainError("values and nodes differ in length")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError("grid values must be finite and nonnegative")
        object.__setattr__(self, "nodes", _readonly(s))
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "weights", _readonly(w))

    @classmethod
    def uniform(cls, s_min, s_max, n, values=None):
        """Equidistant nodes ``s_min + j (s_max - s_min)/n`` for ``j = 1..n``.

        ``s_min`` itself is excluded so that the default ``s_min = 0`` never
        hits the logarithmic singularity of the kernel.
        """
        if not s_max > s_min >= 0:
            raise DomainError("need 0 <= s_min < s_max")
        n = int(n)
        h = (s_max - s_min) / n
        return cls(s_min + h * np.arange(1, n + 1), values)

    def __len__(self):
        return len(self.nodes)

    def with_values(self, values):
        return SpectralGrid(self.nodes, values)

    def above(self, s_lo):
        """Sub-grid of the nodes with ``s_j >= s_lo`` (values carried along)."""
        keep = self.nodes >= s_lo
        if keep.sum() < 2:
            raise DomainError(f"fewer than two grid nodes above s = {s_lo}")
        return SpectralGrid(self.nodes[keep], self.values[keep])

    @property
    def masses(self):
        """Per-bin spectral weight ``Δ_j ρ_j``."""
        return self.weights * self.values

    @property
    def total_mass(self):
        return float(np.sum(self.masses))


@dataclass(frozen=True, eq=False)
class CorrelatorSet:
    """Samples ``(x_i, C_i)`` of the Euclidean two-point function and a slack."""

    x: np.ndarray
    values: np.ndarray
    slack: float = 0.0

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        c = np.atleast_1d(np.asarray(self.values, dtype=float))
        if x.ndim != 1 or len(x) < 1:
            raise DomainError("need at least one correlator point")
        if x.shape != c.shape:
            raise DomainError("x and C differ in length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(c))):
            raise DomainError("correlator data must be finite")
        if np.any(x <= 0):
            raise DomainError("correlator points must be > 0")
        if np.any(np.diff(x) <= 0):
            raise DomainError("correlator points must be strictly increasing")
        if not (self.slack >= 0 and math.isfinite(self.slack)):
            raise DomainError(f"slack must be >= 0, got {self.slack}")
        object.__setattr__(self, "x", _readonly(x))
        object.__setattr__(self, "values", _readonly(c))
        object.__setattr__(self, "slack", float(self.slack))

    def __len__(self):
        return len(self.x)

    def with_slack(self, slack):
        return CorrelatorSet(self.x, self.values, slack)

    def shifted(self, eps):
        """Same points with ``eps`` added to every value."""
        return CorrelatorSet(self.x, self.values + eps, self.slack)

    def window(self, x_lo, x_hi):
        keep = (self.x >= x_lo) & (self.x <= x_hi)
        return CorrelatorSet(self.x[keep], self.values[keep], self.slack)


def log_spaced(x_lo, x_hi, n):
    """``n`` logarithmically spaced points on ``[x_lo, x_hi]``."""
    if not x_hi > x_lo > 0:
        raise DomainError("need 0 < x_lo < x_hi")
    return np.geomspace(x_lo, x_hi, int(n))


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def euclid_propagator(x, s):
    """Free Euclidean propagator in 1+1 dimensions, ``K0(sqrt(s)|x|) / (2π)``.

    Broadcasts over ``x`` and ``s``.
    """
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(x == 0):
        raise DomainError("propagator diverges at x = 0")
    if not np.all(s > 0):
        raise DomainError("propagator requires s > 0")
    return bessel_k0(np.sqrt(s) * np.abs(x)) / (2.0 * np.pi)


def kernel_matrix(x, s):
    """Matrix ``G[i, j] = G_E(x_i; s_j)``."""
    return np.asarray(euclid_propagator(np.asarray(x, float)[:, None], np.asarray(s, float)[None, :]))


# ---------------------------------------------------------------------------
# Observables of a known density
# ---------------------------------------------------------------------------


def smear(rho, mu2, sigma):
    """Gaussian-smeared density ``ρ^σ(μ²) = ∫ ρ(s) g_σ(μ² - s) ds``.

    ``rho`` is a :class:`SpectralModel` (pole handled exactly, continuum by
    quadrature) or a :class:`SpectralGrid` (rectangle rule). ``mu2`` may be an
    array.
    """
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    mu2_arr = np.atleast_1d(np.asarray(mu2, dtype=float))
    if isinstance(rho, SpectralGrid):
        out = gaussian_weight(mu2_arr[:, None], rho.nodes[None, :], sigma) @ rho.masses
    else:
        # far from the continuum the integral is negligible next to the peak
        floor = 1e-16 * rho.continuum_mass / (math.sqrt(2.0 * math.pi) * sigma)
        cont, ok = rho._integrate_many(
            lambda s: gaussian_weight(mu2_arr[:, None], s[None, :], sigma), abs_floor=floor
        )
        cont = np.broadcast_to(np.asarray(cont, dtype=float), mu2_arr.shape).copy()
        if ok is not None:
            for i in np.flatnonzero(~ok):
                m = mu2_arr[i]
                cont[i] = rho._integrate(
                    lambda s: gaussian_weight(m, s, sigma),
                    extra_points=m + sigma * np.arange(-8, 9),
                    what=f"smearing at mu2={m}",
                )
        out = rho.pole_weight * gaussian_weight(mu2_arr, rho.pole_mass2, sigma) + cont
    return float(out[0]) if np.ndim(mu2) == 0 else out


def synth_correlator(model, xs):
    """Euclidean correlator of ``model`` at points ``xs``, with zero slack.

    The continuum integral is accurate to relative 1e-10: a fixed-order rule
    per table segment where two orders agree, adaptive quadrature elsewhere.
    A failure names the offending ``x``.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(xs <= 0):
        raise DomainError("synthetic correlator needs x > 0")
    cont, ok = model._integrate_many(lambda s: kernel_matrix(xs, s))
    cont = np.broadcast_to(np.asarray(cont, dtype=float), xs.shape).copy()
    if ok is not None:
        for i in np.flatnonzero(~ok):
            x = xs[i]
            try:
                cont[i] = model._integrate(lambda s: euclid_propagator(x, s),
                                           what=f"correlator at x={x!r}")
            except RuntimeError as exc:
                raise RuntimeError(f"quadrature failed at x={x!r}: {exc}") from exc
    values = model.pole_weight * euclid_propagator(xs, model.pole_mass2) + cont
    return CorrelatorSet(xs, values, 0.0)


def grid_correlator(grid, xs):
    """Correlator of a grid-supported density, exact under the rectangle rule."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    return CorrelatorSet(xs, kernel_matrix(xs, grid.nodes) @ grid.masses, 0.0)


def retarded_true(rho, t):
    """Retarded propagator ``G_R(t) = ½ ∫ ρ(s) J0(sqrt(s) t) ds`` for ``t >= 0``.

    ``t`` may be an array; the result then has its shape.
    """
    if np.ndim(t) > 0:
        return np.array([retarded_true(rho, float(tt)) for tt in np.ravel(t)]).reshape(np.shape(t))
    if not t >= 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if isinstance(rho, SpectralGrid):
        return 0.5 * float(bessel_j0(np.sqrt(rho.nodes) * t) @ rho.masses)
    pole = rho.pole_weight * bessel_j0(math.sqrt(rho.pole_mass2) * t)
    limit = 500 + int(5 * t * math.sqrt(rho.s_max))
    cont = rho._integrate(lambda s: bessel_j0(math.sqrt(s) * t), what=f"G_R at t={t}", limit=limit)
    return 0.5 * (pole + cont)


def window_true(rho, a, b):
    """Spectral weight in the half-open window ``[a, b)``."""
    if not 0 <= a < b:
        raise DomainError("window needs 0 <= a < b")
    if isinstance(rho, SpectralGrid):
        inside = (rho.nodes >= a) & (rho.nodes < b)
        return float(rho.masses[inside].sum())
    total = rho.pole_weight if a <= rho.pole_mass2 < b else 0.0
    if len(rho.continuum) >= 2:
        cs = rho.continuum[:, 0]
        lo, hi = max(a, cs[0]), min(b, cs[-1])
        if hi > lo:
            pts = np.concatenate([[lo], cs[(cs > lo) & (cs < hi)], [hi]])
            total += float(np.trapezoid(rho.density(pts), pts))
    return total
