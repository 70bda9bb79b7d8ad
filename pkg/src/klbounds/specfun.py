"""Special functions entering the Euclidean and real-time kernels.

``bessel_k0`` and ``bessel_j0`` are thin, domain-checked wrappers around the
Cephes implementations in :mod:`scipy.special`. Both accept scalars or arrays
and return the same shape (a Python float for scalar input).
"""
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = ["AccuracyTarget", "ACCURACY", "bessel_k0", "bessel_j0", "gaussian_weight"]


@dataclass(frozen=True)
class AccuracyTarget:
    """Accuracy guaranteed by the special functions in this module."""

    rel_tol: float = 1e-12
    abs_tol: float = 1e-300

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not self.abs_tol >= 0:
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")


ACCURACY = AccuracyTarget()


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def bessel_k0(z):
    """Modified Bessel function of the second kind, order zero.

    Parameters
    ----------
    z : float or array_like
        Strictly positive argument.

    Returns
    -------
    float or ndarray
        ``K0(z)``. Values that underflow (``z`` beyond roughly 745) are
        returned as exact zeros.

    Raises
    ------
    DomainError
        If any ``z <= 0`` or is not finite-or-infinite positive.
    """
    z = np.asarray(z, dtype=float)
    if not np.all(z > 0):
        raise DomainError("bessel_k0 requires z > 0")
    return _out(special.k0(z))


def bessel_j0(z):
    """Bessel function of the first kind, order zero, for ``z >= 0``."""
    z = np.asarray(z, dtype=float)
    if not np.all(z >= 0):
        raise DomainError("bessel_j0 requires z >= 0")
    return _out(special.j0(z))


def gaussian_weight(mu2, s, sigma):
    """Unit-mass Gaussian test function ``exp(-(mu2-s)^2/(2 sigma^2)) / (sqrt(2 pi) sigma)``."""
    sigma = float(sigma)
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")
    d = (np.asarray(mu2, dtype=float) - np.asarray(s, dtype=float)) / sigma
    return _out(np.exp(-0.5 * d * d) / (np.sqrt(2.0 * np.pi) * sigma))
