import warnings

import numpy as np
import pytest

from klbounds.errors import TruncationWarning
from klbounds.spectral import SpectralGrid, SpectralModel, log_spaced, synth_correlator


@pytest.fixture(autouse=True)
def _quiet_truncation():
    # the default grid always trips the tail check at x = 1e-5
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        yield


def reference_model(z=0.9, m2=1.0, lo=9.0, hi=40.0, n=200):
    """Pole plus a smooth bump continuum vanishing at both ends."""
    s = np.linspace(lo, hi, n)
    return SpectralModel.from_shape(z, m2, lo, s, ((s - lo) * (hi - s)) ** 2)


def random_grid_model(rng, grid, threshold_factor=9):
    """Normalised grid density: one pole bin plus a random smooth continuum."""
    nodes = grid.nodes
    m2 = float(rng.uniform(0.5, 2.0))
    pole = int(np.argmin(np.abs(nodes - m2)))
    th = threshold_factor * nodes[pole]
    vals = np.zeros(len(grid))
    above = nodes >= th
    if above.any():
        k = rng.integers(1, 4)
        for _ in range(k):
            c = rng.uniform(th, min(th + 30.0, nodes[-1]))
            w = rng.uniform(1.0, 8.0)
            vals[above] += rng.uniform(0.2, 1.0) * np.exp(-0.5 * ((nodes[above] - c) / w) ** 2)
    z = float(rng.uniform(0.5, 0.95))
    cont_mass = float(vals @ grid.weights)
    if cont_mass > 0:
        vals *= (1.0 - z) / cont_mass
    else:
        z = 1.0
    vals[pole] += z / grid.weights[pole]
    return grid.with_values(vals)


@pytest.fixture(scope="session")
def ref_model():
    return reference_model()


@pytest.fixture(scope="session")
def ref_corr(ref_model):
    return synth_correlator(ref_model, log_spaced(1e-5, 3.0, 100))


@pytest.fixture(scope="session")
def small_grid():
    return SpectralGrid.uniform(0.0, 60.0, 1000)
