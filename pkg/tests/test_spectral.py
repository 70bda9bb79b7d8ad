import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from klbounds.errors import DomainError
from klbounds.spectral import (
    CorrelatorSet,
    SpectralGrid,
    SpectralModel,
    euclid_propagator,
    grid_correlator,
    kernel_matrix,
    log_spaced,
    retarded_true,
    smear,
    synth_correlator,
    window_true,
)

from conftest import reference_model
from oracles import k0_quad, momentum_propagator

PEAK = 3.989422804014327
# K0(1) / (2π) from the integral representation of K0
G_UNIT = 0.0670081205084971


def pure_pole(z=1.0, m2=1.0):
    return SpectralModel(z, m2, 9.0 * m2)


# -- propagator ---------------------------------------------------------------


def test_propagator_at_unit_point():
    assert k0_quad(1.0) / (2 * math.pi) == pytest.approx(G_UNIT, rel=1e-14)
    assert euclid_propagator(1.0, 1.0) == pytest.approx(G_UNIT, rel=1e-14)


@pytest.mark.parametrize("x,s", [(0.05, 0.3), (1.0, 1.0), (2.5, 7.0), (4.0, 40.0)])
def test_propagator_matches_momentum_integral(x, s):
    assert euclid_propagator(x, s) == pytest.approx(momentum_propagator(x, s), rel=1e-6)


def test_propagator_depends_on_sqrt_s_times_x():
    assert euclid_propagator(2.0, 1.0) == euclid_propagator(1.0, 4.0)
    assert euclid_propagator(-1.5, 2.0) == euclid_propagator(1.5, 2.0)


def test_propagator_positive_and_decreasing():
    G = kernel_matrix(np.geomspace(0.01, 5, 20), np.geomspace(0.1, 50, 20))
    assert np.all(G > 0)
    assert np.all(np.diff(G, axis=0) < 0)
    assert np.all(np.diff(G, axis=1) < 0)


@pytest.mark.parametrize("x,s", [(0.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_propagator_domain(x, s):
    with pytest.raises(DomainError):
        euclid_propagator(x, s)


# -- domain types ---------------------------------------------------------------


def test_model_validation():
    with pytest.raises(DomainError):
        SpectralModel(-0.1, 1.0, 9.0)
    with pytest.raises(DomainError):
        SpectralModel(0.5, 0.0, 9.0)
    with pytest.raises(DomainError):
        SpectralModel(0.5, 1.0, 0.5)
    with pytest.raises(DomainError):
        SpectralModel(0.5, 1.0, 9.0, [[8.0, 1.0], [10.0, 1.0]])
    with pytest.raises(DomainError):
        SpectralModel(0.5, 1.0, 9.0, [[9.0, 1.0], [10.0, -1.0]])
    with pytest.raises(DomainError):
        SpectralModel(0.5, 1.0, 9.0, normalized=True)


def test_model_from_shape_is_normalized():
    m = reference_model()
    assert m.total_mass == pytest.approx(1.0, abs=1e-12)
    assert m.continuum_mass == pytest.approx(0.1, abs=1e-12)
    assert m.density(5.0) == 0.0 and m.density(41.0) == 0.0


def test_grid_weights():
    g = SpectralGrid([1.0, 2.0, 4.0, 7.0])
    assert g.weights.tolist() == [1.0, 2.0, 3.0, 3.0]
    u = SpectralGrid.uniform(0.0, 10.0, 5)
    assert u.nodes.tolist() == [2.0, 4.0, 6.0, 8.0, 10.0]
    assert np.all(u.weights == 2.0)
    with pytest.raises(DomainError):
        SpectralGrid([1.0])
    with pytest.raises(DomainError):
        SpectralGrid([1.0, 1.0, 2.0])
    with pytest.raises(DomainError):
        SpectralGrid([1.0, 2.0], [1.0, -1.0])


def test_grid_arrays_are_read_only():
    g = SpectralGrid.uniform(0.0, 1.0, 4, np.ones(4))
    with pytest.raises(ValueError):
        g.values[0] = 3.0


def test_correlator_set_validation():
    with pytest.raises(DomainError):
        CorrelatorSet([], [])
    with pytest.raises(DomainError):
        CorrelatorSet([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(DomainError):
        CorrelatorSet([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        CorrelatorSet([1.0], [1.0], slack=-1e-3)
    c = CorrelatorSet([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert c.with_slack(1e-3).slack == 1e-3
    assert c.shifted(0.5).values.tolist() == [3.5, 2.5, 1.5]
    assert c.window(1.5, 3.0).x.tolist() == [2.0, 3.0]


def test_log_spaced():
    x = log_spaced(1e-5, 3.0, 100)
    assert len(x) == 100 and x[0] == pytest.approx(1e-5) and x[-1] == pytest.approx(3.0)
    assert np.allclose(np.diff(np.log(x)), np.log(3e5) / 99)


# -- smearing -------------------------------------------------------------------


def test_smear_pure_pole():
    m = pure_pole()
    assert smear(m, 1.0, 0.1) == pytest.approx(PEAK, rel=1e-14)
    assert smear(m, 2.0, 0.1) == pytest.approx(PEAK * math.exp(-50.0), rel=1e-12)


def test_smear_uniform_grid():
    g = SpectralGrid.uniform(0.0, 10.0, 10_000)
    g = g.with_values(np.full(len(g), 0.1))
    assert smear(g, 5.0, 0.5) == pytest.approx(0.1, abs=1e-4)


def test_smear_domain():
    with pytest.raises(DomainError):
        smear(pure_pole(), 1.0, 0.0)


def test_smear_of_model_has_unit_mass():
    m = reference_model()
    sigma = 0.5
    mu2 = np.linspace(-10 * sigma, m.s_max + 10 * sigma, 4001)
    assert np.trapezoid(smear(m, mu2, sigma), mu2) == pytest.approx(1.0, abs=1e-6)


def _smear_error(model, n, mu2, sigma):
    g = SpectralGrid.uniform(0.0, 60.0, n)
    g = g.with_values(model.density(g.nodes))
    return abs(smear(g, mu2, sigma) - smear(model, mu2, sigma))


def test_grid_smear_converges_smooth_model():
    s = np.linspace(9, 40, 4000)
    m = SpectralModel.from_shape(0.0, 1.0, 9.0, s, ((s - 9) * (40 - s)) ** 2)
    errs = [_smear_error(m, n, 38.0, 1.0) for n in (100, 200, 400, 800)]
    assert all(a >= 3 * b for a, b in zip(errs, errs[1:])), errs


def test_grid_smear_first_order_with_a_jump():
    # a density that jumps at threshold exposes the rectangle rule's O(h) error
    m = SpectralModel(0.0, 1.0, 9.0, [[9.0, 1 / 31], [40.0, 1 / 31]])
    errs = [_smear_error(m, n, 9.0, 1.0) for n in (1000, 2000, 4000, 8000)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(1.8 < r < 2.2 for r in ratios), ratios


# -- synthetic correlators ------------------------------------------------------


def test_synth_pure_pole():
    c = synth_correlator(pure_pole(), [1.0])
    assert c.values[0] == pytest.approx(G_UNIT, rel=1e-14)
    assert c.slack == 0.0


def test_synth_matches_pointwise_quadrature(ref_model, ref_corr):
    from scipy import integrate

    table = ref_model.continuum[:, 0]
    for i in (0, 40, 99):
        x = ref_corr.x[i]
        cont = sum(
            integrate.quad(lambda s: ref_model.density(s) * euclid_propagator(x, s), a, b,
                           epsabs=0.0, epsrel=1e-12)[0]
            for a, b in zip(table[:-1], table[1:])
        )
        expect = 0.9 * euclid_propagator(x, 1.0) + cont
        assert ref_corr.values[i] == pytest.approx(expect, rel=1e-10)


def test_synth_decreasing_and_kernel_bounded(ref_model, ref_corr):
    assert np.all(np.diff(ref_corr.values) < 0)
    # unit total mass, every component at s >= M²
    assert np.all(ref_corr.values <= euclid_propagator(ref_corr.x, 1.0) * (1 + 1e-12))


def test_synth_needs_positive_x():
    with pytest.raises(DomainError):
        synth_correlator(pure_pole(), [0.0, 1.0])


def test_grid_correlator_is_rectangle_rule():
    g = SpectralGrid.uniform(0.0, 4.0, 4, [0.25, 0.0, 0.5, 0.0])
    c = grid_correlator(g, [0.5, 1.0])
    expect = 0.25 * euclid_propagator(np.array([0.5, 1.0]), 1.0) + 0.5 * euclid_propagator(
        np.array([0.5, 1.0]), 3.0)
    assert np.allclose(c.values, expect, rtol=1e-15)


# -- retarded propagator and windows -----------------------------------------


def test_retarded_examples(ref_model):
    assert retarded_true(ref_model, 0.0) == pytest.approx(0.5, abs=1e-12)
    assert abs(retarded_true(pure_pole(), 2.404825557695773)) < 1e-9
    assert retarded_true(pure_pole(1.0, 4.0), 1.0) == pytest.approx(0.5 * 0.22389077914123567, rel=1e-13)
    with pytest.raises(DomainError):
        retarded_true(ref_model, -1.0)


def test_retarded_accepts_arrays(ref_model):
    ts = np.array([[0.0, 1.5], [4.0, 10.0]])
    out = retarded_true(ref_model, ts)
    assert out.shape == ts.shape
    for t, v in zip(ts.ravel(), out.ravel()):
        assert v == retarded_true(ref_model, float(t))
    with pytest.raises(DomainError):
        retarded_true(ref_model, np.array([1.0, -1.0]))


def test_retarded_grid_converges_to_model():
    s = np.linspace(9, 40, 200)
    m = SpectralModel.from_shape(0.0, 1.0, 9.0, s, ((s - 9) * (40 - s)) ** 2)
    g = SpectralGrid.uniform(0.0, 60.0, 20_000)
    g = g.with_values(m.density(g.nodes))
    for t in (1.0, 5.0, 20.0):
        assert retarded_true(g, t) == pytest.approx(retarded_true(m, t), abs=1e-7)


def test_window_examples(ref_model):
    assert window_true(ref_model, 0.0, 9.0) == pytest.approx(0.9)
    assert window_true(ref_model, 9.0, 40.0) == pytest.approx(0.1, abs=1e-12)
    assert window_true(ref_model, 2.0, 2.0 + 1e-9) == 0.0
    with pytest.raises(DomainError):
        window_true(ref_model, 3.0, 3.0)


def test_window_half_open_on_grid():
    g = SpectralGrid([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
    assert window_true(g, 1.0, 2.0) == 1.0
    assert window_true(g, 0.0, 3.0) == 2.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 40.0), min_size=1, max_size=6, unique=True))
def test_windows_partition_model_mass(cuts):
    m = reference_model()
    edges = [0.0] + sorted(c for c in cuts if c > 0) + [50.0]
    total = sum(window_true(m, a, b) for a, b in zip(edges, edges[1:]) if b > a)
    assert total == pytest.approx(1.0, abs=1e-9)
