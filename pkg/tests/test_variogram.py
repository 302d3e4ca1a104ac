import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_site, random_sites
from dialectgeo.geo import sites_to_arrays
from dialectgeo.variogram import (
    FAMILIES,
    EmpiricalVariogram,
    VariogramModel,
    empirical_variogram,
    fit_variogram,
    fit_variogram_model,
    initial_guesses,
    model_gamma,
    wls_objective,
)
from oracles import brute_force_variogram


def test_constant_field_gamma_zero(rng):
    sites = [make_site(f"s{i}", *rng.uniform([40, 10], [44, 14]), 7.0) for i in range(12)]
    emp = empirical_variogram(sites, n_bins=4)
    assert len(emp) > 0
    assert np.all(emp.gammas == 0.0)


def test_two_sites_single_pair():
    sites = [make_site("a", 40, 10, 1.0), make_site("b", 41, 11, 3.0)]
    # The default maximum lag (half the largest distance) would exclude the only pair.
    emp = empirical_variogram(sites, n_bins=3, max_lag_km=500.0)
    assert emp.bins[0][1] == 2.0 and emp.bins[0][2] == 1 and len(emp) == 1


def test_matches_brute_force(rng):
    sites = random_sites(rng, 5)
    X, y = sites_to_arrays(sites)
    emp = empirical_variogram(sites, n_bins=3)
    oracle = brute_force_variogram(X.tolist(), y.tolist(), 3, emp.max_lag_km)
    assert len(oracle) == len(emp)
    for (h, g, c), (ho, go, co) in zip(emp.bins, oracle):
        assert c == co
        assert h == pytest.approx(ho, abs=1e-12)
        assert g == pytest.approx(go, abs=1e-12)


def test_default_max_lag_is_half_max_distance(rng):
    sites = random_sites(rng, 8)
    X, _ = sites_to_arrays(sites)
    from dialectgeo.geo import haversine_matrix

    assert empirical_variogram(sites).max_lag_km == pytest.approx(haversine_matrix(X, X).max() / 2)


def test_needs_two_sites():
    with pytest.raises(ValueError):
        empirical_variogram([make_site("a", 0, 0, 1.0)])


def test_lag_centres_increasing(rng):
    emp = empirical_variogram(random_sites(rng, 30), n_bins=10)
    assert np.all(np.diff(emp.lags) > 0)
    assert np.all(emp.counts > 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10.0))
def test_scaling_values_scales_gamma(seed, c):
    rng = np.random.default_rng(seed)
    sites = random_sites(rng, 10)
    X, y = sites_to_arrays(sites)
    from dialectgeo.variogram import empirical_variogram_arrays

    a = empirical_variogram_arrays(X, y, n_bins=4)
    b = empirical_variogram_arrays(X, c * y, n_bins=4)
    assert b.gammas == pytest.approx(c**2 * a.gammas, rel=1e-12)


def test_model_gamma_examples():
    sph = VariogramModel("spherical", 0.1, 0.9, 50)
    assert model_gamma(sph, 0.0) == 0.0
    assert model_gamma(sph, 50.0) == pytest.approx(1.0, abs=1e-15)
    exp = VariogramModel("exponential", 0.0, 1.0, 10)
    assert model_gamma(exp, 10.0) == pytest.approx(1 - math.exp(-3), abs=1e-12)
    assert 1 - math.exp(-3) == pytest.approx(0.95021, abs=1e-5)
    with pytest.raises(ValueError):
        model_gamma(sph, -1.0)


def test_model_nugget_is_right_limit():
    m = VariogramModel("gaussian", 0.3, 1.0, 20)
    assert model_gamma(m, 1e-9) == pytest.approx(0.3)


@pytest.mark.parametrize("family", FAMILIES)
@settings(max_examples=25, deadline=None)
@given(nug=st.floats(0, 5), ps=st.floats(0, 5), rng_km=st.floats(1, 500))
def test_model_nondecreasing(family, nug, ps, rng_km):
    m = VariogramModel(family, nug, ps, rng_km)
    h = np.linspace(0, 3 * rng_km, 200)
    assert np.all(np.diff(m(h)) >= -1e-12)


def test_model_validation():
    with pytest.raises(ValueError):
        VariogramModel("matern", 0, 1, 1)
    with pytest.raises(ValueError):
        VariogramModel("spherical", -1, 1, 1)
    with pytest.raises(ValueError):
        VariogramModel("spherical", 0, 1, 0)


def exact_bins(model, lags, counts=10):
    lags = np.asarray(lags, dtype=float)
    return EmpiricalVariogram(lags, model(lags), np.full(len(lags), counts), float(lags.max()))


def test_fit_recovers_spherical():
    emp = exact_bins(VariogramModel("spherical", 0.1, 0.9, 50), np.arange(2.5, 100, 5.0))
    m = fit_variogram_model(emp, "spherical")
    assert (m.nugget, m.partial_sill, m.range_km) == pytest.approx((0.1, 0.9, 50), abs=1e-4)


@pytest.mark.parametrize(
    "truth",
    [VariogramModel("gaussian", 3.0, 40.0, 120.0), VariogramModel("exponential", 12.0, 25.0, 300.0)],
)
def test_fit_recovers_unscaled_models(truth):
    emp = exact_bins(truth, np.linspace(10, 3 * truth.range_km, 15))
    m = fit_variogram_model(emp, truth.family)
    assert m.nugget == pytest.approx(truth.nugget, abs=1e-4 * truth.sill)
    assert m.partial_sill == pytest.approx(truth.partial_sill, rel=1e-4)
    assert m.range_km == pytest.approx(truth.range_km, rel=1e-4)


def test_auto_picks_generating_family():
    emp = exact_bins(VariogramModel("gaussian", 0.2, 1.0, 80), np.linspace(5, 200, 20))
    assert fit_variogram_model(emp).family == "gaussian"


def test_fit_flat_field():
    emp = EmpiricalVariogram(np.array([1.0, 2.0, 3.0]), np.zeros(3), np.array([4, 4, 4]), 3.0)
    m = fit_variogram_model(emp, "spherical")
    assert (m.nugget, m.partial_sill, m.range_km) == (0.0, 0.0, 3.0)


def test_fit_noisy_beats_truth():
    truth = VariogramModel("exponential", 0.0, 1.0, 20.0)
    lags = np.linspace(1, 60, 15)
    noise = np.random.default_rng(7).normal(0, 0.01, 15)
    emp = EmpiricalVariogram(lags, truth(lags) + noise, np.full(15, 10000), 60.0)
    fit = fit_variogram(emp, "exponential")
    assert fit.objective <= wls_objective(emp, truth)


def test_fit_needs_three_bins():
    emp = EmpiricalVariogram(np.array([1.0, 2.0]), np.array([0.5, 1.0]), np.array([3, 3]), 2.0)
    with pytest.raises(ValueError, match="3"):
        fit_variogram_model(emp)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(FAMILIES))
def test_fit_never_worse_than_starts(seed, family):
    rng = np.random.default_rng(seed)
    emp = empirical_variogram(random_sites(rng, 25), n_bins=8)
    if len(emp) < 3:
        return
    fit = fit_variogram(emp, family)
    for start in initial_guesses(emp):
        assert fit.objective <= wls_objective(emp, VariogramModel(family, *start)) + 1e-12
