import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dialectgeo.evaluation import (
    DEFAULT_GRIDS,
    SplitSpec,
    enumerate_grid,
    evaluate_methods,
    fit_predict,
    grid_search,
    learning_curve,
    make_estimator,
    pearson,
    rmse,
    spearman,
    similarity_covariate,
    split_sites,
    split_sizes,
    subsample_curve,
)
from dialectgeo.geo import DistanceMatrix
from dialectgeo.synthetic import make_synthetic_field
from conftest import make_site, random_sites


def test_split_sizes():
    assert split_sizes(223, SplitSpec()) == (179, 22, 22)
    assert split_sizes(10, SplitSpec()) == (8, 1, 1)


def test_split_is_partition_and_deterministic(rng):
    sites = random_sites(rng, 57)
    a = split_sites(sites, SplitSpec(seed=3))
    b = split_sites(sites, SplitSpec(seed=3))
    assert [[s.id for s in p] for p in a] == [[s.id for s in p] for p in b]
    ids = [s.id for p in a for s in p]
    assert sorted(ids) == sorted(s.id for s in sites)
    assert tuple(len(p) for p in a) == split_sizes(57, SplitSpec())
    c = split_sites(sites, SplitSpec(seed=4))
    assert [s.id for s in c[2]] != [s.id for s in a[2]]


def test_split_errors(rng):
    with pytest.raises(ValueError):
        split_sites(random_sites(rng, 9), SplitSpec())
    with pytest.raises(ValueError):
        SplitSpec(0.8, 0.2, 0.0)
    with pytest.raises(ValueError):
        SplitSpec(0.8, 0.1, 0.2)


def test_rmse_cases():
    assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
    assert rmse([1.5, 2.5], [1, 2]) == 0.5
    assert rmse([1, 2, 3], [2, 2, 5]) == pytest.approx(1.29099, abs=1e-5)
    with pytest.raises(ValueError):
        rmse([1, 2], [1])


def test_correlation_cases():
    x = np.arange(10.0)
    assert pearson(x, 2 * x + 1) == pytest.approx(1.0)
    assert pearson(x, -x) == pytest.approx(-1.0)
    assert pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5)
    assert spearman(x, np.exp(x)) == pytest.approx(1.0)
    assert spearman(x, -x**3) == pytest.approx(-1.0)
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2])


def test_spearman_ties_use_average_rank():
    # Ranks (1, 2.5, 2.5, 4) against (1, 2, 3, 4).
    r = np.array([1, 2.5, 2.5, 4])
    expected = np.corrcoef(r, [1, 2, 3, 4])[0, 1]
    assert spearman([0, 5, 5, 9], [1, 2, 3, 4]) == pytest.approx(expected, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100), st.floats(-100, 100))
def test_correlation_invariances(seed, a, b):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=30), rng.normal(size=30)
    assert pearson(a * x + b, y) == pytest.approx(pearson(x, y), abs=1e-9)
    assert spearman(np.exp(x), y**3) == pytest.approx(spearman(x, y), abs=1e-12)


def test_enumeration_order():
    combos = list(enumerate_grid({"a": [1, 2], "b": ["x", "y"]}))
    assert combos == [{"a": 1, "b": "x"}, {"a": 1, "b": "y"}, {"a": 2, "b": "x"}, {"a": 2, "b": "y"}]


def test_grid_search_single_and_ties(rng):
    sites = random_sites(rng, 20)
    train, val = sites[:15], sites[15:]
    gs = grid_search("idw", {"power": [1.5]}, train, val)
    assert gs.best_params == {"power": 1.5}
    # Identical parameter values give bit-identical scores; the first wins.
    gs = grid_search("idw", {"power": [2.0, 2.0], "n_neighbors": [None, None]}, train, val)
    assert gs.best_params == {"power": 2.0, "n_neighbors": None}
    assert gs.scores[0][1] == gs.scores[-1][1]
    assert gs.scores.index((gs.best_params, gs.best_rmse)) == 0


def test_grid_search_prefers_sharper_power():
    rng = np.random.default_rng(7)
    train = [make_site(f"t{i}", 40 + la, 10 + lo, float(rng.normal(0, 10)))
             for i, (la, lo) in enumerate((a, b) for a in range(4) for b in range(4))]
    # Each validation site sits next to one training site and copies its value.
    val = [make_site(f"v{i}", s.lat + 0.02, s.lon + 0.01, s.value) for i, s in enumerate(train[::3])]
    direct = {p: rmse(fit_predict("idw", {"power": p}, train, val), [s.value for s in val]) for p in (1.0, 2.0)}
    assert direct[2.0] < direct[1.0]
    gs = grid_search("idw", {"power": [1.0, 2.0]}, train, val)
    assert gs.best_params == {"power": 2.0}
    assert gs.best_rmse == direct[2.0]


def test_grid_search_records_failures(rng):
    sites = random_sites(rng, 12)
    gs = grid_search("idw", {"power": [-1.0, 2.0]}, sites[:8], sites[8:])
    assert gs.best_params == {"power": 2.0}
    assert len(gs.failures) == 1 and gs.scores[0][1] == math.inf


def test_grid_search_result_in_grid(rng):
    sites = random_sites(rng, 30)
    grid = DEFAULT_GRIDS["idw"]
    gs = grid_search("idw", grid, sites[:24], sites[24:])
    assert gs.best_params in list(enumerate_grid(grid))


def test_unknown_method(rng):
    with pytest.raises(ValueError, match="valid methods"):
        make_estimator("spline")
    sites = random_sites(rng, 12)
    with pytest.raises(ValueError, match="valid methods"):
        grid_search("spline", {"x": [1]}, sites[:8], sites[8:])


def test_evaluate_methods_runs_and_is_deterministic():
    sites = make_synthetic_field(60, seed=2)
    a = evaluate_methods(sites, ("nn", "idw", "ok", "rk"))
    b = evaluate_methods(sites, ("nn", "idw", "ok", "rk"))
    assert [(r.method, r.params, r.test_rmse) for r in a] == [(r.method, r.params, r.test_rmse) for r in b]
    assert all(r.test_rmse > 0 for r in a)


def pool_and_test(n=60, seed=1):
    sites = make_synthetic_field(n, seed=seed)
    train, _, test = split_sites(sites, SplitSpec(seed=seed))
    return train, test


def test_full_fraction_has_zero_std_and_matches_direct():
    train, test = pool_and_test()
    for method, params in (("nn", {}), ("idw", {"power": 2.0}), ("rk", {"family": "exponential"})):
        direct = rmse(fit_predict(method, params, train, test), [s.value for s in test])
        (pt,) = subsample_curve(method, params, train, test, [1.0], reps=3, seed=5)
        assert pt.std_rmse == 0.0 and pt.reps == 3
        assert pt.mean_rmse == direct


def test_single_rep_equals_direct_evaluation():
    train, test = pool_and_test()
    (pt,) = subsample_curve("idw", {"power": 2.0}, train, test, [0.5], reps=1, seed=9)
    rng = np.random.default_rng(np.random.SeedSequence(9, spawn_key=(0, 0)))
    idx = np.sort(rng.choice(len(train), size=round(0.5 * len(train)), replace=False))
    direct = rmse(fit_predict("idw", {"power": 2.0}, [train[i] for i in idx], test), [s.value for s in test])
    assert pt.mean_rmse == direct and pt.std_rmse == 0.0


def test_small_fraction_marked_unavailable():
    train, test = pool_and_test(20)
    points = subsample_curve("rk", {}, train, test, [0.1, 1.0], reps=2, seed=0)
    assert not points[0].available and math.isnan(points[0].mean_rmse)
    assert points[1].available


def test_curve_validation():
    train, test = pool_and_test()
    with pytest.raises(ValueError):
        subsample_curve("nn", {}, train, test, [0.5, 0.25], reps=2)
    with pytest.raises(ValueError):
        subsample_curve("nn", {}, train, test, [0.0, 1.0], reps=2)
    with pytest.raises(ValueError):
        subsample_curve("nn", {}, train, test, [1.0], reps=0)


def test_learning_curve_deterministic_and_csv():
    sites = make_synthetic_field(50, seed=4)
    a = learning_curve(sites, "nn", fractions=(0.25, 1.0), reps=5, seed=11)
    b = learning_curve(sites, "nn", fractions=(0.25, 1.0), reps=5, seed=11)
    assert list(a.to_csv_rows()) == list(b.to_csv_rows())
    assert next(iter(a.to_csv_rows())) == ("fraction", "mean_rmse", "std_rmse", "reps")


def test_nn_curve_improves_with_data():
    lows, highs = [], []
    for seed in range(50):
        train, test = pool_and_test(200, seed)
        lo, hi = subsample_curve("nn", {}, train, test, [0.1, 1.0], reps=5, seed=seed)
        lows.append(lo.mean_rmse)
        highs.append(hi.mean_rmse)
    assert np.mean(highs) <= np.mean(lows)


def test_similarity_covariate():
    ids = ("a", "b", "c", "d")
    pts = np.array([[0, 0], [1, 0], [0, 2], [3, 3.0]])
    D = DistanceMatrix(ids, np.linalg.norm(pts[:, None] - pts[None], axis=-1))
    best, cov = similarity_covariate(D, {"a": 1.0, "b": 5.0, "c": 5.0, "d": 0.0})
    assert best == "b"
    assert cov == {k: float(D.entries[1, i]) for i, k in enumerate(ids)}
    assert cov["b"] == 0.0
    two = DistanceMatrix(("x", "y"), np.array([[0, 2.5], [2.5, 0]]))
    assert similarity_covariate(two, {"x": 3, "y": 1}) == ("x", {"x": 0.0, "y": 2.5})
    with pytest.raises(ValueError, match="missing"):
        similarity_covariate(two, {"z": 1.0})
