"""Evaluation protocol: random splits, validation grid search, test RMSE,
training-size learning curves and score/similarity correlations.

Randomness
----------
Everything derives from one integer seed through :class:`numpy.random.SeedSequence`.
The train/validation/test split uses ``SeedSequence(seed)``; the subsample for
fraction index ``i`` and repetition ``r`` of a learning curve uses
``SeedSequence(seed, spawn_key=(i, r))``. Results are therefore reproducible
for a given seed and input order, and repetitions can be evaluated in any
order. Reordering the input sites changes the assignments.
"""

import itertools
import math
import statistics
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .geo import DistanceMatrix, Site, sites_to_arrays
from .interpolation import IDWRegressor, NearestNeighborRegressor
from .kriging import OrdinaryKriging, RegressionKriging

METHODS = ("nn", "idw", "ok", "rk")

DEFAULT_GRIDS = {
    "nn": {},
    "idw": {
        "power": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0],
        "n_neighbors": [4, 8, 16, None],
    },
    "ok": {"family": ["auto", "spherical", "exponential", "gaussian"]},
    "rk": {"family": ["auto", "spherical", "exponential", "gaussian"]},
}


def make_estimator(method, **params):
    if method == "nn":
        return NearestNeighborRegressor(**params)
    if method == "idw":
        return IDWRegressor(**params)
    if method == "ok":
        return OrdinaryKriging(**params)
    if method == "rk":
        return RegressionKriging(**params)
    raise ValueError(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")


def minimum_training_size(method, params=None):
    params = params or {}
    if method == "idw":
        return params.get("n_neighbors") or 1
    return {"nn": 1, "ok": 3, "rk": 3}[method]


def method_arrays(method, sites):
    """``(X, y)`` in the layout the method's estimator expects."""
    return sites_to_arrays(sites, covariate=(method == "rk"))


# --- metrics -----------------------------------------------------------------


def rmse(predictions, gold) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    g = np.asarray(gold, dtype=np.float64)
    if p.shape != g.shape or p.ndim != 1:
        raise ValueError(f"length mismatch: {p.shape} vs {g.shape}")
    if p.size == 0:
        raise ValueError("rmse of empty vectors is undefined")
    return math.sqrt(math.fsum((p - g) ** 2) / p.size)


def _check_pair(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    if x.size < 3:
        raise ValueError("correlation needs at least 3 observations")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise ValueError("correlation is undefined for a constant input")
    return x, y


def pearson(x, y) -> float:
    x, y = _check_pair(x, y)
    dx, dy = x - x.mean(), y - y.mean()
    r = np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    return float(min(1.0, max(-1.0, r)))


def spearman(x, y) -> float:
    x, y = _check_pair(x, y)
    return pearson(rankdata(x), rankdata(y))


# --- splitting ---------------------------------------------------------------


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.8
    val: float = 0.1
    test: float = 0.1
    seed: int = 42

    def __post_init__(self):
        ratios = (self.train, self.val, self.test)
        if any(r <= 0 for r in ratios):
            raise ValueError("split ratios must be positive")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios sum to {sum(ratios)}, not 1")


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def split_sizes(n, spec: SplitSpec):
    n_val = _round_half_up(n * spec.val)
    n_test = _round_half_up(n * spec.test)
    return n - n_val - n_test, n_val, n_test


def split_sites(sites: Sequence[Site], spec: SplitSpec = SplitSpec()):
    """Seeded random partition into (train, val, test).

    Validation and test sizes are ``round(n * ratio)`` (half up); train takes
    the remainder.
    """
    n = len(sites)
    if n < 10:
        raise ValueError(f"need at least 10 sites to split, got {n}")
    n_train, n_val, _ = split_sizes(n, spec)
    perm = np.random.default_rng(np.random.SeedSequence(spec.seed)).permutation(n)
    parts = np.split(perm, [n_train, n_train + n_val])
    return tuple([sites[i] for i in part] for part in parts)


# --- grid search -------------------------------------------------------------


@dataclass
class GridSearchResult:
    best_params: dict
    best_rmse: float
    scores: List[Tuple[dict, float]]
    failures: List[Tuple[dict, str]] = field(default_factory=list)


def enumerate_grid(grid):
    """Parameter combinations in declaration order, last key varying fastest."""
    keys = list(grid)
    for values in itertools.product(*(grid[k] for k in keys)):
        yield dict(zip(keys, values))


def fit_predict(method, params, train, test):
    X, y = method_arrays(method, train)
    Xt, _ = method_arrays(method, test)
    return make_estimator(method, **params).fit(X, y).predict(Xt)


def grid_search(method, grid, train, val) -> GridSearchResult:
    """Exhaustive validation-RMSE search; ties go to the earliest combination.

    A combination whose fit or prediction raises is scored ``inf`` and
    recorded in ``failures``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; valid methods: {', '.join(METHODS)}")
    if not train or not val:
        raise ValueError("grid search needs non-empty train and validation sets")
    combos = list(enumerate_grid(grid))
    if not combos:
        raise ValueError("empty parameter grid")
    gold = [s.value for s in val]
    scores, failures = [], []
    for params in combos:
        try:
            score = rmse(fit_predict(method, params, train, val), gold)
        except (ValueError, np.linalg.LinAlgError) as exc:
            score = math.inf
            failures.append((params, f"{type(exc).__name__}: {exc}"))
        scores.append((params, score))
    best_params, best = scores[0]
    for params, score in scores[1:]:
        if score < best:
            best_params, best = params, score
    return GridSearchResult(dict(best_params), best, scores, failures)


# --- full protocol -----------------------------------------------------------


@dataclass
class MethodResult:
    method: str
    params: dict
    val_rmse: float
    test_rmse: float


def evaluate_methods(sites, methods=("nn", "idw", "rk"), spec: SplitSpec = SplitSpec(), grids=None):
    """Split, tune each method on validation, report test RMSE."""
    grids = grids or DEFAULT_GRIDS
    train, val, test = split_sites(sites, spec)
    gold = [s.value for s in test]
    results = []
    for method in methods:
        gs = grid_search(method, grids[method], train, val)
        if not math.isfinite(gs.best_rmse):
            raise ValueError(f"{method}: every grid combination failed: {gs.failures[0][1]}")
        try:
            score = rmse(fit_predict(method, gs.best_params, train, test), gold)
        except ValueError as exc:
            raise ValueError(f"{method}: {exc}") from exc
        results.append(MethodResult(method, gs.best_params, gs.best_rmse, score))
    return results


# --- learning curves ---------------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    mean_rmse: float
    std_rmse: float
    reps: int
    failed: int = 0

    @property
    def available(self):
        return self.reps > 0


@dataclass
class LearningCurve:
    method: str
    params: dict
    points: List[CurvePoint]

    def to_csv_rows(self):
        yield ("fraction", "mean_rmse", "std_rmse", "reps")
        for p in self.points:
            yield (repr(p.fraction), repr(p.mean_rmse), repr(p.std_rmse), str(p.reps))


def _mean_std(values):
    # Exact rational accumulation: order-independent, and identical values
    # give their own value back with zero spread.
    return statistics.mean(values), statistics.pstdev(values)


def subsample_curve(method, params, train_pool, test, fractions, reps=100, seed=42):
    """RMSE on a fixed ``test`` set as the training pool is subsampled.

    For every fraction, ``reps`` subsamples of ``round(fraction * n)`` sites
    are drawn without replacement (kept in pool order). A fraction whose
    subsample is smaller than the method minimum is returned with
    ``reps=0`` and NaN statistics. Repetitions that raise are counted in
    ``failed`` and left out of the statistics.
    """
    fractions = [float(f) for f in fractions]
    if any(not 0 < f <= 1 for f in fractions):
        raise ValueError("fractions must lie in (0, 1]")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValueError("fractions must be strictly increasing")
    if reps < 1:
        raise ValueError("reps must be positive")
    n = len(train_pool)
    gold = [s.value for s in test]
    minimum = minimum_training_size(method, params)
    points = []
    for i, frac in enumerate(fractions):
        size = max(1, _round_half_up(frac * n))
        if size < minimum:
            points.append(CurvePoint(frac, math.nan, math.nan, 0))
            continue
        scores, failed = [], 0
        for r in range(reps):
            rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i, r)))
            idx = np.sort(rng.choice(n, size=size, replace=False))
            try:
                pred = fit_predict(method, params, [train_pool[j] for j in idx], test)
            except ValueError:
                failed += 1
                continue
            scores.append(rmse(pred, gold))
        if scores:
            mean, std = _mean_std(scores)
            points.append(CurvePoint(frac, mean, std, len(scores), failed))
        else:
            points.append(CurvePoint(frac, math.nan, math.nan, 0, failed))
    return points


def learning_curve(
    sites,
    method,
    fractions=(0.1, 0.25, 0.5, 0.75, 1.0),
    reps=100,
    seed=42,
    split: Optional[SplitSpec] = None,
    grid=None,
) -> LearningCurve:
    """Tune once on the full train/validation split, then subsample training data."""
    spec = split or SplitSpec(seed=seed)
    train, val, test = split_sites(sites, spec)
    grid = DEFAULT_GRIDS[method] if grid is None else grid
    params = grid_search(method, grid, train, val).best_params
    points = subsample_curve(method, params, train, test, fractions, reps, seed)
    return LearningCurve(method, params, points)


# --- correlation analysis ----------------------------------------------------


def similarity_covariate(linguistic: DistanceMatrix, scores: Dict[str, float]):
    """Distance from every scored site to the highest-scoring one.

    Returns ``(best_id, {site_id: distance})``; ties for the best score go to
    the smallest id. Larger values mean less similar to the best site.
    """
    missing = sorted(set(scores) - set(linguistic.ids))
    if missing:
        raise ValueError(f"scored sites missing from the distance matrix: {', '.join(missing)}")
    if not scores:
        raise ValueError("no scores given")
    best_id = min(scores, key=lambda k: (-scores[k], k))
    row = linguistic.row(best_id)
    return best_id, {sid: float(row[sid]) for sid in scores}
