"""Empirical semivariograms and least-squares fitting of model variograms."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .geo import Site, haversine_matrix, sites_to_arrays

FAMILIES = ("spherical", "exponential", "gaussian")
DEFAULT_N_BINS = 15


@dataclass(frozen=True)
class EmpiricalVariogram:
    """Binned semivariance: lag centres (km), gamma and pair counts."""

    lags: np.ndarray
    gammas: np.ndarray
    counts: np.ndarray
    max_lag_km: float

    def __len__(self):
        return len(self.lags)

    @property
    def bins(self):
        return [
            (float(h), float(g), int(c))
            for h, g, c in zip(self.lags, self.gammas, self.counts)
        ]

    def to_csv_rows(self):
        yield ("lag_km", "gamma", "pairs")
        for h, g, c in self.bins:
            yield (repr(h), repr(g), str(c))


@dataclass(frozen=True)
class VariogramModel:
    family: str
    nugget: float
    partial_sill: float
    range_km: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown variogram family {self.family!r}; choose from {FAMILIES}")
        if self.nugget < 0 or self.partial_sill < 0:
            raise ValueError("nugget and partial sill must be non-negative")
        if not self.range_km > 0:
            raise ValueError("range must be positive")

    @property
    def sill(self):
        return self.nugget + self.partial_sill

    def __call__(self, h):
        return _gamma(self.family, self.nugget, self.partial_sill, self.range_km, h)


def _gamma(family, nugget, psill, rng, h):
    h = np.asarray(h, dtype=np.float64)
    r = h / rng
    if family == "spherical":
        shape = np.where(r < 1.0, 1.5 * r - 0.5 * r**3, 1.0)
    elif family == "exponential":
        shape = 1.0 - np.exp(-3.0 * r)
    else:
        shape = 1.0 - np.exp(-3.0 * r**2)
    # Zero lag is exactly zero; the nugget is the limit from the right.
    return np.where(h > 0, nugget + psill * shape, 0.0)


def _shape_and_range_derivative(family, rng, h):
    r = h / rng
    if family == "spherical":
        inside = r < 1.0
        shape = np.where(inside, 1.5 * r - 0.5 * r**3, 1.0)
        dshape = np.where(inside, (-1.5 * r + 1.5 * r**3) / rng, 0.0)
    elif family == "exponential":
        e = np.exp(-3.0 * r)
        shape, dshape = 1.0 - e, -3.0 * r / rng * e
    else:
        e = np.exp(-3.0 * r**2)
        shape, dshape = 1.0 - e, -6.0 * r**2 / rng * e
    return shape, dshape


def model_gamma(model: VariogramModel, h: float) -> float:
    if h < 0:
        raise ValueError(f"lag must be non-negative, got {h}")
    return float(model(h))


def empirical_variogram_arrays(coords, values, n_bins=DEFAULT_N_BINS, max_lag_km=None):
    """Empirical variogram from ``[lat, lon]`` rows and their values.

    Pairs are binned into ``n_bins`` equal-width, right-closed bins on
    ``(0, max_lag_km]``. The default maximum lag is half the largest pairwise
    distance. Empty bins are dropped.
    """
    coords = np.asarray(coords, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if coords.shape[0] < 2:
        raise ValueError("empirical variogram needs at least 2 sites")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    D = haversine_matrix(coords, coords)
    iu, ju = np.triu_indices(len(values), k=1)
    d = D[iu, ju]
    sq = (values[iu] - values[ju]) ** 2
    if max_lag_km is None:
        max_lag_km = d.max() / 2.0
    if not max_lag_km > 0:
        raise ValueError("maximum lag must be positive")
    edges = max_lag_km * np.arange(1, n_bins + 1) / n_bins
    edges[-1] = max_lag_km
    keep = (d > 0) & (d <= max_lag_km)
    # searchsorted(left) puts d in bin i with edges[i-1] < d <= edges[i].
    which = np.searchsorted(edges, d[keep], side="left")
    counts = np.bincount(which, minlength=n_bins)
    sums = np.bincount(which, weights=sq[keep], minlength=n_bins)
    lower = np.concatenate([[0.0], edges[:-1]])
    centers = (lower + edges) / 2.0
    nz = counts > 0
    return EmpiricalVariogram(
        lags=centers[nz],
        gammas=sums[nz] / (2.0 * counts[nz]),
        counts=counts[nz],
        max_lag_km=float(max_lag_km),
    )


def empirical_variogram(
    sites: Sequence[Site], n_bins: int = DEFAULT_N_BINS, max_lag_km: Optional[float] = None
) -> EmpiricalVariogram:
    if len(sites) < 2:
        raise ValueError("empirical variogram needs at least 2 sites")
    X, y = sites_to_arrays(sites)
    return empirical_variogram_arrays(X, y, n_bins=n_bins, max_lag_km=max_lag_km)


def wls_objective(emp: EmpiricalVariogram, model: VariogramModel) -> float:
    """Pair-count weighted squared error of ``model`` against ``emp``."""
    resid = emp.gammas - model(emp.lags)
    return float(np.sum(emp.counts * resid**2))


@dataclass(frozen=True)
class VariogramFit:
    model: VariogramModel
    objective: float


def initial_guesses(emp: EmpiricalVariogram):
    """Documented multi-start points: ``(nugget, partial_sill, range)``."""
    top = float(emp.lags.max())
    gmax = float(emp.gammas.max())
    return [(0.0, gmax, f * top) for f in (0.25, 0.5, 1.0)]


def _fit_family(emp, family):
    top = float(emp.lags.max())
    gmax = float(emp.gammas.max())
    if gmax == 0.0:
        model = VariogramModel(family, 0.0, 0.0, top)
        return VariogramFit(model, wls_objective(emp, model))

    weights = np.sqrt(emp.counts.astype(np.float64))
    # Parameters are fitted in units of (gmax, gmax, top) to keep the problem well scaled.
    scale = np.array([gmax, gmax, top])
    g_scaled = emp.gammas / gmax

    def residuals(theta):
        nug, ps, rng = theta
        return weights * (_gamma(family, nug, ps, rng * top, emp.lags) - g_scaled)

    def jacobian(theta):
        nug, ps, rng = theta
        shape, dshape = _shape_and_range_derivative(family, rng * top, emp.lags)
        # gamma/gmax = nug + ps * shape in scaled units; d/d(rng) picks up a factor top.
        return weights[:, None] * np.column_stack(
            [np.ones_like(shape), shape, ps * dshape * top]
        )

    lower = [0.0, 0.0, 1e-6]
    upper = [np.inf, np.inf, 10.0]
    candidates = []
    for start in initial_guesses(emp):
        x0 = np.asarray(start) / scale
        candidates.append(VariogramModel(family, *start))
        sol = least_squares(
            residuals, x0, jac=jacobian, bounds=(lower, upper), method="trf",
            xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=500,
        )
        nug, ps, rng = np.maximum(sol.x, [0.0, 0.0, 1e-6]) * scale
        candidates.append(VariogramModel(family, float(nug), float(ps), float(rng)))
    scored = [(wls_objective(emp, m), m.range_km, i, m) for i, m in enumerate(candidates)]
    obj, _, _, best = min(scored, key=lambda t: t[:3])
    return VariogramFit(best, obj)


def fit_variogram(emp: EmpiricalVariogram, family: Optional[str] = None) -> VariogramFit:
    """Fit a model variogram by pair-count weighted least squares.

    Each family is fitted from three starts (nugget 0, partial sill equal to
    the largest empirical gamma, range at 1/4, 1/2 and 1 times the largest
    lag) with the range bounded by ten times the largest lag; the starting
    points themselves remain candidates, so the result is never worse than
    any start. With ``family=None`` (or ``"auto"``) all families are fitted and
    the lowest objective wins, ties going to spherical, exponential,
    gaussian in that order and then to the shorter range.
    """
    if len(emp) < 3:
        raise ValueError(f"need at least 3 non-empty bins to fit a variogram, got {len(emp)}")
    if family in (None, "auto"):
        fits = [_fit_family(emp, f) for f in FAMILIES]
        return min(
            enumerate(fits), key=lambda t: (t[1].objective, t[0], t[1].model.range_km)
        )[1]
    if family not in FAMILIES:
        raise ValueError(f"unknown variogram family {family!r}; choose from {FAMILIES}")
    return _fit_family(emp, family)


def fit_variogram_model(emp: EmpiricalVariogram, family: Optional[str] = None) -> VariogramModel:
    return fit_variogram(emp, family).model


def model_from_data(coords, values, family=None, n_bins=DEFAULT_N_BINS, max_lag_km=None):
    emp = empirical_variogram_arrays(coords, values, n_bins=n_bins, max_lag_km=max_lag_km)
    return fit_variogram(emp, family)
