"""Ordinary and regression kriging.

The ordinary-kriging system is assembled in semivariance form::

    [ G  1 ] [ w  ]   [ g0 ]
    [ 1' 0 ] [ mu ] = [ 1  ]

where ``G[i, j] = gamma(d_ij)`` and ``g0[i] = gamma(d(x_i, x0))``. Since
``gamma(0) = 0`` the predictor is exact at training sites for every model.
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as spl
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lat_lon, check_targets, find_coincident
from .geo import GeoPoint, Site, haversine_matrix, sites_to_arrays
from .variogram import DEFAULT_N_BINS, VariogramModel, model_from_data


class SingularKrigingSystem(ValueError):
    """Raised when the kriging matrix cannot be factorised."""


class CoincidentSitesError(SingularKrigingSystem):
    def __init__(self, first, second):
        self.pair = (first, second)
        super().__init__(
            f"training sites {first!r} and {second!r} share coordinates; "
            "the kriging system is singular (merge them first, e.g. --dedupe mean)"
        )


class OrdinaryKriging(RegressorMixin, BaseEstimator):
    """Ordinary kriging on great-circle lags.

    Parameters
    ----------
    variogram : VariogramModel or None
        Fixed model. When None the model is fitted to the training data.
    family : {"auto", "spherical", "exponential", "gaussian"}
        Family used when fitting; "auto" keeps the best of the three.
    n_bins, max_lag_km
        Empirical variogram binning used when fitting.

    Attributes
    ----------
    variogram_ : VariogramModel
    n_negative_variance_ : int
        Count of predictions whose round-off-negative variance was clamped.
    """

    def __init__(self, variogram=None, family="auto", n_bins=DEFAULT_N_BINS, max_lag_km=None):
        self.variogram = variogram
        self.family = family
        self.n_bins = n_bins
        self.max_lag_km = max_lag_km

    def fit(self, X, y):
        X = check_lat_lon(X)
        y = check_targets(y, X.shape[0])
        if X.shape[0] < 2:
            raise ValueError("ordinary kriging needs at least 2 training sites")
        pair = find_coincident(X)
        if pair is not None:
            raise CoincidentSitesError(*pair)
        if self.variogram is None:
            fit = model_from_data(X, y, self.family, self.n_bins, self.max_lag_km)
            model = fit.model
        else:
            model = self.variogram
        self.variogram_ = model
        # Weights are invariant to scaling gamma, so the system is solved with
        # gamma / sill and the variance scaled back. A zero-sill model detects no
        # spatial structure; pure-nugget weights are used, with zero variance.
        if model.sill > 0:
            solve_model = VariogramModel(
                model.family, model.nugget / model.sill, model.partial_sill / model.sill, model.range_km
            )
            self._variance_scale = model.sill
        else:
            solve_model = VariogramModel(model.family, 1.0, 0.0, model.range_km)
            self._variance_scale = 0.0
        self._solve_model = solve_model

        n = X.shape[0]
        A = np.zeros((n + 1, n + 1))
        A[:n, :n] = solve_model(haversine_matrix(X, X))
        A[:n, n] = A[n, :n] = 1.0
        lu, piv = spl.lu_factor(A, check_finite=True)
        pivots = np.abs(np.diag(lu))
        if pivots.min() <= 1e-12 * pivots.max():
            raise SingularKrigingSystem(
                f"kriging system is numerically singular for model {model}"
            )
        self._lu = (lu, piv)
        self.coords_ = X
        self.values_ = y
        self.n_features_in_ = 2
        self.n_negative_variance_ = 0
        return self

    def _solve(self, X):
        check_is_fitted(self, "coords_")
        X = check_lat_lon(X)
        n = self.coords_.shape[0]
        D = haversine_matrix(self.coords_, X)
        rhs = np.ones((n + 1, X.shape[0]))
        rhs[:n] = self._solve_model(D)
        sol = spl.lu_solve(self._lu, rhs)
        # At a training site the right-hand side is a column of the matrix, so
        # the exact solution is a unit weight with zero multiplier. Substituting
        # it avoids round-off from ill-conditioned (e.g. gaussian) systems.
        site, target = np.nonzero(D == 0.0)
        sol[:, target] = 0.0
        sol[site, target] = 1.0
        return sol[:n].T, sol[n], rhs[:n].T

    def kriging_weights(self, X):
        """Weights ``(n_targets, n_train)``; every row sums to one."""
        return self._solve(X)[0]

    def predict(self, X, return_std=False):
        weights, mu, g0 = self._solve(X)
        pred = weights @ self.values_
        if not return_std:
            return pred
        var = (np.sum(weights * g0, axis=1) + mu) * self._variance_scale
        negative = var < 0
        if np.any(var < -1e-9 * self.variogram_.sill):
            warnings.warn("kriging variance markedly negative; clamped to 0", RuntimeWarning)
        self.n_negative_variance_ += int(negative.sum())
        return pred, np.sqrt(np.maximum(var, 0.0))


@dataclass(frozen=True)
class DriftModel:
    """Linear drift ``m(x) = b0 + b1 * covariate`` and its training residuals."""

    coefficients: np.ndarray
    residuals: np.ndarray

    def __call__(self, covariate):
        cov = np.asarray(covariate, dtype=np.float64)
        return self.coefficients[0] + self.coefficients[1] * cov


def fit_drift_arrays(covariate, values):
    covariate = np.asarray(covariate, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if covariate.shape[0] < 3:
        raise ValueError("drift fit needs at least 3 sites")
    if np.ptp(covariate) == 0:
        raise ValueError("covariate is constant; use ordinary kriging instead")
    design = np.column_stack([np.ones_like(covariate), covariate])
    beta, *_ = np.linalg.lstsq(design, values, rcond=None)
    return DriftModel(beta, values - design @ beta)


class RegressionKriging(RegressorMixin, BaseEstimator):
    """Linear drift on one covariate plus ordinary kriging of the residuals.

    ``X`` rows are ``[lat, lon, covariate]``. The residual variogram is fitted
    on every call to :meth:`fit`.
    """

    def __init__(self, family="auto", n_bins=DEFAULT_N_BINS, max_lag_km=None):
        self.family = family
        self.n_bins = n_bins
        self.max_lag_km = max_lag_km

    def fit(self, X, y):
        X = check_lat_lon(X, n_extra=1)
        y = check_targets(y, X.shape[0])
        self.drift_ = fit_drift_arrays(X[:, 2], y)
        self.residual_kriging_ = OrdinaryKriging(
            family=self.family, n_bins=self.n_bins, max_lag_km=self.max_lag_km
        ).fit(X[:, :2], self.drift_.residuals)
        self.n_features_in_ = 3
        return self

    def kriging_weights(self, X):
        check_is_fitted(self, "drift_")
        X = check_lat_lon(X, n_extra=1)
        return self.residual_kriging_.kriging_weights(X[:, :2])

    def predict(self, X, return_std=False):
        check_is_fitted(self, "drift_")
        X = check_lat_lon(X, n_extra=1)
        trend = self.drift_(X[:, 2])
        if return_std:
            resid, std = self.residual_kriging_.predict(X[:, :2], return_std=True)
            return trend + resid, std
        return trend + self.residual_kriging_.predict(X[:, :2])


@dataclass(frozen=True)
class KrigingPrediction:
    value: float
    variance: float
    weights: list


def check_training_sites(train, need):
    """Raise unless ``train`` has ``need`` sites and no shared coordinates."""
    if len(train) < need:
        raise ValueError(f"kriging needs at least {need} training sites, got {len(train)}")
    X, _ = sites_to_arrays(train)
    pair = find_coincident(X)
    if pair is not None:
        raise CoincidentSitesError(train[pair[0]].id, train[pair[1]].id)


def _prediction(model, train, query):
    pred, std = model.predict(query, return_std=True)
    weights = model.kriging_weights(query)[0]
    return KrigingPrediction(
        float(pred[0]), float(std[0] ** 2), [(s.id, float(w)) for s, w in zip(train, weights)]
    )


def ordinary_krige(train: Sequence[Site], model: VariogramModel, target: GeoPoint) -> KrigingPrediction:
    check_training_sites(train, 2)
    X, y = sites_to_arrays(train)
    ok = OrdinaryKriging(variogram=model).fit(X, y)
    return _prediction(ok, train, [[target.lat, target.lon]])


def fit_drift(train: Sequence[Site]) -> DriftModel:
    X, y = sites_to_arrays(train, covariate=True)
    return fit_drift_arrays(X[:, 2], y)


def regression_krige(
    train: Sequence[Site], target: GeoPoint, target_covariate: float, family: Optional[str] = None
) -> KrigingPrediction:
    check_training_sites(train, 3)
    X, y = sites_to_arrays(train, covariate=True)
    rk = RegressionKriging(family=family or "auto").fit(X, y)
    return _prediction(rk, train, [[target.lat, target.lon, target_covariate]])
