"""Deterministic interpolators: nearest neighbour and inverse distance weighting.

Both estimators take ``X`` as ``(n, 2)`` rows of ``[lat, lon]`` in degrees and
measure great-circle distance in kilometres. Ties between equidistant
training sites resolve to the lowest training index; the Site-based helpers
sort by id first so ties resolve to the smallest id.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_lat_lon, check_targets
from .geo import GeoPoint, Site, haversine_matrix, sites_to_arrays


class NearestNeighborRegressor(RegressorMixin, BaseEstimator):
    """Predict the value of the geographically nearest training site."""

    def fit(self, X, y):
        X = check_lat_lon(X)
        self.coords_ = X
        self.values_ = check_targets(y, X.shape[0])
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "coords_")
        D = haversine_matrix(check_lat_lon(X), self.coords_)
        # argmin returns the first minimum, i.e. the lowest training index.
        return self.values_[np.argmin(D, axis=1)]


class IDWRegressor(RegressorMixin, BaseEstimator):
    """Inverse distance weighting on great-circle distances.

    Parameters
    ----------
    power : float, default=2.0
        Exponent ``p`` in the weights ``1 / d**p``.
    n_neighbors : int or None, default=None
        Use only the ``k`` nearest training sites; all sites when None.

    A target coinciding with a training site returns that site's value.
    """

    def __init__(self, power=2.0, n_neighbors=None):
        self.power = power
        self.n_neighbors = n_neighbors

    def fit(self, X, y):
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power}")
        X = check_lat_lon(X)
        if self.n_neighbors is not None:
            if int(self.n_neighbors) < 1:
                raise ValueError("n_neighbors must be a positive integer")
            if self.n_neighbors > X.shape[0]:
                raise ValueError(
                    f"n_neighbors={self.n_neighbors} exceeds {X.shape[0]} training sites"
                )
        self.coords_ = X
        self.values_ = check_targets(y, X.shape[0])
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        check_is_fitted(self, "coords_")
        D = haversine_matrix(check_lat_lon(X), self.coords_)
        n = D.shape[1]
        k = n if self.n_neighbors is None else int(self.n_neighbors)
        order = np.argsort(D, axis=1, kind="stable")[:, :k]
        out = np.empty(D.shape[0])
        for row, idx in enumerate(order):
            d = D[row, idx]
            if d[0] == 0.0:
                out[row] = self.values_[idx[0]]
                continue
            # Log-space weights relative to the nearest site avoid overflow at large p.
            logw = -self.power * (np.log(d) - np.log(d[0]))
            w = np.exp(logw)
            out[row] = np.dot(w, self.values_[idx]) / w.sum()
        return out


@dataclass(frozen=True)
class IdwParams:
    power: float = 2.0
    neighbors: Optional[int] = None

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if self.neighbors is not None and self.neighbors < 1:
            raise ValueError("neighbors must be a positive integer")


def _sorted_training(train: Sequence[Site]):
    if not train:
        raise ValueError("training set is empty")
    return sorted(train, key=lambda s: s.id)


def nn_interpolate(train: Sequence[Site], target: GeoPoint) -> float:
    X, y = sites_to_arrays(_sorted_training(train))
    model = NearestNeighborRegressor().fit(X, y)
    return float(model.predict([[target.lat, target.lon]])[0])


def idw_interpolate(train: Sequence[Site], target: GeoPoint, params: IdwParams = IdwParams()) -> float:
    X, y = sites_to_arrays(_sorted_training(train))
    model = IDWRegressor(power=params.power, n_neighbors=params.neighbors).fit(X, y)
    return float(model.predict([[target.lat, target.lon]])[0])
