"""Seeded synthetic score fields with a distance-to-best drift."""

import numpy as np

from .geo import GeoPoint, Site, haversine_matrix


def make_synthetic_field(
    n_sites=200,
    seed=0,
    bbox=((36.0, 7.0), (46.0, 17.0)),
    intercept=20.0,
    slope=3.0,
    noise_sill=25.0,
    noise_range_km=150.0,
    white_variance=1.0,
):
    """Random sites whose value is ``intercept + slope * covariate + noise``.

    Site ``s000`` is the designated best site. Every site's covariate is
    ``-distance_to_best_km / 100``. The spatially correlated noise is a
    Gaussian process with exponential covariance
    ``noise_sill * exp(-3 h / noise_range_km)``, i.e. the same practical-range
    convention as the exponential variogram.
    """
    rng = np.random.default_rng(seed)
    (lat0, lon0), (lat1, lon1) = bbox
    coords = np.column_stack(
        [rng.uniform(lat0, lat1, n_sites), rng.uniform(lon0, lon1, n_sites)]
    )
    D = haversine_matrix(coords, coords)
    cov = noise_sill * np.exp(-3.0 * D / noise_range_km)
    chol = np.linalg.cholesky(cov + 1e-9 * noise_sill * np.eye(n_sites))
    correlated = chol @ rng.standard_normal(n_sites)
    white = rng.normal(0.0, np.sqrt(white_variance), n_sites)
    covariate = -D[0] / 100.0
    values = intercept + slope * covariate + correlated + white
    return [
        Site(f"s{i:03d}", GeoPoint(float(la), float(lo)), float(v), float(c))
        for i, (la, lo, v, c) in enumerate(zip(coords[:, 0], coords[:, 1], values, covariate))
    ]
