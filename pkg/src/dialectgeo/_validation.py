"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array


def check_lat_lon(X, n_extra=0, name="X"):
    """Validate an array of ``[lat, lon, *extra]`` rows.

    Parameters
    ----------
    X : array-like of shape (n_samples, 2 + n_extra)
        Latitude and longitude in degrees, optionally followed by
        ``n_extra`` covariate columns.
    n_extra : int
        Number of columns expected after latitude and longitude.

    Returns
    -------
    ndarray of float64
    """
    X = check_array(X, dtype=np.float64, ensure_2d=True)
    expected = 2 + n_extra
    if X.shape[1] != expected:
        raise ValueError(
            f"{name} has {X.shape[1]} columns; expected {expected} "
            "(lat, lon" + (", covariate" * n_extra) + ")"
        )
    lat, lon = X[:, 0], X[:, 1]
    if np.any(np.abs(lat) > 90.0):
        row = int(np.flatnonzero(np.abs(lat) > 90.0)[0])
        raise ValueError(f"{name}[{row}] latitude {lat[row]!r} outside [-90, 90]")
    if np.any(np.abs(lon) > 180.0):
        row = int(np.flatnonzero(np.abs(lon) > 180.0)[0])
        raise ValueError(f"{name}[{row}] longitude {lon[row]!r} outside [-180, 180]")
    return X


def check_targets(y, n_samples):
    y = check_array(y, dtype=np.float64, ensure_2d=False)
    if y.ndim != 1:
        raise ValueError("y must be one-dimensional")
    if y.shape[0] != n_samples:
        raise ValueError(f"X has {n_samples} rows but y has {y.shape[0]}")
    return y


def find_coincident(coords):
    """Return the first index pair ``(i, j)``, i < j, sharing coordinates, or None."""
    seen = {}
    for j, row in enumerate(map(tuple, np.asarray(coords)[:, :2])):
        if row in seen:
            return seen[row], j
        seen[row] = j
    return None
