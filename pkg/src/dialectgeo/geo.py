"""Geodesic primitives: points, sites, great-circle distances and grids."""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class GeoPoint:
    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError(f"non-finite coordinate ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class Site:
    """A geotagged observation with an optional drift covariate."""

    id: str
    point: GeoPoint
    value: float
    covariate: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"site {self.id!r}: value must be finite")
        if self.covariate is not None and not math.isfinite(self.covariate):
            raise ValueError(f"site {self.id!r}: covariate must be finite")

    @property
    def lat(self):
        return self.point.lat

    @property
    def lon(self):
        return self.point.lon


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric, non-negative, zero-diagonal matrix labelled by site id."""

    ids: tuple
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.float64)
        n = len(self.ids)
        if entries.shape != (n, n):
            raise ValueError(f"entries shape {entries.shape} does not match {n} ids")
        if len(set(self.ids)) != n:
            raise ValueError("distance matrix ids must be unique")
        if not np.all(np.isfinite(entries)):
            raise ValueError("distance matrix has non-finite entries")
        if np.any(entries < 0):
            raise ValueError("distance matrix has negative entries")
        if np.any(np.diag(entries) != 0):
            raise ValueError("distance matrix diagonal must be zero")
        if not np.array_equal(entries, entries.T):
            raise ValueError("distance matrix must be symmetric")
        entries.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "entries", entries)

    @property
    def n(self):
        return len(self.ids)

    def index(self, site_id):
        return self.ids.index(site_id)

    def row(self, site_id):
        return dict(zip(self.ids, self.entries[self.index(site_id)]))


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    return float(haversine_matrix([[a.lat, a.lon]], [[b.lat, b.lon]])[0, 0])


def haversine_matrix(A, B):
    """Great-circle distances (km) between every row of ``A`` and ``B``.

    Both inputs are ``(n, >=2)`` arrays whose first two columns are latitude
    and longitude in degrees.
    """
    A = np.radians(np.asarray(A, dtype=np.float64)[:, :2])
    B = np.radians(np.asarray(B, dtype=np.float64)[:, :2])
    lat1, lon1 = A[:, 0:1], A[:, 1:2]
    lat2, lon2 = B[None, :, 0], B[None, :, 1]
    h = (
        np.sin((lat2 - lat1) / 2.0) ** 2
        + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def check_unique_ids(sites: Sequence[Site]):
    seen = set()
    for s in sites:
        if s.id in seen:
            raise ValueError(f"duplicate site id {s.id!r}")
        seen.add(s.id)


def sites_to_arrays(sites: Sequence[Site], covariate=False):
    """Return ``(X, y)`` with X rows ``[lat, lon]`` (plus covariate if asked)."""
    if covariate:
        missing = [s.id for s in sites if s.covariate is None]
        if missing:
            raise ValueError(f"sites without covariate: {', '.join(missing[:10])}")
        X = np.array([[s.lat, s.lon, s.covariate] for s in sites], dtype=np.float64)
    else:
        X = np.array([[s.lat, s.lon] for s in sites], dtype=np.float64)
    y = np.array([s.value for s in sites], dtype=np.float64)
    return X.reshape(len(sites), 3 if covariate else 2), y


def pairwise_distances(sites: Sequence[Site]) -> DistanceMatrix:
    if not sites:
        raise ValueError("need at least one site")
    check_unique_ids(sites)
    X, _ = sites_to_arrays(sites)
    D = haversine_matrix(X, X)
    # Exact symmetry and zero diagonal regardless of round-off.
    D = np.triu(D, 1)
    D = D + D.T
    return DistanceMatrix(tuple(s.id for s in sites), D)


def _axis(lo, hi, cell):
    steps = (hi - lo) / cell
    n = int(math.ceil(steps - 1e-9))
    values = [lo + i * cell for i in range(n)] + [hi]
    if abs(steps - round(steps)) <= 1e-9:
        # Exact multiple: evenly spaced including both corners.
        values = list(np.linspace(lo, hi, int(round(steps)) + 1))
    return values


def build_grid(bbox, cell_deg):
    """Regular lattice over ``bbox = (lower_left, upper_right)``.

    Points come in row-major order: latitude descending, longitude
    ascending. Both corners are always included; when the box is not a
    multiple of ``cell_deg`` the last row/column is closer than one cell.
    """
    lower, upper = bbox
    if not cell_deg > 0:
        raise ValueError(f"cell size must be positive, got {cell_deg}")
    if not (lower.lat < upper.lat and lower.lon < upper.lon):
        raise ValueError("bbox lower corner must be strictly below and left of upper")
    lats = _axis(lower.lat, upper.lat, cell_deg)[::-1]
    lons = _axis(lower.lon, upper.lon, cell_deg)
    return [GeoPoint(float(la), float(lo)) for la in lats for lo in lons]


def dedupe_mean(sites: Sequence[Site]):
    """Merge sites sharing exact coordinates into one site with mean value.

    The merged id joins the member ids (sorted) with ``+``; the covariate is
    averaged when every member has one.
    """
    groups = {}
    for s in sites:
        groups.setdefault((s.lat, s.lon), []).append(s)
    merged = []
    for members in groups.values():
        if len(members) == 1:
            merged.append(members[0])
            continue
        members = sorted(members, key=lambda s: s.id)
        covs = [m.covariate for m in members]
        cov = None if any(c is None for c in covs) else math.fsum(covs) / len(covs)
        merged.append(
            Site(
                "+".join(m.id for m in members),
                members[0].point,
                math.fsum(m.value for m in members) / len(members),
                cov,
            )
        )
    return merged
