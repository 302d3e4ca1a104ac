import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dialectgeo.geo import GeoPoint, Site  # noqa: E402


def make_site(site_id, lat, lon, value, covariate=None):
    return Site(site_id, GeoPoint(lat, lon), value, covariate)


def random_sites(rng, n, box=(40.0, 10.0, 44.0, 14.0), covariate=False):
    lat = rng.uniform(box[0], box[2], n)
    lon = rng.uniform(box[1], box[3], n)
    values = rng.normal(0.0, 3.0, n)
    cov = rng.normal(0.0, 1.0, n) if covariate else [None] * n
    return [make_site(f"s{i:02d}", la, lo, v, c) for i, (la, lo, v, c) in enumerate(zip(lat, lon, values, cov))]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
