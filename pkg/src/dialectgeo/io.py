"""CSV/GeoJSON readers and writers for sites, features, segments and results."""

import csv
import json
import math
from collections import OrderedDict
from pathlib import Path

import numpy as np

from .dialectometry import SiteWordList
from .geo import DistanceMatrix, GeoPoint, Site, check_unique_ids
from .text_metrics import ScoredSegment


class InputError(ValueError):
    """Malformed input file; the message names the file and line."""


def _float(text, what, where):
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{where}: {what} {text!r} is not a number") from None
    if not math.isfinite(value):
        raise InputError(f"{where}: {what} {text!r} is not finite")
    return value


def read_sites(path):
    """Read ``id,lat,lon,value[,covariate]``; an empty covariate means missing."""
    path = Path(path)
    sites = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("id", "lat", "lon", "value"):
            if col not in header:
                raise InputError(f"{path}: header lacks required column {col!r}")
        for row in reader:
            where = f"{path}:{reader.line_num}"
            lat = _float(row["lat"], "lat", where)
            lon = _float(row["lon"], "lon", where)
            value = _float(row["value"], "value", where)
            raw_cov = (row.get("covariate") or "").strip()
            cov = _float(raw_cov, "covariate", where) if raw_cov else None
            try:
                point = GeoPoint(lat, lon)
            except ValueError as exc:
                raise InputError(f"{where}: {exc}") from None
            sites.append(Site(row["id"], point, value, cov))
    try:
        check_unique_ids(sites)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    return sites


def read_feature_csv(path):
    try:
        frames = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if frames.size == 0:
        raise InputError(f"{path}: no feature frames")
    return frames


def read_manifest(path):
    """Load ``site_id,word_index,path`` rows into a list of SiteWordList.

    Relative feature paths resolve against the manifest's directory. Word
    indices absent for a site become missing words. Every file must share
    one feature dimension.
    """
    path = Path(path)
    entries = OrderedDict()
    max_index = -1
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in ("site_id", "word_index", "path"):
            if col not in (reader.fieldnames or []):
                raise InputError(f"{path}: header lacks required column {col!r}")
        for row in reader:
            where = f"{path}:{reader.line_num}"
            try:
                idx = int(row["word_index"])
            except ValueError:
                raise InputError(f"{where}: word_index {row['word_index']!r} is not an integer") from None
            if idx < 0:
                raise InputError(f"{where}: negative word_index")
            feature_path = Path(row["path"])
            if not feature_path.is_absolute():
                feature_path = path.parent / feature_path
            entries.setdefault(row["site_id"], {})[idx] = feature_path
            max_index = max(max_index, idx)
    dims = {}
    sites = []
    for site_id, words in entries.items():
        seqs = []
        for i in range(max_index + 1):
            if i not in words:
                seqs.append(None)
                continue
            frames = read_feature_csv(words[i])
            dims.setdefault(frames.shape[1], words[i])
            seqs.append(frames)
        sites.append(SiteWordList(site_id, tuple(seqs)))
    if len(dims) > 1:
        detail = ", ".join(f"D={d} in {p}" for d, p in sorted(dims.items()))
        raise InputError(f"inconsistent feature dimensions: {detail}")
    return sites


def read_segments(path):
    """Read ``site_id,segment_id,hypothesis,ref_0[,ref_1,...]``.

    Returns an ordered mapping of site id to its list of segments; empty
    reference cells are ignored.
    """
    path = Path(path)
    by_site = OrderedDict()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:3] != ["site_id", "segment_id", "hypothesis"]:
            raise InputError(f"{path}: header must start with site_id,segment_id,hypothesis")
        ref_cols = [i for i, h in enumerate(header) if h.startswith("ref_")]
        for row in reader:
            where = f"{path}:{reader.line_num}"
            refs = tuple(row[i] for i in ref_cols if i < len(row) and row[i] != "")
            if not refs:
                raise InputError(f"{where}: segment has no reference")
            by_site.setdefault(row[0], []).append(ScoredSegment(row[2], refs))
    return by_site


def read_distance_matrix(path):
    """Square CSV with a header row of ids and the id in the first column."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    ids = rows[0][1:]
    try:
        entries = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None
    if [r[0] for r in rows[1:]] != ids:
        raise InputError(f"{path}: row labels do not match the header")
    try:
        return DistanceMatrix(tuple(ids), entries)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def distance_matrix_rows(D: DistanceMatrix):
    yield ("id",) + D.ids
    for sid, row in zip(D.ids, D.entries):
        yield (sid,) + tuple(repr(float(v)) for v in row)


def fmt(value):
    """Stable text form of a number for CSV output."""
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def write_csv(path, rows):
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow(row)


def write_geojson(path, points, properties):
    """Point FeatureCollection; ``properties`` is a list of dicts aligned with points."""
    features = [
        {
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [p.lon, p.lat]},
            "properties": props,
        }
        for p, props in zip(points, properties)
    ]
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=1)
        fh.write("\n")
