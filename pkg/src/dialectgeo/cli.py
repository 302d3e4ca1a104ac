"""Command-line entry point.

Every subcommand reads plain CSV and writes CSV/GeoJSON into ``--out-dir``.
A ``--config`` file of ``key=value`` lines supplies defaults for any flag
(keys use the long flag name without dashes, e.g. ``cell_deg=0.1``);
flags given on the command line win.
"""

import argparse
import json
import logging
import statistics
import sys
from pathlib import Path

import numpy as np

from . import evaluation as ev
from .dialectometry import classical_mds, linguistic_distance_matrix, mds_to_rgb
from .geo import GeoPoint, build_grid, dedupe_mean, pairwise_distances, sites_to_arrays
from .interpolation import IDWRegressor, NearestNeighborRegressor
from .io import (
    InputError,
    distance_matrix_rows,
    fmt,
    read_distance_matrix,
    read_manifest,
    read_segments,
    read_sites,
    write_csv,
    write_geojson,
)
from .kriging import OrdinaryKriging, RegressionKriging, check_training_sites
from .text_metrics import bleu, chrf
from .variogram import FAMILIES, empirical_variogram_arrays, fit_variogram

log = logging.getLogger("dialectgeo")


class UsageError(Exception):
    pass


class Outputs:
    """Tracks written files so a failed command leaves nothing behind."""

    def __init__(self, out_dir):
        self.dir = Path(out_dir)
        self.written = []

    def path(self, name):
        p = self.dir / name
        self.written.append(p)
        return p

    def cleanup(self):
        for p in self.written:
            p.unlink(missing_ok=True)


def read_config(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _parse_bool(text):
    return str(text).lower() in ("1", "true", "yes", "on")


def _load_sites(args):
    sites = read_sites(args.sites)
    if getattr(args, "dedupe", None) == "mean":
        sites = dedupe_mean(sites)
    return sites


def _grid_points(args):
    if args.targets:
        targets = read_sites(args.targets)
        return [t.point for t in targets], [t.covariate for t in targets]
    if args.bbox is None:
        raise UsageError("give either --targets or --bbox with --cell-deg")
    lat0, lon0, lat1, lon1 = args.bbox
    try:
        points = build_grid((GeoPoint(lat0, lon0), GeoPoint(lat1, lon1)), args.cell_deg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return points, [None] * len(points)


def _write_surface(out, points, values, std=None):
    rows = [("lat", "lon", "value") + (("std",) if std is not None else ())]
    props = []
    for i, (p, v) in enumerate(zip(points, values)):
        extra = (fmt(std[i]),) if std is not None else ()
        rows.append((fmt(p.lat), fmt(p.lon), fmt(v)) + extra)
        prop = {"value": float(v)}
        if std is not None:
            prop["std"] = float(std[i])
        props.append(prop)
    write_csv(out.path("grid.csv"), rows)
    write_geojson(out.path("grid.geojson"), points, props)


def cmd_interpolate(args, out):
    sites = _load_sites(args)
    points, _ = _grid_points(args)
    X, y = sites_to_arrays(sites)
    if args.method == "nn":
        model = NearestNeighborRegressor()
    elif args.method == "idw":
        model = IDWRegressor(power=args.power, n_neighbors=args.neighbors)
    else:
        check_training_sites(sites, 2)
        model = OrdinaryKriging(family=args.family)
    model.fit(X, y)
    values = model.predict([[p.lat, p.lon] for p in points])
    _write_surface(out, points, values)


def cmd_fit_variogram(args, out):
    sites = _load_sites(args)
    X, y = sites_to_arrays(sites)
    emp = empirical_variogram_arrays(X, y, n_bins=args.n_bins, max_lag_km=args.max_lag)
    write_csv(out.path("variogram.csv"), emp.to_csv_rows())
    fit = fit_variogram(emp, args.family)
    m = fit.model
    with out.path("variogram_model.json").open("w", encoding="utf-8") as fh:
        json.dump(
            {
                "family": m.family,
                "nugget": m.nugget,
                "partial_sill": m.partial_sill,
                "sill": m.sill,
                "range_km": m.range_km,
                "objective": fit.objective,
                "n_bins": len(emp),
                "max_lag_km": emp.max_lag_km,
            },
            fh,
            indent=1,
            sort_keys=True,
        )
        fh.write("\n")
    log.info("selected variogram family: %s", m.family)


def cmd_krige(args, out):
    sites = _load_sites(args)
    points, covs = _grid_points(args)
    check_training_sites(sites, 3 if args.method == "rk" else 2)
    if args.method == "rk":
        if any(c is None for c in covs):
            raise UsageError("regression kriging needs --targets with a covariate column")
        X, y = sites_to_arrays(sites, covariate=True)
        model = RegressionKriging(family=args.family).fit(X, y)
        query = [[p.lat, p.lon, c] for p, c in zip(points, covs)]
    else:
        X, y = sites_to_arrays(sites)
        model = OrdinaryKriging(family=args.family).fit(X, y)
        query = [[p.lat, p.lon] for p in points]
    values, std = model.predict(query, return_std=True)
    _write_surface(out, points, values, std)


def cmd_evaluate(args, out):
    sites = _load_sites(args)
    methods = args.methods
    spec = ev.SplitSpec(seed=args.seed)
    results = ev.evaluate_methods(sites, methods, spec)
    rows = [("metric", "method", "rmse")]
    rows += [(args.metric, r.method, fmt(r.test_rmse)) for r in results]
    write_csv(out.path("results.csv"), rows)
    params = [("method", "params", "val_rmse")]
    params += [(r.method, json.dumps(r.params, sort_keys=True), fmt(r.val_rmse)) for r in results]
    write_csv(out.path("tuned_params.csv"), params)
    if args.repeats > 1:
        scores = {m: [] for m in methods}
        for k in range(args.repeats):
            for r in ev.evaluate_methods(sites, methods, ev.SplitSpec(seed=args.seed + k)):
                scores[r.method].append(r.test_rmse)
        rows = [("metric", "method", "rmse")]
        rows += [(args.metric, m, fmt(statistics.mean(v))) for m, v in scores.items()]
        write_csv(out.path("results_mean.csv"), rows)


def cmd_learning_curve(args, out):
    sites = _load_sites(args)
    curve = ev.learning_curve(
        sites, args.method, args.fractions, reps=args.reps, seed=args.seed
    )
    write_csv(out.path("curve.csv"), curve.to_csv_rows())
    for p in curve.points:
        if not p.available:
            log.warning("fraction %s unavailable for %s", p.fraction, args.method)


def _linguistic(args, sites):
    if args.geographic:
        return pairwise_distances(sites), "geographic_distance_to_best"
    if args.distances:
        return read_distance_matrix(args.distances), "linguistic_distance_to_best"
    if args.features:
        return linguistic_distance_matrix(read_manifest(args.features)), "linguistic_distance_to_best"
    raise UsageError("give --features, --distances or --geographic")


def cmd_correlate(args, out):
    sites = _load_sites(args)
    if len(sites) < 3:
        raise UsageError("correlation needs at least 3 scored sites")
    D, covariate_name = _linguistic(args, sites)
    missing = sorted(set(s.id for s in sites) - set(D.ids))
    if missing:
        raise UsageError(f"scored sites without distances: {', '.join(missing)}")
    scores = {s.id: s.value for s in sites}
    best, cov = ev.similarity_covariate(D, scores)
    ids = [s.id for s in sites]
    x = [cov[i] for i in ids]
    y = [scores[i] for i in ids]
    rows = [("metric", "covariate", "best_site", "n", "pearson", "spearman")]
    rows.append((args.metric, covariate_name, best, len(ids), fmt(ev.pearson(x, y)), fmt(ev.spearman(x, y))))
    if args.permutation_control:
        rng = np.random.default_rng(np.random.SeedSequence(args.seed))
        y_perm = list(rng.permutation(y))
        rows.append(
            (f"{args.metric}_permuted", covariate_name, best, len(ids),
             fmt(ev.pearson(x, y_perm)), fmt(ev.spearman(x, y_perm)))
        )
    write_csv(out.path("correlation.csv"), rows)


def cmd_mds_map(args, out):
    if args.rgb and args.k != 3:
        raise UsageError("RGB output needs --k 3")
    words = read_manifest(args.features)
    D = linguistic_distance_matrix(words)
    emb = classical_mds(D, args.k)
    write_csv(out.path("distances.csv"), distance_matrix_rows(D))
    rows = [("site_id",) + tuple(f"dim_{i + 1}" for i in range(args.k))]
    rows += [(sid,) + tuple(fmt(v) for v in row) for sid, row in zip(emb.ids, emb.coords)]
    write_csv(out.path("embedding.csv"), rows)
    if args.rgb:
        located = {}
        if args.sites:
            located = {s.id: s.point for s in read_sites(args.sites)}
        rows = [("site_id", "lat", "lon", "r", "g", "b")]
        for sid, (r, g, b) in zip(emb.ids, mds_to_rgb(emb)):
            p = located.get(sid)
            rows.append((sid, fmt(p.lat) if p else "", fmt(p.lon) if p else "", r, g, b))
        write_csv(out.path("rgb.csv"), rows)
    with out.path("run.log").open("w", encoding="utf-8") as fh:
        fh.write(f"sites={D.n}\nk={args.k}\nstress={emb.stress!r}\n")
    log.info("MDS stress: %.6g", emb.stress)


def cmd_score(args, out):
    by_site = read_segments(args.segments)
    rows = [("site_id", "chrf2", "bleu")]
    for site_id, segments in by_site.items():
        rows.append((site_id, fmt(chrf(segments, aggregate=args.chrf_aggregate)), fmt(bleu(segments))))
    write_csv(out.path("scores.csv"), rows)


def _fractions(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _methods(text):
    methods = [m.strip() for m in str(text).split(",") if m.strip()]
    bad = [m for m in methods if m not in ev.METHODS]
    if bad:
        raise argparse.ArgumentTypeError(
            f"unknown method(s) {', '.join(bad)}; valid methods: {', '.join(ev.METHODS)}"
        )
    return methods


def _optional_int(text):
    return None if str(text).lower() in ("", "none", "all") else int(text)


def _family(text):
    if text not in FAMILIES + ("auto",):
        raise argparse.ArgumentTypeError(f"family must be one of auto, {', '.join(FAMILIES)}")
    return text


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out-dir", default=".")
    common.add_argument("--config", help="key=value file providing flag defaults")

    parser = argparse.ArgumentParser(prog="dialectgeo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    def sites_arg(p, dedupe=True):
        p.add_argument("sites", help="site CSV: id,lat,lon,value[,covariate]")
        if dedupe:
            p.add_argument("--dedupe", choices=["none", "mean"], default="none",
                           help="merge sites sharing coordinates")

    def grid_args(p):
        p.add_argument("--bbox", type=float, nargs=4, metavar=("LAT0", "LON0", "LAT1", "LON1"))
        p.add_argument("--cell-deg", type=float, default=0.1)
        p.add_argument("--targets", help="target CSV (id,lat,lon,value[,covariate]) instead of a grid")

    p = add("interpolate", cmd_interpolate, "interpolate site values onto a grid")
    sites_arg(p)
    grid_args(p)
    p.add_argument("--method", choices=["nn", "idw", "ok"], default="idw")
    p.add_argument("--power", type=float, default=2.0)
    p.add_argument("--neighbors", type=_optional_int, default=None)
    p.add_argument("--family", type=_family, default="auto")

    p = add("fit-variogram", cmd_fit_variogram, "empirical variogram and fitted model")
    sites_arg(p)
    p.add_argument("--n-bins", type=int, default=15)
    p.add_argument("--max-lag", type=float, default=None)
    p.add_argument("--family", type=_family, default="auto")

    p = add("krige", cmd_krige, "ordinary or regression kriging with prediction std")
    sites_arg(p)
    grid_args(p)
    p.add_argument("--method", choices=["ok", "rk"], default="ok")
    p.add_argument("--family", type=_family, default="auto")

    p = add("evaluate", cmd_evaluate, "80/10/10 split, grid search, test RMSE per method")
    sites_arg(p)
    p.add_argument("--methods", type=_methods, default="nn,idw,rk")
    p.add_argument("--metric", default="value", help="label for the metric column")
    p.add_argument("--repeats", type=int, default=1,
                   help="also average test RMSE over this many consecutive seeds")

    p = add("learning-curve", cmd_learning_curve, "test RMSE versus training fraction")
    sites_arg(p)
    p.add_argument("--method", choices=list(ev.METHODS), default="idw")
    p.add_argument("--fractions", type=_fractions, default="0.1,0.25,0.5,0.75,1.0")
    p.add_argument("--reps", type=int, default=100)

    p = add("mds-map", cmd_mds_map, "linguistic distances, classical MDS and RGB colours")
    p.add_argument("features", help="manifest CSV: site_id,word_index,path")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--rgb", type=_parse_bool, nargs="?", const=True, default=True)
    p.add_argument("--sites", help="site CSV supplying lat/lon for rgb.csv")

    p = add("correlate", cmd_correlate, "correlate scores with distance to the best site")
    sites_arg(p)
    p.add_argument("--features", help="feature manifest for DTW distances")
    p.add_argument("--distances", help="precomputed distance matrix CSV")
    p.add_argument("--geographic", type=_parse_bool, nargs="?", const=True, default=False,
                   help="use great-circle distance instead of linguistic distance")
    p.add_argument("--metric", default="value")
    p.add_argument("--permutation-control", type=_parse_bool, nargs="?", const=True, default=False)

    p = add("score", cmd_score, "per-site chrF2 and BLEU of transcriptions")
    p.add_argument("segments", help="CSV: site_id,segment_id,hypothesis,ref_0[,ref_1...]")
    p.add_argument("--chrf-aggregate", choices=["sentence", "corpus"], default="sentence")
    parser.subcommands = sub.choices
    return parser


def _config_defaults(sub, config, source):
    actions = {a.dest: a for a in sub._actions}
    unknown = sorted(set(config) - set(actions))
    if unknown:
        raise UsageError(f"{source}: unknown keys {', '.join(unknown)}")
    defaults = {}
    for key, value in config.items():
        action = actions[key]
        if isinstance(action.nargs, int) and action.nargs > 1:
            parts = value.replace(",", " ").split()
            convert = action.type or str
            defaults[key] = [convert(v) for v in parts]
        else:
            # String defaults pass through the argument's type converter.
            defaults[key] = value
    return defaults


def parse_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser.subcommands[args.command]
        sub.set_defaults(**_config_defaults(sub, read_config(args.config), args.config))
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"dialectgeo: error: {exc}", file=sys.stderr)
        return 2
    out = Outputs(args.out_dir)
    try:
        out.dir.mkdir(parents=True, exist_ok=True)
        args.func(args, out)
    except UsageError as exc:
        out.cleanup()
        print(f"dialectgeo {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (InputError, ValueError, OSError) as exc:
        out.cleanup()
        print(f"dialectgeo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
