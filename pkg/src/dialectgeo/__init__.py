"""Geostatistical interpolation and acoustic dialectometry for per-site scores."""

from .dialectometry import (
    ClassicalMDS,
    MdsEmbedding,
    SiteWordList,
    classical_mds,
    dtw_distance,
    linguistic_distance_matrix,
    mds_to_rgb,
    site_distance,
)
from .evaluation import (
    LearningCurve,
    SplitSpec,
    grid_search,
    learning_curve,
    pearson,
    rmse,
    similarity_covariate,
    spearman,
    split_sites,
)
from .geo import DistanceMatrix, GeoPoint, Site, build_grid, haversine_km, pairwise_distances
from .interpolation import (
    IDWRegressor,
    IdwParams,
    NearestNeighborRegressor,
    idw_interpolate,
    nn_interpolate,
)
from .kriging import (
    DriftModel,
    KrigingPrediction,
    OrdinaryKriging,
    RegressionKriging,
    fit_drift,
    ordinary_krige,
    regression_krige,
)
from .text_metrics import ScoredSegment, bleu, chrf
from .variogram import (
    EmpiricalVariogram,
    VariogramModel,
    empirical_variogram,
    fit_variogram_model,
    model_gamma,
)

__all__ = [
    "bleu",
    "build_grid",
    "chrf",
    "classical_mds",
    "ClassicalMDS",
    "DistanceMatrix",
    "DriftModel",
    "dtw_distance",
    "empirical_variogram",
    "EmpiricalVariogram",
    "fit_drift",
    "fit_variogram_model",
    "GeoPoint",
    "grid_search",
    "haversine_km",
    "idw_interpolate",
    "IdwParams",
    "IDWRegressor",
    "KrigingPrediction",
    "learning_curve",
    "LearningCurve",
    "linguistic_distance_matrix",
    "mds_to_rgb",
    "MdsEmbedding",
    "model_gamma",
    "NearestNeighborRegressor",
    "nn_interpolate",
    "ordinary_krige",
    "OrdinaryKriging",
    "pairwise_distances",
    "pearson",
    "regression_krige",
    "RegressionKriging",
    "rmse",
    "ScoredSegment",
    "similarity_covariate",
    "Site",
    "site_distance",
    "SiteWordList",
    "spearman",
    "split_sites",
    "SplitSpec",
    "VariogramModel",
]

__version__ = "0.1.0"
