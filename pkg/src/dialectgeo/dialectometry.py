"""Acoustic dialectometry: DTW word distances, site distances, classical MDS."""

import math
from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin

from .geo import DistanceMatrix


@dataclass(frozen=True)
class SiteWordList:
    """Feature sequences for one site, aligned by word index.

    ``words[i]`` is a ``(T, D)`` array, or None when the recording is missing.
    """

    site_id: str
    words: tuple

    def __post_init__(self):
        words = []
        for i, w in enumerate(self.words):
            if w is None:
                words.append(None)
                continue
            w = np.atleast_2d(np.asarray(w, dtype=np.float64))
            if w.shape[0] < 1 or w.shape[1] < 1:
                raise ValueError(f"site {self.site_id!r} word {i}: empty feature sequence")
            if not np.all(np.isfinite(w)):
                raise ValueError(f"site {self.site_id!r} word {i}: non-finite features")
            words.append(w)
        object.__setattr__(self, "words", tuple(words))


@numba.njit(cache=True)
def _dtw_kernel(cost):
    n, m = cost.shape
    acc = np.empty((n, m))
    length = np.empty((n, m), dtype=np.int64)
    for i in range(n):
        for j in range(m):
            c = cost[i, j]
            if i == 0 and j == 0:
                acc[i, j] = c
                length[i, j] = 1
                continue
            best = np.inf
            best_len = 0
            # Predecessors: diagonal, vertical, horizontal. Equal costs keep the longer path.
            if i > 0 and j > 0:
                best = acc[i - 1, j - 1]
                best_len = length[i - 1, j - 1]
            if i > 0:
                v = acc[i - 1, j]
                if v < best or (v == best and length[i - 1, j] > best_len):
                    best = v
                    best_len = length[i - 1, j]
            if j > 0:
                v = acc[i, j - 1]
                if v < best or (v == best and length[i, j - 1] > best_len):
                    best = v
                    best_len = length[i, j - 1]
            acc[i, j] = best + c
            length[i, j] = best_len + 1
    return acc[n - 1, m - 1], length[n - 1, m - 1]


def dtw_path_cost(x, y):
    """Return ``(total_cost, path_length)`` of the minimum-cost warping path.

    Among paths of equal minimal cost the longest is taken.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != y.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}"
        )
    cost = cdist(x, y, metric="euclidean")
    total, length = _dtw_kernel(cost)
    return float(total), int(length)


def _as_frames(seq):
    seq = np.asarray(seq, dtype=np.float64)
    # A flat sequence is T scalar frames.
    return seq.reshape(-1, 1) if seq.ndim == 1 else seq


def dtw_distance(x, y) -> float:
    """Path-length normalised DTW distance with Euclidean frame costs.

    Steps are diagonal, down and right with unit weights. The cost of the
    optimal path is divided by the number of cells on that path.
    """
    total, length = dtw_path_cost(_as_frames(x), _as_frames(y))
    return total / length


def site_distance(X: SiteWordList, Y: SiteWordList) -> float:
    """Mean word-level DTW distance over the words both sites recorded."""
    if len(X.words) != len(Y.words):
        raise ValueError(
            f"sites {X.site_id!r} and {Y.site_id!r} have {len(X.words)} and {len(Y.words)} words"
        )
    dists = [
        dtw_distance(a, b)
        for a, b in zip(X.words, Y.words)
        if a is not None and b is not None
    ]
    if not dists:
        raise ValueError(f"sites {X.site_id!r} and {Y.site_id!r} share no recorded words")
    return math.fsum(dists) / len(dists)


def linguistic_distance_matrix(sites: Sequence[SiteWordList]) -> DistanceMatrix:
    if len(sites) < 2:
        raise ValueError("need at least 2 sites")
    dims = {w.shape[1] for s in sites for w in s.words if w is not None}
    if len(dims) > 1:
        raise ValueError(f"inconsistent feature dimensions across sites: {sorted(dims)}")
    n = len(sites)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = site_distance(sites[i], sites[j])
    return DistanceMatrix(tuple(s.site_id for s in sites), D)


def stress(D, coords) -> float:
    """Normalised stress over pairs i < j; zero for an all-zero matrix."""
    D = np.asarray(D, dtype=np.float64)
    iu = np.triu_indices(D.shape[0], k=1)
    embedded = cdist(coords, coords)[iu]
    target = D[iu]
    denom = np.sum(target**2)
    if denom == 0:
        return 0.0 if np.allclose(embedded, 0) else math.inf
    return float(np.sqrt(np.sum((target - embedded) ** 2) / denom))


class ClassicalMDS(TransformerMixin, BaseEstimator):
    """Torgerson classical scaling of a precomputed distance matrix.

    Attributes
    ----------
    embedding_ : ndarray of shape (n, n_components)
    eigenvalues_ : ndarray
        Top eigenvalues of the double-centred matrix, negatives clamped to 0.
    stress_ : float
    """

    def __init__(self, n_components=3, tol=1e-10):
        self.n_components = n_components
        self.tol = tol

    def fit(self, X, y=None):
        D = np.asarray(X, dtype=np.float64)
        if D.ndim != 2 or D.shape[0] != D.shape[1]:
            raise ValueError("ClassicalMDS expects a square distance matrix")
        n = D.shape[0]
        k = int(self.n_components)
        if not 1 <= k <= n:
            raise ValueError(f"n_components must be in [1, {n}], got {k}")
        J = np.eye(n) - np.full((n, n), 1.0 / n)
        B = -0.5 * J @ (D**2) @ J
        B = (B + B.T) / 2.0
        vals, vecs = np.linalg.eigh(B)
        order = np.argsort(vals)[::-1][:k]
        vals, vecs = vals[order], vecs[:, order]
        vals = np.where(vals > self.tol * max(abs(vals).max(), 1.0), vals, 0.0)
        # Deterministic orientation: largest-magnitude loading is positive.
        flip = np.sign(vecs[np.argmax(np.abs(vecs), axis=0), np.arange(k)])
        vecs = vecs * np.where(flip == 0, 1.0, flip)
        coords = vecs * np.sqrt(vals)
        coords -= coords.mean(axis=0)
        self.eigenvalues_ = vals
        self.embedding_ = coords
        self.stress_ = stress(D, coords)
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).embedding_


@dataclass(frozen=True)
class MdsEmbedding:
    ids: tuple
    coords: np.ndarray
    stress: float


def classical_mds(D: DistanceMatrix, k: int = 3) -> MdsEmbedding:
    if k > D.n:
        raise ValueError(f"k={k} exceeds the {D.n} points")
    mds = ClassicalMDS(n_components=k).fit(D.entries)
    return MdsEmbedding(D.ids, mds.embedding_, mds.stress_)


def mds_to_rgb(emb: MdsEmbedding):
    """Min-max scale each of the three dimensions to a 0-255 byte.

    Rounding is half-up; a constant dimension maps to 128.
    """
    coords = np.asarray(emb.coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 3:
        raise ValueError("RGB mapping needs a 3-dimensional embedding")
    out = np.empty(coords.shape, dtype=np.int64)
    for c in range(3):
        col = coords[:, c]
        lo, hi = col.min(), col.max()
        if hi == lo:
            out[:, c] = 128
        else:
            out[:, c] = np.floor((col - lo) / (hi - lo) * 255.0 + 0.5)
    return [tuple(int(v) for v in row) for row in out]
