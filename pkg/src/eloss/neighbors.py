"""Exact Euclidean k-nearest-neighbor queries.

Both entry points return the same ``NeighborDistances`` for the same input,
bit for bit: distances always come from :func:`_sq_dist_to`, which
accumulates squared coordinate differences one axis at a time, so the
result does not depend on which candidate set a point was compared in.
Ties are broken by ascending point index.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgument, InvalidData

# Above this many points (and at low dimension) the tree prefilter pays off.
TREE_MIN_POINTS = 1024
TREE_MAX_DIM = 16
_CHUNK_ELEMS = 4_000_000


@dataclass(frozen=True)
class NeighborDistances:
    dist: np.ndarray  # (n, k) ascending
    idx: np.ndarray  # (n, k) int64

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def k(self) -> int:
        return self.dist.shape[1]

    @property
    def kth(self) -> np.ndarray:
        """Distance to the k-th neighbor of every point."""
        return self.dist[:, -1]


def as_points(points) -> np.ndarray:
    """Coerce ``points`` into a finite float64 ``(n, d)`` array.

    1-D input is read as ``n`` scalar samples.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise InvalidArgument(f"expected an (n, d) sample matrix, got shape {x.shape}")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise InvalidArgument(f"empty sample matrix of shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidData("sample matrix contains NaN or Inf")
    return x


def _check_k(n: int, k: int) -> None:
    if int(k) != k or k < 1:
        raise InvalidArgument(f"k must be a positive integer, got {k!r}")
    if k >= n:
        raise InvalidArgument(f"k={k} requires at least k+1 points, got n={n}")


def _sq_dist_to(x: np.ndarray, rows, query: np.ndarray) -> np.ndarray:
    # Fixed per-axis accumulation order; keep every caller on this path.
    sub = x[rows]
    acc = (sub[..., 0] - query[..., 0]) ** 2
    for c in range(1, x.shape[1]):
        acc = acc + (sub[..., c] - query[..., c]) ** 2
    return acc


def brute_force_knn(points, k: int) -> NeighborDistances:
    """All-pairs reference search, one query row at a time.

    Slow on purpose: this is the oracle that :func:`knn_distances` is
    tested against.
    """
    x = as_points(points)
    n = x.shape[0]
    _check_k(n, k)
    everyone = np.arange(n)
    dist = np.empty((n, k))
    idx = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        d = np.sqrt(_sq_dist_to(x, everyone, x[i]))
        ranked = sorted((float(d[j]), j) for j in range(n) if j != i)[:k]
        dist[i] = [r[0] for r in ranked]
        idx[i] = [r[1] for r in ranked]
    return NeighborDistances(dist, idx)


def _dense_knn(x: np.ndarray, k: int) -> NeighborDistances:
    n = x.shape[0]
    dist = np.empty((n, k))
    idx = np.empty((n, k), dtype=np.int64)
    everyone = np.arange(n)
    step = max(1, _CHUNK_ELEMS // n)
    for start in range(0, n, step):
        rows = np.arange(start, min(n, start + step))
        d = np.sqrt(_sq_dist_to(x, everyone[None, :], x[rows][:, None, :]))
        d[np.arange(len(rows)), rows] = np.inf  # drop self, keep duplicates
        # a stable sort keeps equal distances in index order
        order = np.argsort(d, axis=1, kind="stable")[:, :k]
        idx[rows] = order
        dist[rows] = np.take_along_axis(d, order, axis=1)
    return NeighborDistances(dist, idx)


def _tree_knn(x: np.ndarray, k: int) -> NeighborDistances:
    n = x.shape[0]
    tree = cKDTree(x)
    # The (k+1)-th tree distance bounds the true k-th non-self distance;
    # widen it slightly so rounding never drops a tied candidate.
    rough, _ = tree.query(x, k=k + 1)
    radius = rough[:, -1] * (1 + 1e-9) + 1e-300
    candidates = tree.query_ball_point(x, radius)
    dist = np.empty((n, k))
    idx = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        cand = np.asarray(candidates[i], dtype=np.int64)
        cand = cand[cand != i]
        d = np.sqrt(_sq_dist_to(x, cand, x[i]))
        order = np.lexsort((cand, d))[:k]
        dist[i] = d[order]
        idx[i] = cand[order]
    return NeighborDistances(dist, idx)


def knn_distances(points, k: int) -> NeighborDistances:
    """Exact k-nearest neighbors of every row of ``points`` (self excluded).

    Parameters
    ----------
    points : array_like, shape (n, d)
    k : int
        Neighbor order, ``1 <= k <= n - 1``.

    Returns
    -------
    NeighborDistances
        ``dist[i, j]`` is the distance from row ``i`` to its ``(j+1)``-th
        nearest neighbor and ``idx[i, j]`` that neighbor's row. Equal
        distances are ordered by ascending row index; duplicate points show
        up with distance 0.
    """
    x = as_points(points)
    n, d = x.shape
    _check_k(n, k)
    if n >= TREE_MIN_POINTS and d <= TREE_MAX_DIM:
        return _tree_knn(x, k)
    return _dense_knn(x, k)
