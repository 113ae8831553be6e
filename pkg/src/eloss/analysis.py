"""Experiment analytics: PCA of layer features, curve smoothing and log-fit R^2."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, InvalidData
from .neighbors import as_points


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray  # (c, d), orthonormal rows
    explained_variance: np.ndarray  # (c,), descending
    projected: np.ndarray  # (n, c)
    mean: np.ndarray  # (d,)

    def transform(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.mean) @ self.components.T

    def reconstruct(self, projected) -> np.ndarray:
        return np.asarray(projected) @ self.components + self.mean


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # Make the first clearly nonzero coordinate of each row positive.
    out = vectors.copy()
    for row in out:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return out


def pca(points, c: int) -> PcaResult:
    """Principal components from the eigendecomposition of the sample covariance.

    The covariance uses ``n - 1`` in the denominator, so the explained
    variances sum to the total sample variance when ``c = d``.
    """
    x = as_points(points)
    n, d = x.shape
    if n < 2:
        raise InvalidArgument("PCA needs at least 2 samples")
    if int(c) != c or c < 1 or c > min(n, d):
        raise InvalidArgument(f"c must be in [1, {min(n, d)}], got {c}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    if np.trace(cov) <= 0:
        raise InvalidData("input has zero variance; principal components are undefined")
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1][:c]
    components = _fix_signs(evecs[:, order].T)
    variances = np.clip(evals[order], 0.0, None)
    return PcaResult(components, variances, centered @ components.T, mean)


def smooth_curve(values, window: int = 5) -> list:
    """Centered moving average; windows are truncated at the ends.

    Each output point is the mean of the input points within ``window // 2``
    indices of it.
    """
    v = np.asarray(values, dtype=np.float64).reshape(-1)
    if int(window) != window or window < 1 or window % 2 == 0:
        raise InvalidArgument(f"window must be a positive odd integer, got {window}")
    if window > v.size:
        raise InvalidArgument(f"window {window} is longer than the curve ({v.size} points)")
    half = window // 2
    out = []
    for i, center in enumerate(v):
        lo, hi = max(0, i - half), min(v.size, i + half + 1)
        # mean taken around the center value: constants and ramps come back exactly
        out.append(float(center + math.fsum(v[lo:hi] - center) / (hi - lo)))
    return out


@dataclass(frozen=True)
class CurveFit:
    a: float
    b: float
    r_squared: float


def log_regression_r2(curve) -> CurveFit:
    """Least-squares fit of ``y_t = a*log(t+1) + b`` over ``t = 0..T-1``."""
    y = np.asarray(curve, dtype=np.float64).reshape(-1)
    if y.size < 3:
        raise InvalidArgument(f"need at least 3 points for a log fit, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise InvalidData("curve contains NaN or Inf")
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        raise InvalidData("constant curve: R^2 is undefined")
    t = np.log(np.arange(y.size) + 1.0)
    design = np.column_stack([t, np.ones_like(t)])
    (a, b), *_ = np.linalg.lstsq(design, y, rcond=None)
    ss_res = float(np.sum((y - design @ np.array([a, b])) ** 2))
    return CurveFit(float(a), float(b), 1.0 - ss_res / ss_tot)


def mean_accuracy(curve) -> float:
    v = np.asarray(curve, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise InvalidArgument("mean of an empty curve")
    return float(v.mean())


@dataclass(frozen=True)
class Trajectory:
    projections: list  # one (n, c) array per layer
    centroids: np.ndarray  # (layers, c)
    basis: PcaResult


def layer_trajectory(layer_activations, c: int = 2) -> Trajectory:
    """Project every layer onto one PCA basis fit on all layers together."""
    acts = [as_points(a) for a in layer_activations]
    if len(acts) < 2:
        raise InvalidArgument(f"need at least 2 layers, got {len(acts)}")
    widths = {a.shape[1] for a in acts}
    if len(widths) != 1:
        raise InvalidArgument(f"layers must share a width for a common basis, got widths {sorted(widths)}")
    basis = pca(np.vstack(acts), c)
    projections = [basis.transform(a) for a in acts]
    centroids = np.array([p.mean(axis=0) for p in projections])
    return Trajectory(projections, centroids, basis)
