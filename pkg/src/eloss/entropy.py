"""Nearest-neighbor differential entropy estimators (nats) and their gradient."""

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateSampleError, InvalidArgument
from .neighbors import NeighborDistances, as_points, knn_distances

EULER_GAMMA = 0.57721566490153286061

# Asymptotic coefficients of digamma in powers of 1/x^2, through x^-12.
_DIGAMMA_SERIES = (
    -1.0 / 12,
    1.0 / 120,
    -1.0 / 252,
    1.0 / 240,
    -1.0 / 132,
    691.0 / 32760,
)


def digamma(x: float) -> float:
    """Digamma function for ``x > 0``.

    Shifts the argument up to at least 6 with psi(x) = psi(x+1) - 1/x, then
    sums the asymptotic series. Absolute error stays below 1e-12 there.
    """
    x = float(x)
    if not x > 0 or not math.isfinite(x):
        raise InvalidArgument(f"digamma is only defined here for finite x > 0, got {x}")
    shift = 0.0
    while x < 6.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = 0.0
    for coef in reversed(_DIGAMMA_SERIES):
        tail = (tail + coef) * inv2
    return shift + math.log(x) - 0.5 / x + tail


def log_unit_ball_volume(d: int) -> float:
    if int(d) != d or d < 1:
        raise InvalidArgument(f"dimension must be a positive integer, got {d!r}")
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in ``d`` dimensions, pi^(d/2) / Gamma(d/2 + 1)."""
    if int(d) != d or d < 1:
        raise InvalidArgument(f"dimension must be a positive integer, got {d!r}")
    return math.pi ** (0.5 * d) / math.gamma(0.5 * d + 1.0)


@dataclass(frozen=True)
class Jitter:
    """Break duplicate points by adding centered uniform noise.

    ``sigma`` is the half-width of the noise; ``None`` means 1e-10 times the
    largest absolute coordinate. Jitter is only applied to samples that
    actually contain duplicates.
    """

    sigma: float | None = None
    seed: int = 0


DuplicatePolicy = Union[str, Jitter]


def parse_policy(policy) -> DuplicatePolicy:
    """Normalize ``"reject"``, ``"jitter"``, ``"jitter:<sigma>"`` or a :class:`Jitter`."""
    if isinstance(policy, Jitter):
        return policy
    if policy is None or policy == "reject":
        return "reject"
    if isinstance(policy, str) and policy.startswith("jitter"):
        _, _, sigma = policy.partition(":")
        return Jitter(float(sigma)) if sigma else Jitter()
    raise InvalidArgument(f"unknown duplicate policy {policy!r}")


def policy_name(policy) -> str:
    policy = parse_policy(policy)
    if isinstance(policy, Jitter):
        return "jitter" if policy.sigma is None else f"jitter:{policy.sigma!r}"
    return policy


@dataclass(frozen=True)
class EntropyEstimate:
    value: float  # nats
    n: int
    k: int
    d: int


@dataclass(frozen=True)
class EntropyProfile:
    layer_entropies: tuple
    deltas: tuple


def _prepared(points, k: int, duplicate_policy) -> tuple[np.ndarray, NeighborDistances]:
    """Validate, resolve duplicates per policy, and run the neighbor search."""
    x = as_points(points)
    if x.shape[0] < 2:
        raise InvalidArgument(f"entropy needs at least 2 samples, got {x.shape[0]}")
    nb = knn_distances(x, k)
    if nb.dist[:, 0].min() > 0:
        return x, nb
    policy = parse_policy(duplicate_policy)
    if policy == "reject":
        n_dup = int(np.count_nonzero(nb.dist[:, 0] == 0))
        raise DegenerateSampleError(
            f"{n_dup} of {x.shape[0]} samples coincide with another sample; "
            "nearest-neighbor distance 0 makes log r undefined "
            "(use the jitter duplicate policy to perturb them)"
        )
    sigma = policy.sigma
    if sigma is None:
        scale = float(np.abs(x).max())
        sigma = 1e-10 * (scale if scale > 0 else 1.0)
    rng = np.random.default_rng(policy.seed)
    x = x + rng.uniform(-sigma, sigma, size=x.shape)
    nb = knn_distances(x, k)
    if nb.dist[:, -1].min() <= 0:
        raise DegenerateSampleError(f"jitter of half-width {sigma} did not separate duplicate samples")
    return x, nb


def _mean_log(r: np.ndarray) -> float:
    return float(np.mean(np.log(r)))


def _knn_value(nb: NeighborDistances, n: int, d: int, k: int) -> float:
    return -digamma(k) + digamma(n) + log_unit_ball_volume(d) + d * _mean_log(nb.dist[:, k - 1])


def entropy_nn(points, duplicate_policy: DuplicatePolicy = "reject") -> EntropyEstimate:
    """Nearest-neighbor entropy with the Euler-Mascheroni correction.

    H = log(n-1) + log V_d + gamma + (d/n) * sum_i log r_i, where r_i is the
    distance from sample i to its nearest neighbor.
    """
    x, nb = _prepared(points, 1, duplicate_policy)
    n, d = x.shape
    value = math.log(n - 1) + log_unit_ball_volume(d) + EULER_GAMMA + d * _mean_log(nb.dist[:, 0])
    return EntropyEstimate(value, n, 1, d)


def entropy_knn(points, k: int = 1, duplicate_policy: DuplicatePolicy = "reject") -> EntropyEstimate:
    """k-th nearest-neighbor entropy estimate in nats.

    H = -psi(k) + psi(n) + log V_d + (d/n) * sum_i log r_k(x_i).

    Parameters
    ----------
    points : array_like, shape (n, d)
        Rows are i.i.d. samples; 1-D input is treated as ``d = 1``.
    k : int
        Neighbor order, ``1 <= k <= n - 1``.
    duplicate_policy : {"reject", Jitter}
        Duplicate rows make the estimate -inf. ``"reject"`` raises
        :class:`DegenerateSampleError`; a :class:`Jitter` perturbs the sample
        first.
    """
    x, nb = _prepared(points, k, duplicate_policy)
    n, d = x.shape
    return EntropyEstimate(_knn_value(nb, n, d, k), n, k, d)


def _knn_gradient(x: np.ndarray, nb: NeighborDistances, k: int) -> np.ndarray:
    n, d = x.shape
    m = nb.idx[:, k - 1]
    r = nb.dist[:, k - 1]
    pair = (d / n) * (x - x[m]) / (r * r)[:, None]
    grad = pair.copy()
    # Scatter in a fixed order so repeated runs sum identically.
    np.subtract.at(grad, m, pair)
    return grad


def entropy_knn_gradient(points, k: int = 1, duplicate_policy: DuplicatePolicy = "reject") -> np.ndarray:
    """Gradient of :func:`entropy_knn` with respect to every sample.

    Holds the neighbor assignment fixed, which is exact away from distance
    ties. At a tie the lower-index neighbor is used (a one-sided derivative).
    Rows sum to zero.
    """
    x, nb = _prepared(points, k, duplicate_policy)
    return _knn_gradient(x, nb, k)


def entropy_knn_with_gradient(points, k: int = 1, duplicate_policy: DuplicatePolicy = "reject"):
    """Estimate and gradient from a single neighbor search."""
    x, nb = _prepared(points, k, duplicate_policy)
    n, d = x.shape
    return EntropyEstimate(_knn_value(nb, n, d, k), n, k, d), _knn_gradient(x, nb, k)


def layer_deltas(layer_entropies: Sequence[float]) -> EntropyProfile:
    """Successive differences H[n+1] - H[n] of a per-layer entropy list."""
    h = tuple(float(v) for v in layer_entropies)
    if len(h) < 2:
        raise InvalidArgument(f"need entropies for at least 2 layers, got {len(h)}")
    return EntropyProfile(h, tuple(b - a for a, b in zip(h[:-1], h[1:])))
