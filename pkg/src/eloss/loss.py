"""Entropy Loss: variance and direction terms over per-layer entropy deltas."""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import (
    DuplicatePolicy,
    EntropyProfile,
    entropy_knn,
    entropy_knn_with_gradient,
    layer_deltas,
    parse_policy,
)
from .errors import InvalidArgument

CONVENTIONS = ("batch_rows", "feature_channels")


@dataclass(frozen=True)
class EntropyLossConfig:
    """How Entropy Loss is measured and weighted.

    ``sample_convention`` picks the sample axis of each activation matrix:
    ``batch_rows`` uses batch elements as samples (dimension = layer width),
    ``feature_channels`` uses channels as samples (dimension = batch size).
    ``layers`` restricts the loss to a subset of hidden layers (indices in
    forward order); ``None`` means all of them. ``preactivation`` measures
    hidden layers before the nonlinearity.
    """

    k: int = 1
    w_variance: float = 1.0
    w_direction: float = 0.1
    sample_convention: str = "batch_rows"
    duplicate_policy: DuplicatePolicy = "reject"
    layers: tuple | None = None
    preactivation: bool = False

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgument(f"k must be a positive integer, got {self.k!r}")
        if self.w_variance < 0 or self.w_direction < 0:
            raise InvalidArgument("entropy loss weights must be nonnegative")
        if self.sample_convention not in CONVENTIONS:
            raise InvalidArgument(f"sample_convention must be one of {CONVENTIONS}, got {self.sample_convention!r}")
        parse_policy(self.duplicate_policy)
        if self.layers is not None:
            object.__setattr__(self, "layers", tuple(int(i) for i in self.layers))

    @property
    def enabled(self) -> bool:
        return self.w_variance > 0 or self.w_direction > 0


@dataclass(frozen=True)
class EntropyLossValue:
    l1: float
    l2: float
    total: float
    profile: EntropyProfile
    # sum of signed deltas; positive means entropy grew through the stack
    signed_sum: float = 0.0


def _deltas(deltas) -> np.ndarray:
    dh = np.asarray(deltas, dtype=np.float64).reshape(-1)
    if dh.size == 0:
        raise InvalidArgument("need at least one entropy delta")
    return dh


def variance_loss(deltas: Sequence[float]) -> float:
    """Population variance of the entropy deltas (divides by their count)."""
    dh = _deltas(deltas)
    return float(np.sum((dh - dh.mean()) ** 2) / dh.size)


def direction_loss(deltas: Sequence[float]) -> float:
    """Negated sum of squared entropy deltas."""
    dh = _deltas(deltas)
    return float(-np.sum(dh**2))


def samples_of(activation: np.ndarray, convention: str) -> np.ndarray:
    a = np.asarray(activation, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if convention == "feature_channels":
        return a.T
    if convention == "batch_rows":
        return a
    raise InvalidArgument(f"unknown sample convention {convention!r}")


def _selected(layer_activations, config: EntropyLossConfig) -> list:
    acts = list(layer_activations)
    if config.layers is None:
        chosen = list(range(len(acts)))
    else:
        chosen = list(config.layers)
        bad = [i for i in chosen if not -len(acts) <= i < len(acts)]
        if bad:
            raise InvalidArgument(f"layer indices {bad} out of range for {len(acts)} layers")
        chosen = [i % len(acts) for i in chosen]
    if len(chosen) < 2:
        raise InvalidArgument(f"entropy loss needs at least 2 layers, got {len(chosen)}")
    return chosen


def _annotate(exc: Exception, layer) -> Exception:
    exc.layer = layer
    exc.args = (f"layer {layer}: {exc}",)
    return exc


def layer_entropies(layer_activations, config: EntropyLossConfig, with_gradient: bool = False):
    """Entropy of each selected layer, optionally with d H / d activation.

    Returns ``(indices, entropies, grads)``; ``grads`` is ``None`` unless
    requested, and is shaped like the original activation matrices.
    """
    chosen = _selected(layer_activations, config)
    acts = list(layer_activations)
    hs, grads = [], []
    for i in chosen:
        x = samples_of(acts[i], config.sample_convention)
        try:
            if with_gradient:
                est, g = entropy_knn_with_gradient(x, config.k, config.duplicate_policy)
                grads.append(g.T if config.sample_convention == "feature_channels" else g.reshape(np.shape(acts[i])))
            else:
                est = entropy_knn(x, config.k, config.duplicate_policy)
        except ValueError as exc:
            raise _annotate(exc, i) from None
        hs.append(est.value)
    return chosen, hs, (grads if with_gradient else None)


def _value(hs, config: EntropyLossConfig) -> EntropyLossValue:
    profile = layer_deltas(hs)
    l1 = variance_loss(profile.deltas)
    l2 = direction_loss(profile.deltas)
    total = config.w_variance * l1 + config.w_direction * l2
    return EntropyLossValue(l1, l2, total, profile, float(sum(profile.deltas)))


def combined_entropy_loss(layer_activations, config: EntropyLossConfig | None = None) -> EntropyLossValue:
    """Entropy Loss over an ordered list of layer activations.

    Each layer's entropy is estimated with :func:`entropy_knn` under
    ``config.sample_convention``; the deltas between consecutive layers feed
    ``total = w_variance * L1 + w_direction * L2``.
    """
    config = config or EntropyLossConfig()
    _, hs, _ = layer_entropies(layer_activations, config)
    return _value(hs, config)


def delta_weights(deltas, config: EntropyLossConfig) -> np.ndarray:
    """d total / d H for every layer, given the deltas between them."""
    dh = _deltas(deltas)
    g_dh = config.w_variance * 2.0 * (dh - dh.mean()) / dh.size + config.w_direction * (-2.0 * dh)
    # delta n = H[n+1] - H[n]
    g_h = np.zeros(dh.size + 1)
    g_h[1:] += g_dh
    g_h[:-1] -= g_dh
    return g_h


def entropy_loss_with_gradients(layer_activations, config: EntropyLossConfig | None = None):
    """Loss value and d total / d activation for every layer.

    Layers outside ``config.layers`` get zero gradients.
    """
    config = config or EntropyLossConfig()
    acts = list(layer_activations)
    chosen, hs, grads = layer_entropies(acts, config, with_gradient=True)
    value = _value(hs, config)
    g_h = delta_weights(value.profile.deltas, config)
    out = [np.zeros(np.shape(a)) for a in acts]
    for slot, i in enumerate(chosen):
        out[i] = out[i] + g_h[slot] * grads[slot]
    return value, out


def entropy_loss_gradients(layer_activations, config: EntropyLossConfig | None = None) -> list:
    """Gradient of :func:`combined_entropy_loss` with respect to each layer."""
    return entropy_loss_with_gradients(layer_activations, config)[1]
