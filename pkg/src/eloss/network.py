"""A small dense network with repeated equal-width hidden layers.

Everything is plain numpy with hand-written backprop so the Entropy Loss
gradient can be injected into each hidden layer's activation gradient.
Parameters are kept in a flat list ``[W0, b0, W1, b1, ...]``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument, InvalidData
from .loss import EntropyLossConfig, combined_entropy_loss, entropy_loss_with_gradients

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class NetworkDims:
    input_dim: int
    hidden_width: int = 32
    hidden_count: int = 4
    output_dim: int = 2

    def __post_init__(self):
        for name in ("input_dim", "hidden_width", "hidden_count", "output_dim"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise InvalidArgument(f"{name} must be a positive integer, got {v!r}")
        if self.hidden_count < 2:
            raise InvalidArgument(
                f"hidden_count must be at least 2 so entropy deltas exist, got {self.hidden_count}"
            )

    def layer_shapes(self) -> list:
        sizes = [self.input_dim] + [self.hidden_width] * self.hidden_count + [self.output_dim]
        return list(zip(sizes[:-1], sizes[1:]))


@dataclass
class ToyNetwork:
    dims: NetworkDims
    weights: list
    biases: list
    activation: str = "relu"

    @property
    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, params) -> "ToyNetwork":
        return replace(self, weights=list(params[0::2]), biases=list(params[1::2]))


def init_network(dims: NetworkDims, activation: str = "relu", seed: int = 0) -> ToyNetwork:
    """Glorot-uniform weights, zero biases, deterministic in ``seed``."""
    if not isinstance(dims, NetworkDims):
        dims = NetworkDims(*dims)
    if activation not in ACTIVATIONS:
        raise InvalidArgument(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in dims.layer_shapes():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return ToyNetwork(dims, weights, biases, activation)


def _act(kind, z):
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_grad(kind, z, h):
    if kind == "relu":
        return (z > 0).astype(np.float64)
    return 1.0 - h * h


@dataclass
class ForwardCache:
    inputs: np.ndarray
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)
    logits: np.ndarray | None = None


def _forward(net: ToyNetwork, batch) -> ForwardCache:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.dims.input_dim:
        raise InvalidArgument(f"batch must have shape (n, {net.dims.input_dim}), got {x.shape}")
    cache = ForwardCache(x)
    h = x
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = h @ w + b
        h = _act(net.activation, z)
        cache.pre.append(z)
        cache.post.append(h)
    cache.logits = h @ net.weights[-1] + net.biases[-1]
    return cache


def forward(net: ToyNetwork, batch):
    """Hidden post-activations (one per hidden layer, in order) and logits."""
    cache = _forward(net, batch)
    return cache.post, cache.logits


def _backward(net: ToyNetwork, cache: ForwardCache, dlogits, extra_post=None, extra_pre=None):
    """Parameter gradients (flat list) and the gradient w.r.t. the inputs.

    ``extra_post`` / ``extra_pre`` add per-hidden-layer gradients on the
    post- or pre-activation outputs before backprop continues below them.
    """
    n_hidden = len(cache.post)
    grads = [None] * (2 * (n_hidden + 1))
    h_below = cache.post[-1]
    grads[-2] = h_below.T @ dlogits
    grads[-1] = dlogits.sum(axis=0)
    g_h = dlogits @ net.weights[-1].T
    for layer in range(n_hidden - 1, -1, -1):
        if extra_post is not None:
            g_h = g_h + extra_post[layer]
        g_z = g_h * _act_grad(net.activation, cache.pre[layer], cache.post[layer])
        if extra_pre is not None:
            g_z = g_z + extra_pre[layer]
        h_below = cache.post[layer - 1] if layer > 0 else cache.inputs
        grads[2 * layer] = h_below.T @ g_z
        grads[2 * layer + 1] = g_z.sum(axis=0)
        g_h = g_z @ net.weights[layer].T
    return grads, g_h


def task_loss(logits, labels):
    """Mean task loss and its gradient w.r.t. the logits.

    Integer class labels of shape ``(n,)`` select softmax cross-entropy;
    float targets shaped like ``logits`` select mean squared error.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels)
    n = z.shape[0]
    if y.ndim == 1 and np.issubdtype(y.dtype, np.integer):
        if y.shape[0] != n:
            raise InvalidArgument(f"{y.shape[0]} labels for {n} rows of logits")
        n_classes = z.shape[1]
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise InvalidData(f"class labels must lie in [0, {n_classes}), got range [{y.min()}, {y.max()}]")
        shifted = z - z.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_p = shifted - log_norm
        rows = np.arange(n)
        value = float(-log_p[rows, y].mean())
        grad = np.exp(log_p)
        grad[rows, y] -= 1.0
        return value, grad / n
    y = y.astype(np.float64).reshape(z.shape) if y.size == z.size else None
    if y is None:
        raise InvalidArgument(f"regression targets of shape {np.shape(labels)} do not match logits {z.shape}")
    diff = z - y
    return float(np.mean(diff**2)), 2.0 * diff / diff.size


def objective_and_gradients(net: ToyNetwork, batch, labels, config: EntropyLossConfig | None = None):
    """Full objective ``task + w1*L1 + w2*L2`` with parameter and input gradients.

    Returns ``(value, param_grads, input_grad, metrics, cache)``. With both
    entropy weights at zero the entropy path is skipped entirely.
    """
    config = config or EntropyLossConfig(w_variance=0.0, w_direction=0.0)
    cache = _forward(net, batch)
    t_value, dlogits = task_loss(cache.logits, labels)
    metrics = {"task_loss": t_value}
    extra_post = extra_pre = None
    total = t_value
    if config.enabled:
        layers = cache.pre if config.preactivation else cache.post
        ent, layer_grads = entropy_loss_with_gradients(layers, config)
        if config.preactivation:
            extra_pre = layer_grads
        else:
            extra_post = layer_grads
        total = t_value + ent.total
        metrics.update(_entropy_metrics(ent))
    grads, g_in = _backward(net, cache, dlogits, extra_post, extra_pre)
    metrics["total"] = total
    return total, grads, g_in, metrics, cache


def _entropy_metrics(ent) -> dict:
    return {
        "l1": ent.l1,
        "l2": ent.l2,
        "entropy_loss": ent.total,
        "layer_entropies": list(ent.profile.layer_entropies),
        "signed_delta_sum": ent.signed_sum,
    }


def measure_entropy(net: ToyNetwork, batch, config: EntropyLossConfig) -> dict:
    """Entropy Loss terms for ``batch`` without touching any gradients."""
    cache = _forward(net, batch)
    layers = cache.pre if config.preactivation else cache.post
    return _entropy_metrics(combined_entropy_loss(layers, config))


# -- optimizers ---------------------------------------------------------------

OPTIMIZERS = ("sgd", "momentum", "adam")


@dataclass
class OptimizerState:
    kind: str = "sgd"
    lr: float = 0.01
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list | None = None
    v: list | None = None

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise InvalidArgument(f"optimizer must be one of {OPTIMIZERS}, got {self.kind!r}")
        if self.lr < 0:
            raise InvalidArgument(f"learning rate must be nonnegative, got {self.lr}")


def _check_shapes(params, grads):
    if len(params) != len(grads) or any(p.shape != g.shape for p, g in zip(params, grads)):
        raise InvalidArgument("gradient shapes do not match parameter shapes")


def sgd_update(state: OptimizerState, params, grads):
    _check_shapes(params, grads)
    new = [p - state.lr * g for p, g in zip(params, grads)]
    return new, replace(state, step=state.step + 1)


def momentum_update(state: OptimizerState, params, grads):
    """Step along an exponentially weighted average of past gradients."""
    _check_shapes(params, grads)
    mu = state.momentum
    prev = state.m if state.m is not None else [np.zeros_like(p) for p in params]
    vel = [mu * v + (1.0 - mu) * g for v, g in zip(prev, grads)]
    new = [p - state.lr * v for p, v in zip(params, vel)]
    return new, replace(state, step=state.step + 1, m=vel)


def adam_update(state: OptimizerState, params, grads):
    _check_shapes(params, grads)
    b1, b2 = state.beta1, state.beta2
    t = state.step + 1
    m_prev = state.m if state.m is not None else [np.zeros_like(p) for p in params]
    v_prev = state.v if state.v is not None else [np.zeros_like(p) for p in params]
    m = [b1 * a + (1.0 - b1) * g for a, g in zip(m_prev, grads)]
    v = [b2 * a + (1.0 - b2) * g * g for a, g in zip(v_prev, grads)]
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new = [p - state.lr * (mi / c1) / (np.sqrt(vi / c2) + state.eps) for p, mi, vi in zip(params, m, v)]
    return new, replace(state, step=t, m=m, v=v)


_UPDATES = {"sgd": sgd_update, "momentum": momentum_update, "adam": adam_update}


def apply_update(state: OptimizerState, params, grads):
    return _UPDATES[state.kind](state, params, grads)


def train_step(net: ToyNetwork, state: OptimizerState, batch, labels, config: EntropyLossConfig | None = None):
    """One optimizer step on ``task + w_variance*L1 + w_direction*L2``.

    Returns ``(net, state, metrics)``; the inputs are not mutated.
    """
    _, grads, _, metrics, _ = objective_and_gradients(net, batch, labels, config)
    params, state = apply_update(state, net.params, grads)
    return net.with_params(params), state, metrics


# -- evaluation -----------------------------------------------------------------


def predict(net: ToyNetwork, inputs) -> np.ndarray:
    return forward(net, inputs)[1]


def evaluate(net: ToyNetwork, inputs, targets) -> float:
    """Accuracy for integer class labels, mean squared error otherwise."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidArgument("evaluation set is empty")
    logits = predict(net, x)
    y = np.asarray(targets)
    if y.ndim == 1 and np.issubdtype(y.dtype, np.integer):
        return float(np.mean(np.argmax(logits, axis=1) == y))
    return float(np.mean((logits - y.reshape(logits.shape)) ** 2))
