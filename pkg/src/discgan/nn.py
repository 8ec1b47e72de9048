"""Small dense-network engine: layers, manual backprop, BCE loss and Adam.

Everything runs in float64. A network owns a :class:`ParamSet` whose
trainable parameters live in one flat buffer, so optimizer updates,
gradient averaging and checkpointing all work on a single vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError, StateError

KINDS = ("dense", "leaky_relu", "sigmoid", "batch_norm", "dropout", "head")

BN_EPSILON = 1e-5
BCE_CLAMP = 1e-7


@dataclass(frozen=True)
class LayerSpec:
    """One layer in a network chain.

    ``head`` is the mixed output activation used by tabular generators: it
    applies a sigmoid or a softmax to each ``(start, stop, kind)`` block of
    columns.
    """

    kind: str
    width: int | None = None
    alpha: float | None = None
    rate: float | None = None
    momentum: float | None = None
    blocks: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if (self.width is not None) != (self.kind == "dense"):
            raise ValueError("width is set on dense layers only")
        if self.kind == "dense" and self.width < 1:
            raise ValueError("dense width must be positive")
        if (self.alpha is not None) != (self.kind == "leaky_relu"):
            raise ValueError("alpha is set on leaky_relu layers only")
        if self.kind == "leaky_relu" and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if (self.rate is not None) != (self.kind == "dropout"):
            raise ValueError("rate is set on dropout layers only")
        if self.kind == "dropout" and not 0 <= self.rate < 1:
            raise ValueError("dropout rate must be in [0, 1)")
        if self.kind == "batch_norm":
            m = 0.99 if self.momentum is None else self.momentum
            if not 0 < m < 1:
                raise ValueError("batch-norm momentum must be in (0, 1)")
            object.__setattr__(self, "momentum", m)
        elif self.momentum is not None:
            raise ValueError("momentum is set on batch_norm layers only")
        if self.kind == "head":
            if not self.blocks:
                raise ValueError("head layer needs output blocks")
            blocks = tuple((int(a), int(b), str(k)) for a, b, k in self.blocks)
            for a, b, k in blocks:
                if k not in ("sigmoid", "softmax") or not 0 <= a < b:
                    raise ValueError(f"bad head block {(a, b, k)}")
            object.__setattr__(self, "blocks", blocks)
        elif self.blocks is not None:
            raise ValueError("blocks are set on head layers only")

    def to_dict(self):
        d = {"kind": self.kind}
        for name in ("width", "alpha", "rate", "momentum"):
            if getattr(self, name) is not None:
                d[name] = getattr(self, name)
        if self.blocks is not None:
            d["blocks"] = [list(b) for b in self.blocks]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "blocks" in d:
            d["blocks"] = tuple(tuple(b) for b in d["blocks"])
        return cls(**d)


def dense(width):
    return LayerSpec("dense", width=width)


def leaky_relu(alpha=0.2):
    return LayerSpec("leaky_relu", alpha=alpha)


def sigmoid():
    return LayerSpec("sigmoid")


def batch_norm(momentum=0.99):
    return LayerSpec("batch_norm", momentum=momentum)


def dropout(rate):
    return LayerSpec("dropout", rate=rate)


def head(blocks):
    return LayerSpec("head", blocks=tuple(blocks))


def _layer_shapes(in_width, layers):
    """Per-layer trainable and non-trainable shapes, plus the output width."""
    trainable, stats = [], []
    width = in_width
    for i, spec in enumerate(layers):
        if spec.kind == "dense":
            trainable.append((i, "W", (width, spec.width)))
            trainable.append((i, "b", (spec.width,)))
            width = spec.width
        elif spec.kind == "batch_norm":
            trainable.append((i, "gamma", (width,)))
            trainable.append((i, "beta", (width,)))
            stats.append((i, "moving_mean", (width,)))
            stats.append((i, "moving_var", (width,)))
        elif spec.kind == "head":
            covered = sorted(spec.blocks)
            pos = 0
            for a, b, _ in covered:
                if a != pos:
                    raise DimensionError(f"layer {i}: head blocks do not tile the input")
                pos = b
            if pos != width:
                raise DimensionError(f"layer {i}: head covers {pos} columns, input has {width}")
    return trainable, stats, width


def _views(buffer, entries):
    views, offset = {}, 0
    for i, name, shape in entries:
        size = int(np.prod(shape))
        views.setdefault(i, {})[name] = buffer[offset:offset + size].reshape(shape)
        offset += size
    return views


def _size(entries):
    return sum(int(np.prod(shape)) for _, _, shape in entries)


class ParamSet:
    """Trainable parameters in one flat vector plus batch-norm moving statistics.

    ``layer[i]`` maps parameter names to array views into the flat buffers, so
    in-place updates of ``values`` are visible through the views.
    """

    def __init__(self, trainable_entries, stat_entries, values=None, stats=None):
        self._trainable_entries = trainable_entries
        self._stat_entries = stat_entries
        self.values = np.zeros(_size(trainable_entries)) if values is None else values
        self.stats = np.zeros(_size(stat_entries)) if stats is None else stats
        if self.values.shape != (_size(trainable_entries),):
            raise DimensionError("trainable buffer has the wrong size")
        if self.stats.shape != (_size(stat_entries),):
            raise DimensionError("statistics buffer has the wrong size")
        self.layer = _views(self.values, trainable_entries)
        for i, names in _views(self.stats, stat_entries).items():
            self.layer.setdefault(i, {}).update(names)

    def copy(self):
        return ParamSet(self._trainable_entries, self._stat_entries,
                        self.values.copy(), self.stats.copy())


@dataclass
class GradSet:
    """Gradients of the trainable entries of a ParamSet, same flat layout.

    ``input`` holds the gradient with respect to the network input.
    """

    values: np.ndarray
    layer: dict = field(default_factory=dict)
    input: np.ndarray | None = None


class Network:
    """A chain of layers applied to ``in_width``-column inputs."""

    def __init__(self, in_width, layers, rng=None, params=None):
        if in_width < 1:
            raise ValueError("input width must be positive")
        self.in_width = int(in_width)
        self.layers = tuple(layers)
        trainable, stats, self.out_width = _layer_shapes(self.in_width, self.layers)
        self._trainable_entries = trainable
        if params is None:
            params = ParamSet(trainable, stats)
            _initialize(self, params, rng if rng is not None else np.random.default_rng(0))
        self.params = params

    @property
    def n_trainable(self):
        return self.params.values.size

    @property
    def n_non_trainable(self):
        return self.params.stats.size

    def copy(self):
        return Network(self.in_width, self.layers, params=self.params.copy())

    def zero_grads(self):
        g = np.zeros_like(self.params.values)
        return GradSet(g, _views(g, self._trainable_entries))

    def to_dict(self):
        return {
            "in_width": self.in_width,
            "layers": [spec.to_dict() for spec in self.layers],
            "values": self.params.values.tolist(),
            "stats": self.params.stats.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        layers = [LayerSpec.from_dict(x) for x in d["layers"]]
        trainable, stats, _ = _layer_shapes(d["in_width"], layers)
        params = ParamSet(trainable, stats,
                          np.asarray(d["values"], dtype=np.float64),
                          np.asarray(d["stats"], dtype=np.float64))
        return cls(d["in_width"], layers, params=params)


def _initialize(net, params, rng):
    # Glorot-uniform weights, zero biases, unit gamma / moving_var
    for i, spec in enumerate(net.layers):
        p = params.layer.get(i)
        if spec.kind == "dense":
            fan_in, fan_out = p["W"].shape
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            p["W"][...] = rng.uniform(-limit, limit, size=p["W"].shape)
        elif spec.kind == "batch_norm":
            p["gamma"][...] = 1.0
            p["moving_var"][...] = 1.0


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _softmax(x):
    z = np.exp(x - x.max(axis=1, keepdims=True))
    return z / z.sum(axis=1, keepdims=True)


@dataclass
class ForwardCache:
    net_id: int
    mode: str
    entries: list


def forward(net, batch, mode="train", rng=None, update_stats=True):
    """Run ``batch`` through ``net``; returns ``(output, cache)``.

    In ``infer`` mode dropout is the identity and batch-norm uses the moving
    statistics. In ``train`` mode batch-norm normalizes with batch statistics
    and, when ``update_stats`` is set, folds them into the moving averages.
    """
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode!r}")
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_width:
        raise DimensionError(f"layer 0: expected (n, {net.in_width}) input, got {x.shape}")
    train = mode == "train"
    entries = []
    for i, spec in enumerate(net.layers):
        kind = spec.kind
        if kind == "dense":
            p = net.params.layer[i]
            if x.shape[1] != p["W"].shape[0]:
                raise DimensionError(f"layer {i}: expected width {p['W'].shape[0]}, got {x.shape[1]}")
            entries.append(x)
            x = x @ p["W"] + p["b"]
        elif kind == "leaky_relu":
            pos = x > 0
            entries.append(pos)
            x = np.where(pos, x, spec.alpha * x)
        elif kind == "sigmoid":
            x = _sigmoid(x)
            entries.append(x)
        elif kind == "batch_norm":
            p = net.params.layer[i]
            if train:
                mean = x.mean(axis=0)
                var = x.var(axis=0)
                if update_stats:
                    m = spec.momentum
                    p["moving_mean"] *= m
                    p["moving_mean"] += (1 - m) * mean
                    p["moving_var"] *= m
                    p["moving_var"] += (1 - m) * var
            else:
                mean, var = p["moving_mean"], p["moving_var"]
            inv_std = 1.0 / np.sqrt(var + BN_EPSILON)
            xhat = (x - mean) * inv_std
            entries.append((xhat, inv_std))
            x = p["gamma"] * xhat + p["beta"]
        elif kind == "dropout":
            if train and spec.rate > 0:
                if rng is None:
                    raise ValueError(f"layer {i}: dropout in train mode needs an rng")
                mask = (rng.random(x.shape) >= spec.rate) / (1.0 - spec.rate)
                x = x * mask
            else:
                mask = None
            entries.append(mask)
        elif kind == "head":
            out = np.empty_like(x)
            for a, b, k in spec.blocks:
                out[:, a:b] = _sigmoid(x[:, a:b]) if k == "sigmoid" else _softmax(x[:, a:b])
            x = out
            entries.append(x)
    return x, ForwardCache(id(net.params), mode, entries)


def backward(net, cache, dloss_doutput, param_grads=True):
    """Backpropagate ``dloss_doutput`` through the layers cached by :func:`forward`.

    ``dloss_doutput`` is the gradient of a scalar loss with respect to the
    network output, so a mean-reduced loss already carries its ``1/n``.
    Returns a :class:`GradSet`; its ``input`` field holds the input gradient.
    """
    if cache.net_id != id(net.params) or len(cache.entries) != len(net.layers):
        raise StateError("forward cache was not produced by this network")
    if cache.mode != "train":
        raise StateError("backward needs a train-mode forward cache")
    grads = net.zero_grads()
    g = np.asarray(dloss_doutput, dtype=np.float64)
    for i in range(len(net.layers) - 1, -1, -1):
        spec, entry = net.layers[i], cache.entries[i]
        kind = spec.kind
        if kind == "dense":
            p = net.params.layer[i]
            if param_grads:
                gi = grads.layer[i]
                np.matmul(entry.T, g, out=gi["W"])
                gi["b"][...] = g.sum(axis=0)
            g = g @ p["W"].T
        elif kind == "leaky_relu":
            g = np.where(entry, g, spec.alpha * g)
        elif kind == "sigmoid":
            g = g * entry * (1.0 - entry)
        elif kind == "batch_norm":
            xhat, inv_std = entry
            gamma = net.params.layer[i]["gamma"]
            if param_grads:
                gi = grads.layer[i]
                gi["gamma"][...] = (g * xhat).sum(axis=0)
                gi["beta"][...] = g.sum(axis=0)
            dxhat = g * gamma
            g = inv_std * (dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0))
        elif kind == "dropout":
            if entry is not None:
                g = g * entry
        elif kind == "head":
            out = np.empty_like(g)
            for a, b, k in spec.blocks:
                s, gb = entry[:, a:b], g[:, a:b]
                if k == "sigmoid":
                    out[:, a:b] = gb * s * (1.0 - s)
                else:
                    out[:, a:b] = s * (gb - (gb * s).sum(axis=1, keepdims=True))
            g = out
    grads.input = g
    return grads


def bce_loss(pred, labels):
    """Mean binary cross-entropy and its gradient with respect to ``pred``."""
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.size == 0:
        raise ValueError("bce_loss needs at least one prediction")
    if p.shape != y.shape:
        raise DimensionError(f"pred shape {p.shape} != labels shape {y.shape}")
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    grad = (p - y) / (p * (1.0 - p)) / p.size
    return float(loss), grad


def cross_entropy_loss(probs, labels):
    """Mean categorical cross-entropy for softmax outputs and integer labels."""
    p = np.clip(np.asarray(probs, dtype=np.float64), BCE_CLAMP, 1.0)
    n = p.shape[0]
    if n == 0:
        raise ValueError("cross_entropy_loss needs at least one row")
    rows = np.arange(n)
    loss = -np.mean(np.log(p[rows, labels]))
    grad = np.zeros_like(p)
    grad[rows, labels] = -1.0 / (p[rows, labels] * n)
    return float(loss), grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params, **hyper):
        return cls(np.zeros_like(params.values), np.zeros_like(params.values), **hyper)

    def copy(self):
        return AdamState(self.m.copy(), self.v.copy(), self.t, self.lr,
                         self.beta1, self.beta2, self.epsilon)

    def to_dict(self):
        return {"m": self.m.tolist(), "v": self.v.tolist(), "t": self.t, "lr": self.lr,
                "beta1": self.beta1, "beta2": self.beta2, "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["m"] = np.asarray(d["m"], dtype=np.float64)
        d["v"] = np.asarray(d["v"], dtype=np.float64)
        return cls(**d)


def adam_update(grads, state):
    """Advance ``state`` by one step and return the parameter increment."""
    g = grads.values
    if g.shape != state.m.shape:
        raise DimensionError(f"gradient size {g.shape} != optimizer state size {state.m.shape}")
    if not np.isfinite(g).all():
        bad = int(np.flatnonzero(~np.isfinite(g))[0])
        raise NumericError(f"non-finite gradient at flat index {bad} (optimizer step {state.t + 1})")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1 - b1) * g
    state.v *= b2
    state.v += (1 - b2) * g * g
    mhat = state.m / (1 - b1 ** state.t)
    vhat = state.v / (1 - b2 ** state.t)
    return -state.lr * mhat / (np.sqrt(vhat) + state.epsilon)


def adam_step(params, grads, state):
    """Apply one Adam step in place; returns ``(params, state)``."""
    params.values += adam_update(grads, state)
    return params, state


def quadratic_loss(target):
    """``0.5 * mean over rows of ||out - target||^2`` as a loss callable."""
    def loss(out):
        diff = out - target
        n = out.shape[0]
        return 0.5 * float(np.sum(diff * diff)) / n, diff / n
    return loss


def grad_check(net, batch, eps=1e-5, loss=None, seed=0, mode="train"):
    """Worst relative error between analytic and central-difference gradients.

    Dropout masks are pinned by re-seeding the generator with ``seed`` before
    every forward pass. The default loss is a quadratic against a fixed random
    target. Batch-norm moving statistics are left untouched.

    Each entry's error is ``|analytic - numeric| / max(|analytic|, |numeric|, floor)``
    with ``floor = 1e-4 * max|analytic|``: entries orders of magnitude below the
    gradient's scale are dominated by round-off in the differences.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if loss is None:
        target = np.random.default_rng(seed + 1).normal(size=(batch.shape[0], net.out_width))
        loss = quadratic_loss(target)

    def run():
        out, cache = forward(net, batch, mode, np.random.default_rng(seed), update_stats=False)
        return out, cache

    out, cache = run()
    _, dout = loss(out)
    analytic = backward(net, cache, dout).values.copy()
    theta = net.params.values
    floor = 1e-4 * float(np.abs(analytic).max(initial=0.0))
    worst = 0.0
    for k in range(theta.size):
        orig = theta[k]
        theta[k] = orig + eps
        lp, _ = loss(run()[0])
        theta[k] = orig - eps
        lm, _ = loss(run()[0])
        theta[k] = orig
        numeric = (lp - lm) / (2 * eps)
        a = analytic[k]
        scale = max(abs(a), abs(numeric), floor)
        if scale == 0.0:
            continue
        worst = max(worst, abs(a - numeric) / scale)
    return worst
