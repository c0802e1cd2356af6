"""Dense tensors with reverse-mode automatic differentiation, plus Adam.

Values are numpy arrays (float64 by default, float32 selectable). Each op
records a backward closure; `backward()` on a scalar walks the recorded
graph in reverse topological order and accumulates into `.grad`.
"""

from __future__ import annotations

import numpy as np

from . import backend
from .errors import ConfigError, DimensionError, NumericError, TrainingError


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcasted gradient back down to `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_backward", "_prev")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=dtype or np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self._backward = None
        self._prev = ()

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, grad: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self):
        if self.data.size != 1:
            raise TrainingError(
                f"backward requires a scalar loss, got shape {self.data.shape}"
            )
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if id(child) not in visited:
                    stack.append((child, False))
        self._accumulate(np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator plumbing ---------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return _getitem(self, key)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    parents = tuple(p for p in parents if p.requires_grad or p._prev)
    if parents:
        out.requires_grad = True
        out._prev = parents
        out._backward = backward_fn
    return out


def _track(t: Tensor) -> bool:
    return t.requires_grad or bool(t._prev)


# -- elementwise and shape ops -----------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def backward(g):
        if _track(a):
            a._accumulate(_unbroadcast(g, a.shape))
        if _track(b):
            b._accumulate(_unbroadcast(g, b.shape))

    return _make(data, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data - b.data

    def backward(g):
        if _track(a):
            a._accumulate(_unbroadcast(g, a.shape))
        if _track(b):
            b._accumulate(_unbroadcast(-g, b.shape))

    return _make(data, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def backward(g):
        if _track(a):
            a._accumulate(_unbroadcast(g * b.data, a.shape))
        if _track(b):
            b._accumulate(_unbroadcast(g * a.data, b.shape))

    return _make(data, (a, b), backward)


def power(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    data = a.data ** exponent

    def backward(g):
        if _track(a):
            a._accumulate(g * exponent * a.data ** (exponent - 1))

    return _make(data, (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 1 or b.ndim < 1:
        raise DimensionError("matmul requires at least 1-d operands")
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise DimensionError(
            f"matmul inner dimensions differ: {a.shape} vs {b.shape}"
        )
    data = np.matmul(a.data, b.data)

    def backward(g):
        if _track(a):
            ga = np.matmul(g, np.swapaxes(b.data, -1, -2)) if b.ndim > 1 \
                else np.multiply.outer(g, b.data)
            a._accumulate(_unbroadcast(ga, a.shape))
        if _track(b):
            gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
            b._accumulate(_unbroadcast(gb, b.shape))

    return _make(data, (a, b), backward)


def transpose(a, axes=None) -> Tensor:
    a = _as_tensor(a)
    axes = tuple(axes) if axes is not None else tuple(range(a.ndim))[::-1]
    data = np.transpose(a.data, axes)
    inverse = np.argsort(axes)

    def backward(g):
        if _track(a):
            a._accumulate(np.transpose(g, inverse))

    return _make(data, (a,), backward)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    data = a.data.reshape(shape)

    def backward(g):
        if _track(a):
            a._accumulate(g.reshape(a.shape))

    return _make(data, (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if _track(t):
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t._accumulate(g[tuple(index)])

    return _make(data, tensors, backward)


def _getitem(a, key) -> Tensor:
    a = _as_tensor(a)
    data = a.data[key]

    def backward(g):
        if _track(a):
            full = np.zeros_like(a.data)
            np.add.at(full, key, g)
            a._accumulate(full)

    return _make(data, (a,), backward)


def slice_axis(a, axis: int, start: int, stop: int) -> Tensor:
    a = _as_tensor(a)
    key = [slice(None)] * a.ndim
    key[axis] = slice(start, stop)
    return _getitem(a, tuple(key))


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if _track(a):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(g, a.shape).copy())

    return _make(data, (a,), backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    count = a.data.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


# -- neural network ops ------------------------------------------------------


def relu(a) -> Tensor:
    a = _as_tensor(a)
    data = np.maximum(a.data, 0.0)

    def backward(g):
        if _track(a):
            a._accumulate(g * (a.data > 0))

    return _make(data, (a,), backward)


def softmax(a, axis: int = -1) -> Tensor:
    a = _as_tensor(a)
    if np.isnan(a.data).any():
        raise NumericError("softmax input contains NaN")
    data = backend.softmax_lastaxis(np.moveaxis(a.data, axis, -1))
    data = np.moveaxis(data, -1, axis)

    def backward(g):
        if _track(a):
            inner = (g * data).sum(axis=axis, keepdims=True)
            a._accumulate(data * (g - inner))

    return _make(data, (a,), backward)


def linear(x, weight, bias=None) -> Tensor:
    """x @ weight (+ bias), the last axis being the feature axis."""
    out = matmul(x, weight)
    return out if bias is None else add(out, bias)


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then affine."""
    a = _as_tensor(a)
    mu = mean(a, axis=-1, keepdims=True)
    centered = sub(a, mu)
    var = mean(mul(centered, centered), axis=-1, keepdims=True)
    inv_std = power(add(var, eps), -0.5)
    return add(mul(mul(centered, inv_std), gain), bias)


def dropout(a, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Zero a fraction p of entries and rescale survivors by 1/(1-p)."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout probability must be in [0, 1), got {p}")
    a = _as_tensor(a)
    if not training or p == 0.0:
        return a
    mask = (rng.random(a.shape) >= p) / (1.0 - p)

    def backward(g):
        if _track(a):
            a._accumulate(g * mask)

    return _make(a.data * mask, (a,), backward)


def mae_loss(pred, target) -> Tensor:
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise DimensionError(f"loss shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    data = np.abs(diff).mean()

    def backward(g):
        if _track(pred):
            # subgradient at 0 is 0 (np.sign(0) == 0)
            pred._accumulate(g * np.sign(diff) / diff.size)
        if _track(target):
            target._accumulate(-g * np.sign(diff) / diff.size)

    return _make(data, (pred, target), backward)


def mse_loss(pred, target) -> Tensor:
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise DimensionError(f"loss shapes differ: {pred.shape} vs {target.shape}")
    diff = pred.data - target.data
    data = (diff ** 2).mean()

    def backward(g):
        if _track(pred):
            pred._accumulate(g * 2.0 * diff / diff.size)
        if _track(target):
            target._accumulate(-g * 2.0 * diff / diff.size)

    return _make(data, (pred, target), backward)


# -- optimizer ---------------------------------------------------------------


class Adam:
    """Bias-corrected Adam over a name -> Tensor parameter mapping."""

    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def step(self):
        if all(p.grad is None for p in self.params.values()):
            raise TrainingError("adam step with no populated gradients")
        self.t += 1
        for name, p in self.params.items():
            if p.grad is None:
                continue
            backend.adam_update(
                p.data, p.grad, self.m[name], self.v[name],
                self.t, self.lr, self.beta1, self.beta2, self.eps,
            )

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None
