"""Kernel dispatch: compiled Cython extension when available, numpy otherwise.

Set CYCLECAST_FORCE_PYTHON=1 to ignore the compiled extension. Both paths
compute identical results; tests assert agreement.
"""

from __future__ import annotations

import os

import numpy as np

try:
    if os.environ.get("CYCLECAST_FORCE_PYTHON") == "1":
        raise ImportError("forced python backend")
    from . import _kernels

    HAVE_COMPILED = True
except ImportError:
    _kernels = None
    HAVE_COMPILED = False


def backend_name() -> str:
    return "compiled" if HAVE_COMPILED else "python"


def softmax_lastaxis_py(x: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def adam_update_py(param, grad, m, v, t, lr, beta1, beta2, eps):
    """In-place bias-corrected Adam update for one parameter."""
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1 ** t)
    v_hat = v / (1.0 - beta2 ** t)
    param -= lr * m_hat / (np.sqrt(v_hat) + eps)


def softmax_lastaxis(x: np.ndarray) -> np.ndarray:
    if HAVE_COMPILED and x.dtype == np.float64:
        flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
        out = np.empty_like(flat)
        _kernels.softmax_lastaxis(flat, out)
        return out.reshape(x.shape)
    return softmax_lastaxis_py(x)


def adam_update(param, grad, m, v, t, lr, beta1, beta2, eps):
    if (
        HAVE_COMPILED
        and param.dtype == np.float64
        and param.flags["C_CONTIGUOUS"]
        and grad.flags["C_CONTIGUOUS"]
    ):
        _kernels.adam_update(
            param.reshape(-1), grad.reshape(-1), m.reshape(-1), v.reshape(-1),
            t, lr, beta1, beta2, eps,
        )
    else:
        adam_update_py(param, grad, m, v, t, lr, beta1, beta2, eps)
