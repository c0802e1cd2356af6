"""Numerical probes of pre-softmax attention on single-feature tokens.

For scalar tokens x_i the pre-softmax attention matrix built from small
query/key maps collapses towards a rank-1 outer product of the inputs; these
routines quantify that collapse and its failure modes (saturation, ReLU sign
quadrants, multivariate tokens).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericError

ACTIVATIONS = {
    "linear": lambda z: z,
    "tanh": np.tanh,
    "relu": lambda z: np.maximum(z, 0.0),
}


def attention_prelogits(
    x: np.ndarray,
    q_map: np.ndarray,
    k_map: np.ndarray,
    q_bias: np.ndarray | None = None,
    k_bias: np.ndarray | None = None,
    activation: str = "linear",
) -> np.ndarray:
    """A[i, j] = act(q_map x_i + q_bias) . act(k_map x_j + k_bias) / sqrt(d_k).

    x is a length-S scalar sequence; q_map / k_map are length-d_k vectors
    (the single-input-feature columns of the query/key matrices).
    """
    x = np.asarray(x, dtype=np.float64)
    q_map = np.asarray(q_map, dtype=np.float64).reshape(-1)
    k_map = np.asarray(k_map, dtype=np.float64).reshape(-1)
    d_k = len(q_map)
    if len(k_map) != d_k:
        raise InputError(f"query/key widths differ: {d_k} vs {len(k_map)}")
    if not np.isfinite(x).all():
        raise NumericError("non-finite sequence values")
    act = ACTIVATIONS[activation]
    qb = np.zeros(d_k) if q_bias is None else np.asarray(q_bias, dtype=np.float64)
    kb = np.zeros(d_k) if k_bias is None else np.asarray(k_bias, dtype=np.float64)
    queries = act(np.outer(x, q_map) + qb)  # (S, d_k)
    keys = act(np.outer(x, k_map) + kb)
    return queries @ keys.T / np.sqrt(d_k)


def multivariate_prelogits(
    tokens: np.ndarray,
    q_map: np.ndarray,
    k_map: np.ndarray,
    activation: str = "tanh",
) -> np.ndarray:
    """Same construction for (S, D) tokens with (d_k, D) maps; the contrast case."""
    act = ACTIVATIONS[activation]
    queries = act(tokens @ q_map.T)
    keys = act(tokens @ k_map.T)
    return queries @ keys.T / np.sqrt(q_map.shape[0])


def rank1_deviation(a: np.ndarray) -> float:
    """Frobenius distance of A to its best rank-1 approximation, relative.

    Equals sqrt(1 - s1^2 / sum s_i^2) by Eckart-Young.
    """
    a = np.asarray(a, dtype=np.float64)
    total = np.linalg.norm(a)
    if total == 0.0:
        raise NumericError("rank-1 deviation undefined for the zero matrix")
    s = np.linalg.svd(a, compute_uv=False)
    # tail form of sqrt(1 - s1^2 / sum s_i^2): exact-rank-1 inputs stay ~0
    return float(min(1.0, np.linalg.norm(s[1:]) / np.linalg.norm(s)))


def bias_term_fit(a: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares fit A ~ c1 x x^T + c2 x 1^T + c3 1 x^T + c4 1 1^T.

    Returns (coefficients, residual relative to ||A||_F).
    """
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if len(np.unique(x)) < 3:
        raise InputError("need at least 3 distinct sequence values for the fit")
    ones = np.ones_like(x)
    basis = np.stack([
        np.outer(x, x).ravel(),
        np.outer(x, ones).ravel(),
        np.outer(ones, x).ravel(),
        np.outer(ones, ones).ravel(),
    ], axis=1)
    coeffs, _, rank, _ = np.linalg.lstsq(basis, a.ravel(), rcond=None)
    if rank < 4:
        raise InputError("rank-deficient design (degenerate sequence values)")
    residual = np.linalg.norm(a.ravel() - basis @ coeffs)
    return coeffs, float(residual / np.linalg.norm(a))


def relu_quadrant_analysis(
    x: np.ndarray, q_map: np.ndarray, k_map: np.ndarray
) -> dict[tuple[int, int], tuple[float, float]]:
    """Per sign quadrant (sign x_i, sign x_j): A_ij / (x_i x_j) constant + spread.

    ReLU is exactly linear on each half-line, so within a quadrant the ratio
    is constant up to rounding; quadrants where the activation kills one
    factor give constant 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if not ((x > 0).any() and (x < 0).any()):
        raise InputError("quadrant analysis needs both signs present in x")
    if (x == 0).any():
        raise InputError("zero sequence values have no sign quadrant")
    a = attention_prelogits(x, q_map, k_map, activation="relu")
    ratios = a / np.outer(x, x)
    out = {}
    for si in (1, -1):
        for sj in (1, -1):
            rows = np.sign(x) == si
            cols = np.sign(x) == sj
            block = ratios[np.ix_(rows, cols)]
            out[(si, sj)] = (float(block.mean()), float(block.max() - block.min()))
    return out


@dataclass(frozen=True)
class BreakdownRecord:
    activation: str
    scale: float
    seed: int
    rank1_deviation: float
    bias_fit_residual: float


def run_breakdown_grid(
    scales=(0.01, 0.1, 1.0, 10.0),
    activations=("tanh", "relu"),
    seeds=range(20),
    seq_len: int = 32,
    d_k: int = 16,
    bias_scale: float = 0.05,
) -> list[BreakdownRecord]:
    """Sweep input scale x activation x seed; one record per cell."""
    records = []
    for activation in activations:
        for scale in scales:
            for seed in seeds:
                rng = np.random.default_rng(seed)
                x = rng.uniform(-1.0, 1.0, seq_len) * scale
                q_map = rng.standard_normal(d_k)
                k_map = rng.standard_normal(d_k)
                qb = rng.standard_normal(d_k) * bias_scale
                kb = rng.standard_normal(d_k) * bias_scale
                a = attention_prelogits(x, q_map, k_map, qb, kb, activation)
                records.append(BreakdownRecord(
                    activation=activation,
                    scale=scale,
                    seed=seed,
                    rank1_deviation=rank1_deviation(a),
                    bias_fit_residual=bias_term_fit(a, x)[1],
                ))
    return records


def multivariate_deviation(seed: int, token_dim: int = 8, seq_len: int = 32,
                           d_k: int = 16) -> float:
    """Rank-1 deviation for random multivariate tokens (the non-degenerate case)."""
    rng = np.random.default_rng(seed)
    tokens = rng.standard_normal((seq_len, token_dim))
    q_map = rng.standard_normal((d_k, token_dim)) * 0.3
    k_map = rng.standard_normal((d_k, token_dim)) * 0.3
    return rank1_deviation(multivariate_prelogits(tokens, q_map, k_map))
