"""Mini-batch training on residuals with MAE loss, plus evaluation metrics.

Training optimizes residual predictions in normalized space; evaluation
reconstructs full forecasts (RHP + residual, denormalized) and reports
MSE / MAPE / MAE in original units.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .errors import ConfigError, MetricError, TrainingError
from .frames import WindowSample
from .model import ForecastModel
from .series import NormStats

MAPE_EPSILON = 1e-8  # |target| at or below this is excluded from MAPE


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 100
    early_stop_patience: int = 10
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    loss: str = "mae"
    deterministic: bool = True

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.early_stop_patience > self.max_epochs:
            raise ConfigError("patience must not exceed max_epochs")
        if self.loss not in ("mae", "mse"):
            raise ConfigError(f"loss must be 'mae' or 'mse', got {self.loss!r}")


@dataclass
class MetricsReport:
    mse: float
    mape: float
    mae: float
    n_samples: int
    n_excluded: int = 0
    wall_time_s: float = 0.0
    epoch_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mse": self.mse,
            "mape": self.mape,
            "mae": self.mae,
            "n_samples": self.n_samples,
            "n_excluded": self.n_excluded,
            "epoch_history": self.epoch_history,
        }


def stack_samples(samples: list[WindowSample]):
    """Batch sample fields into (B, ...) arrays."""
    return (
        np.stack([s.encoder_input for s in samples]),
        np.stack([s.decoder_input for s in samples]),
        np.stack([s.target_residuals for s in samples]),
    )


def _loss_fn(name: str):
    return T.mae_loss if name == "mae" else T.mse_loss


def _batch_loss(model, enc, dec, tgt, loss_name, training, rng):
    pred = model.forward(enc, dec, training=training, rng=rng)
    return _loss_fn(loss_name)(pred, T.Tensor(tgt))


def residual_loss(model: ForecastModel, samples: list[WindowSample],
                  loss_name: str = "mae", batch_size: int = 256) -> float:
    """Mean loss over samples with dropout off (evaluation mode)."""
    enc, dec, tgt = stack_samples(samples)
    total, count = 0.0, 0
    for lo in range(0, len(samples), batch_size):
        hi = min(lo + batch_size, len(samples))
        loss = _batch_loss(model, enc[lo:hi], dec[lo:hi], tgt[lo:hi],
                           loss_name, False, None)
        total += float(loss.data) * (hi - lo)
        count += hi - lo
    return total / count


def train(
    model: ForecastModel,
    train_samples: list[WindowSample],
    val_samples: list[WindowSample],
    cfg: TrainConfig = TrainConfig(),
) -> tuple[ForecastModel, MetricsReport]:
    """Adam training with early stopping; returns the best-validation model."""
    if not train_samples or not val_samples:
        raise TrainingError("empty sample set")
    t0 = time.perf_counter()
    enc, dec, tgt = stack_samples(train_samples)
    n = len(train_samples)
    optimizer = T.Adam(model.params, lr=cfg.lr, beta1=cfg.beta1,
                       beta2=cfg.beta2, eps=cfg.eps)
    shuffle_rng = np.random.default_rng(cfg.seed)
    dropout_rng = np.random.default_rng(cfg.seed + 1)

    history = []
    best_val = float("inf")
    best_state = model.state_dict()
    stale = 0
    for epoch in range(cfg.max_epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo: lo + cfg.batch_size]
            optimizer.zero_grad()
            loss = _batch_loss(model, enc[idx], dec[idx], tgt[idx],
                               cfg.loss, True, dropout_rng)
            if not np.isfinite(loss.data):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {lo // cfg.batch_size}"
                )
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.data) * len(idx)
        train_loss = epoch_loss / n
        val_loss = residual_loss(model, val_samples, cfg.loss)
        history.append({"epoch": epoch, "train_loss": train_loss,
                        "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_state = model.state_dict()
            stale = 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break

    model.load_state_dict(best_state)
    report = MetricsReport(mse=float("nan"), mape=float("nan"),
                           mae=best_val, n_samples=n,
                           wall_time_s=time.perf_counter() - t0,
                           epoch_history=history)
    return model, report


def compute_metrics(forecasts: np.ndarray, targets: np.ndarray) -> dict:
    """Elementwise MSE / MAPE(%) / MAE; near-zero targets excluded from MAPE."""
    diff = forecasts - targets
    mask = np.abs(targets) > MAPE_EPSILON
    n_excluded = int((~mask).sum())
    if not mask.any():
        raise MetricError("all targets are (near) zero; MAPE undefined")
    return {
        "mse": float(np.mean(diff ** 2)),
        "mape": float(100.0 * np.mean(np.abs(diff[mask] / targets[mask]))),
        "mae": float(np.mean(np.abs(diff))),
        "n_excluded": n_excluded,
    }


def evaluate_forecasts(forecasts: list[np.ndarray],
                       samples: list[WindowSample],
                       stats: NormStats) -> MetricsReport:
    """Metrics for normalized-space forecasts against denormalized targets."""
    scale = stats.max - stats.min
    pred = np.stack(forecasts) * scale + stats.min
    true = np.stack([s.target_raw for s in samples]) * scale + stats.min
    m = compute_metrics(pred, true)
    return MetricsReport(mse=m["mse"], mape=m["mape"], mae=m["mae"],
                         n_samples=len(samples), n_excluded=m["n_excluded"])


def evaluate(model: ForecastModel, samples: list[WindowSample],
             stats: NormStats, batch_size: int = 256) -> MetricsReport:
    """Reconstructed-forecast metrics in original units."""
    t0 = time.perf_counter()
    enc, dec, _ = stack_samples(samples)
    preds = []
    for lo in range(0, len(samples), batch_size):
        out = model.forward(enc[lo: lo + batch_size], dec[lo: lo + batch_size])
        preds.extend(out.data)
    forecasts = [s.target_rhp + r for s, r in zip(samples, preds)]
    report = evaluate_forecasts(forecasts, samples, stats)
    report.wall_time_s = time.perf_counter() - t0
    return report


def benchmark(run_fn, repeats: int = 3) -> dict:
    """Run a phase `repeats` times; report per-run and mean wall time."""
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        run_fn()
        runs.append(time.perf_counter() - t0)
    return {"runs_s": runs, "mean_s": sum(runs) / len(runs)}
