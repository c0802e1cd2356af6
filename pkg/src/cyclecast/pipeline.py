"""End-to-end workflows behind the CLI: prepare, train, baselines, predict.

All artifacts are written deterministically (sorted JSON keys, .npy arrays,
no embedded timestamps) so identical configs reproduce identical bytes;
wall-clock timings go to a separate timing file.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, replace
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

from . import frames, series, training
from .errors import ConfigError, InputError
from .frames import CycleFrame, EMPTY_CALENDAR, HolidayCalendar, WindowSample
from .model import ForecastModel, ModelConfig
from .series import NormStats, SplitSpec, TimeSeries
from .training import MetricsReport, TrainConfig

CONFIG_VERSION = 1
SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class RunConfig:
    dataset_path: str
    time_column: str = "timestamp"
    value_column: str = "value"
    timestamp_format: str = series.DEFAULT_TIMESTAMP_FORMAT
    delimiter: str = ","
    resample_to_seconds: int | None = None
    cycle_len: int = 24
    anchor_offset: int = 0
    history_len: int = 21
    forecast_len: int = 7
    rhp_k: int = 3
    stride: int = 1
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    holiday_calendar_path: str | None = None
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    output_dir: str = "runs/default"
    seed: int = 0
    residual_mode: bool = True  # False: ablation on raw rows with zero RHP

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["version"] = CONFIG_VERSION
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        doc = dict(doc)
        version = doc.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version}")
        if "model" in doc and isinstance(doc["model"], dict):
            doc["model"] = ModelConfig(**doc["model"])
        if "train" in doc and isinstance(doc["train"], dict):
            doc["train"] = TrainConfig(**doc["train"])
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path):
        _write_json(path, self.to_dict())

    @property
    def split_spec(self) -> SplitSpec:
        return SplitSpec(self.train_frac, self.val_frac, self.test_frac)

    def effective_model(self) -> ModelConfig:
        return replace(
            self.model,
            cycle_len=self.cycle_len,
            history_len=self.history_len,
            forecast_len=self.forecast_len,
            seed=self.seed,
        )


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass
class PreparedSplit:
    frame: CycleFrame
    residuals: np.ndarray
    rhps: np.ndarray
    valid_from: int
    samples: list


@dataclass
class Prepared:
    stats: NormStats
    calendar: HolidayCalendar
    splits: dict[str, PreparedSplit]
    normalized: TimeSeries


def prepare(cfg: RunConfig, write: bool = True) -> Prepared:
    """Load, clean, normalize, split, compress, and window the dataset."""
    ts = series.load_csv(
        cfg.dataset_path, cfg.time_column, cfg.value_column,
        cfg.timestamp_format, cfg.delimiter,
    )
    if cfg.resample_to_seconds:
        ts = series.resample(ts, cfg.resample_to_seconds)
    if ts.has_missing:
        ts = series.fill_missing(ts)
    stats = series.fit_norm(ts, cfg.split_spec)
    normalized = series.normalize(ts, stats)
    min_cycles = cfg.history_len + cfg.forecast_len + cfg.rhp_k * 7
    parts = series.split(normalized, cfg.split_spec, cfg.cycle_len,
                         min_cycles_per_split=min_cycles)

    calendar = (HolidayCalendar.from_file(cfg.holiday_calendar_path)
                if cfg.holiday_calendar_path else EMPTY_CALENDAR)

    splits = {}
    for name, part in zip(SPLIT_NAMES, parts):
        frame = frames.compress(part, cfg.cycle_len, cfg.anchor_offset)
        residuals, rhps, valid_from = frames.residual_frame(
            frame, cfg.rhp_k, calendar
        )
        if cfg.residual_mode:
            samples = frames.build_samples(
                frame, residuals, rhps, cfg.history_len, cfg.forecast_len,
                calendar, cfg.stride, valid_from=valid_from,
            )
        else:
            zero_rhp = np.where(np.isnan(rhps), np.nan, 0.0)
            samples = frames.build_samples(
                frame, frame.matrix + zero_rhp, zero_rhp,
                cfg.history_len, cfg.forecast_len, calendar, cfg.stride,
                valid_from=valid_from,
            )
        splits[name] = PreparedSplit(frame, residuals, rhps, valid_from, samples)

    prepared = Prepared(stats=stats, calendar=calendar, splits=splits,
                        normalized=normalized)
    if write:
        out = Path(cfg.output_dir) / "prepare"
        out.mkdir(parents=True, exist_ok=True)
        series.write_csv(normalized, out / "normalized.csv")
        _write_json(out / "norm_stats.json", {
            "min": stats.min, "max": stats.max, "fitted_on": stats.fitted_on,
        })
        manifest = {"splits": {}}
        for name, ps in splits.items():
            np.save(out / f"{name}_frame.npy", ps.frame.matrix)
            np.save(out / f"{name}_rhp.npy", ps.rhps)
            np.save(out / f"{name}_residuals.npy", ps.residuals)
            manifest["splits"][name] = {
                "rows": ps.frame.n_rows,
                "cycle_len": ps.frame.cycle_len,
                "valid_from": ps.valid_from,
                "n_samples": len(ps.samples),
                "first_date": ps.frame.row_dates[0].isoformat(),
                "last_date": ps.frame.row_dates[-1].isoformat(),
            }
        _write_json(out / "manifest.json", manifest)
        cfg.save(out / "run_config.json")
    return prepared


def run_train(cfg: RunConfig, prepared: Prepared | None = None) -> dict:
    """Train, evaluate all splits, and write checkpoint + metrics artifacts."""
    prepared = prepared or prepare(cfg)
    out = Path(cfg.output_dir) / "train"
    out.mkdir(parents=True, exist_ok=True)

    model = ForecastModel(cfg.effective_model())
    model, fit_report = training.train(
        model, prepared.splits["train"].samples,
        prepared.splits["val"].samples, cfg.train,
    )
    metrics = {
        name: training.evaluate(model, ps.samples, prepared.stats).to_dict()
        for name, ps in prepared.splits.items()
    }
    model.save(out / "checkpoint.json")
    _write_json(out / "metrics.json", metrics)
    _write_json(out / "timing.json", {
        "train_wall_s": fit_report.wall_time_s,
        "epochs_run": len(fit_report.epoch_history),
    })
    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for row in fit_report.epoch_history:
            writer.writerow([row["epoch"], repr(row["train_loss"]),
                             repr(row["val_loss"])])
    cfg.save(out / "run_config.json")
    return {"model": model, "metrics": metrics, "fit_report": fit_report}


def run_baseline(cfg: RunConfig, kind: str = "rhp",
                 prepared: Prepared | None = None) -> dict:
    """Deterministic baseline metrics and forecast CSV on the test split."""
    if kind not in ("rhp", "persistence"):
        raise ConfigError(f"unknown baseline {kind!r}")
    prepared = prepared or prepare(cfg)
    ps = prepared.splits["test"]
    forecasts = (frames.rhp_baseline(ps.samples) if kind == "rhp"
                 else frames.persistence_baseline(ps.samples))
    report = training.evaluate_forecasts(forecasts, ps.samples, prepared.stats)
    out = Path(cfg.output_dir) / f"baseline_{kind}"
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "metrics.json", report.to_dict())
    scale = prepared.stats.max - prepared.stats.min
    with open(out / "forecasts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "value"])
        for sample, forecast in zip(ps.samples, forecasts):
            start = _anchor_start(ps.frame, sample.anchor_date)
            for step, v in enumerate(forecast.reshape(-1)):
                stamp = start + timedelta(seconds=step * ps.frame.resolution)
                writer.writerow([
                    stamp.strftime(series.DEFAULT_TIMESTAMP_FORMAT),
                    repr(float(v * scale + prepared.stats.min)),
                ])
    cfg.save(out / "run_config.json")
    return {"metrics": report, "forecasts": forecasts}


def _anchor_start(frame: CycleFrame, anchor_date) -> datetime:
    for r, d in enumerate(frame.row_dates):
        if d == anchor_date:
            return frame.start + timedelta(
                seconds=r * frame.cycle_len * frame.resolution
            )
    raise InputError(f"anchor date {anchor_date} not in frame")


def run_predict(cfg: RunConfig, checkpoint_path, anchor_date,
                out_path=None) -> np.ndarray:
    """Forecast forecast_len cycles from a given anchor date, denormalized."""
    prepared = prepare(cfg, write=False)
    model = ForecastModel.load(checkpoint_path)

    # whole-series frame so any anchor past warm-up is reachable
    full = frames.compress(prepared.normalized, cfg.cycle_len, cfg.anchor_offset)
    residuals, rhps, valid_from = frames.residual_frame(
        full, cfg.rhp_k, prepared.calendar
    )
    samples = frames.build_samples(
        full, residuals, rhps, cfg.history_len, cfg.forecast_len,
        prepared.calendar, stride=1, valid_from=valid_from,
    )
    by_date = {s.anchor_date: s for s in samples}
    if anchor_date not in by_date:
        earliest = samples[0].anchor_date
        raise InputError(
            f"no sample anchored at {anchor_date}; earliest valid anchor is "
            f"{earliest}, latest {samples[-1].anchor_date}"
        )
    sample = by_date[anchor_date]
    forecast = model.predict(sample, prepared.stats)
    if out_path:
        start = _anchor_start(full, anchor_date)
        with open(out_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["timestamp", "value"])
            for step, v in enumerate(forecast.reshape(-1)):
                stamp = start + timedelta(seconds=step * full.resolution)
                writer.writerow([
                    stamp.strftime(series.DEFAULT_TIMESTAMP_FORMAT),
                    repr(float(v)),
                ])
    return forecast


def run_evaluate(cfg: RunConfig, checkpoint_path) -> dict:
    """Evaluate an existing checkpoint on all splits."""
    prepared = prepare(cfg, write=False)
    model = ForecastModel.load(checkpoint_path)
    metrics = {
        name: training.evaluate(model, ps.samples, prepared.stats).to_dict()
        for name, ps in prepared.splits.items()
    }
    out = Path(cfg.output_dir) / "evaluate"
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "metrics.json", metrics)
    cfg.save(out / "run_config.json")
    return metrics


def run_bench(cfg: RunConfig, repeats: int = 3,
              include_ablation: bool = True) -> dict:
    """Time train+evaluate `repeats` times, for residual mode and ablation."""
    out = Path(cfg.output_dir) / "bench"
    out.mkdir(parents=True, exist_ok=True)
    timings = {}

    def phase(mode_cfg):
        prepared = prepare(mode_cfg, write=False)

        def once():
            model = ForecastModel(mode_cfg.effective_model())
            model, _ = training.train(
                model, prepared.splits["train"].samples,
                prepared.splits["val"].samples, mode_cfg.train,
            )
            training.evaluate(model, prepared.splits["test"].samples,
                              prepared.stats)

        return training.benchmark(once, repeats)

    timings["residual"] = phase(cfg)
    if include_ablation:
        timings["no_residual"] = phase(replace(cfg, residual_mode=False))
    _write_json(out / "timing.json", timings)
    cfg.save(out / "run_config.json")
    return timings
