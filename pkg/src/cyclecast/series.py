"""Univariate time series loading, cleaning, resampling, normalization, splitting.

A series lives on a regular time grid: gaps in the source data become NaN
values, never missing index positions. All operations return new objects.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta

import numpy as np

from .errors import InputError

DEFAULT_TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"


@dataclass(frozen=True)
class TimeSeries:
    """Regularly sampled univariate series; NaN marks a missing value."""

    start: datetime
    resolution: int  # seconds between consecutive samples
    values: np.ndarray  # float64, 1-d
    name: str = ""

    def __post_init__(self):
        if self.resolution <= 0:
            raise InputError(f"resolution must be positive, got {self.resolution}")
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )
        if self.values.ndim != 1:
            raise InputError("values must be one-dimensional")

    def __len__(self) -> int:
        return len(self.values)

    def timestamp(self, i: int) -> datetime:
        return self.start + timedelta(seconds=i * self.resolution)

    def timestamps(self) -> list[datetime]:
        return [self.timestamp(i) for i in range(len(self))]

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.values).any())


@dataclass(frozen=True)
class NormStats:
    """Min/max statistics for [0, 1] scaling, with provenance."""

    min: float
    max: float
    fitted_on: str = "train"

    def __post_init__(self):
        if not self.max > self.min:
            raise InputError(
                f"degenerate normalization range: min={self.min}, max={self.max}"
            )


@dataclass(frozen=True)
class SplitSpec:
    """Temporal train/validation/test fractions; default 6:2:2."""

    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fracs):
            raise InputError(f"split fractions must be non-negative: {fracs}")
        if abs(sum(fracs) - 1.0) > 1e-12:
            raise InputError(f"split fractions must sum to 1: {fracs}")


def load_csv(
    path,
    time_column: str,
    value_column: str,
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
    delimiter: str = ",",
) -> TimeSeries:
    """Read a CSV into a TimeSeries on a regular grid.

    The grid step is the modal difference between consecutive timestamps;
    grid positions with no source row become NaN.
    """
    rows: list[tuple[datetime, float]] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        if reader.fieldnames is None:
            raise InputError(f"{path}: empty file")
        for col in (time_column, value_column):
            if col not in reader.fieldnames:
                raise InputError(
                    f"{path}: column {col!r} not found (have {reader.fieldnames})"
                )
        for lineno, row in enumerate(reader, start=2):
            raw_ts = row[time_column]
            try:
                ts = datetime.strptime(raw_ts, timestamp_format)
            except ValueError as exc:
                raise InputError(
                    f"{path}: row {lineno}: unparseable timestamp {raw_ts!r}: {exc}"
                ) from None
            raw_val = row[value_column].strip()
            val = float("nan") if raw_val == "" else float(raw_val)
            rows.append((ts, val))

    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 rows, got {len(rows)}")

    seen: set[datetime] = set()
    prev = None
    for ts, _ in rows:
        if prev is not None and ts < prev:
            raise InputError(f"{path}: timestamps not non-decreasing at {ts}")
        if ts in seen:
            raise InputError(f"{path}: duplicate timestamp {ts}")
        seen.add(ts)
        prev = ts

    diffs = Counter(
        int((rows[i + 1][0] - rows[i][0]).total_seconds())
        for i in range(len(rows) - 1)
    )
    # ties resolve to the smaller step so isolated gaps don't win
    resolution = min(diffs, key=lambda d: (-diffs[d], d))
    if resolution <= 0:
        raise InputError(f"{path}: could not infer a positive grid step")

    start = rows[0][0]
    span = int((rows[-1][0] - start).total_seconds())
    if span % resolution != 0:
        raise InputError(
            f"{path}: last timestamp not on the {resolution}s grid from {start}"
        )
    n = span // resolution + 1
    values = np.full(n, np.nan)
    for ts, val in rows:
        offset = int((ts - start).total_seconds())
        if offset % resolution != 0:
            raise InputError(f"{path}: timestamp {ts} off the {resolution}s grid")
        values[offset // resolution] = val

    return TimeSeries(start=start, resolution=resolution, values=values,
                      name=value_column)


def write_csv(
    ts: TimeSeries,
    path,
    time_column: str = "timestamp",
    value_column: str = "value",
    timestamp_format: str = DEFAULT_TIMESTAMP_FORMAT,
    delimiter: str = ",",
) -> None:
    """Write a series back out with the same schema load_csv accepts."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, delimiter=delimiter)
        writer.writerow([time_column, value_column])
        for i, v in enumerate(ts.values):
            stamp = ts.timestamp(i).strftime(timestamp_format)
            writer.writerow([stamp, "" if math.isnan(v) else repr(float(v))])


def resample(ts: TimeSeries, target_resolution: int) -> TimeSeries:
    """Downsample by averaging blocks of m = target/current consecutive values.

    NaNs inside a block are ignored; an all-NaN block stays NaN. A trailing
    partial block is dropped.
    """
    if target_resolution % ts.resolution != 0:
        raise InputError(
            f"target resolution {target_resolution}s is not an integer multiple "
            f"of {ts.resolution}s"
        )
    m = target_resolution // ts.resolution
    if m == 1:
        return ts
    n_out = len(ts) // m
    if n_out == 0:
        raise InputError("series shorter than one resampling window")
    blocks = ts.values[: n_out * m].reshape(n_out, m)
    with np.errstate(invalid="ignore"):
        out = np.nanmean(blocks, axis=1)
    return replace(ts, resolution=target_resolution, values=out)


def fill_missing(ts: TimeSeries) -> TimeSeries:
    """Replace every NaN with the mean of its nearest valid neighbors.

    Each position in a gap takes the mean of the closest valid value before
    and after the gap; leading/trailing gaps copy the single nearest value.
    """
    values = ts.values.copy()
    valid = np.flatnonzero(~np.isnan(values))
    if len(valid) == 0:
        raise InputError("cannot fill an all-missing series")
    if len(valid) == len(values):
        return ts

    first, last = valid[0], valid[-1]
    values[:first] = values[first]
    values[last + 1:] = values[last]
    i = first
    while i < last:
        j = valid[np.searchsorted(valid, i + 1)]
        if j > i + 1:
            values[i + 1: j] = 0.5 * (values[i] + values[j])
        i = j
    return replace(ts, values=values)


def fit_norm(ts: TimeSeries, spec: SplitSpec = SplitSpec()) -> NormStats:
    """Fit min/max on the training fraction only, to avoid test leakage."""
    n_train = int(len(ts) * spec.train_frac)
    if n_train < 1:
        raise InputError("training fraction selects no data")
    train = ts.values[:n_train]
    lo = float(np.nanmin(train))
    hi = float(np.nanmax(train))
    if not hi > lo:
        raise InputError(f"training portion is constant (value {lo})")
    return NormStats(min=lo, max=hi, fitted_on="train")


def normalize(ts: TimeSeries, stats: NormStats) -> TimeSeries:
    """Map values through v -> (v - min) / (max - min)."""
    return replace(ts, values=(ts.values - stats.min) / (stats.max - stats.min))


def denormalize(ts: TimeSeries, stats: NormStats) -> TimeSeries:
    """Exact inverse of normalize."""
    return replace(ts, values=ts.values * (stats.max - stats.min) + stats.min)


def split(
    ts: TimeSeries,
    spec: SplitSpec = SplitSpec(),
    cycle_steps: int = 1,
    min_cycles_per_split: int = 0,
) -> tuple[TimeSeries, TimeSeries, TimeSeries]:
    """Cut contiguous train/val/test slices, snapped down to whole cycles.

    Each fraction is floored to a whole number of cycles; the remainder is
    dropped at the final boundary.
    """
    n_cycles = len(ts) // cycle_steps
    counts = [
        int(n_cycles * spec.train_frac),
        int(n_cycles * spec.val_frac),
        int(n_cycles * spec.test_frac),
    ]
    if min_cycles_per_split and any(c < min_cycles_per_split for c in counts):
        need = math.ceil(min_cycles_per_split / min(
            f for f in (spec.train_frac, spec.val_frac, spec.test_frac) if f > 0
        ))
        raise InputError(
            f"series too short: splits of {counts} cycles, each needs "
            f">= {min_cycles_per_split} (at least {need} total cycles of "
            f"{cycle_steps} steps required)"
        )
    pieces = []
    offset = 0
    for c in counts:
        n = c * cycle_steps
        piece = TimeSeries(
            start=ts.timestamp(offset),
            resolution=ts.resolution,
            values=ts.values[offset: offset + n],
            name=ts.name,
        )
        pieces.append(piece)
        offset += n
    return tuple(pieces)
