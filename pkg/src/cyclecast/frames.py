"""Primary cycle compression, calendar metadata, recent historic profiles.

The series is reshaped into an L x D matrix of whole cycles (rows). For each
row a recent historic profile (RHP) is the elementwise mean of the k most
recent prior rows in the same day category; residual = row - RHP. Training
windows carry residuals (encoder) and RHP (decoder) plus per-day metadata.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import InputError, WarmupError
from .series import TimeSeries

METADATA_WIDTH = 9  # 7-way weekday one-hot + holiday(today) + holiday(tomorrow)


class DayCategory(enum.Enum):
    WEEKDAY = "weekday"
    SATURDAY = "saturday"
    SUN_HOLIDAY = "sun_holiday"


@dataclass(frozen=True)
class HolidayCalendar:
    """Set of dates treated like Sundays for profile selection."""

    dates: frozenset = frozenset()

    def __contains__(self, d: date) -> bool:
        return d in self.dates

    @classmethod
    def from_file(cls, path) -> "HolidayCalendar":
        """One ISO date per line; blank lines and '#' comments allowed."""
        out = set()
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            try:
                out.add(date.fromisoformat(text))
            except ValueError:
                raise InputError(f"{path}: line {lineno}: bad date {text!r}")
        return cls(dates=frozenset(out))


EMPTY_CALENDAR = HolidayCalendar()


def categorize(d: date, cal: HolidayCalendar = EMPTY_CALENDAR) -> DayCategory:
    """Holiday or Sunday -> SUN_HOLIDAY; Saturday -> SATURDAY; else WEEKDAY.

    Holiday takes precedence over Saturday.
    """
    if d in cal or d.weekday() == 6:
        return DayCategory.SUN_HOLIDAY
    if d.weekday() == 5:
        return DayCategory.SATURDAY
    return DayCategory.WEEKDAY


def metadata_vector(d: date, cal: HolidayCalendar = EMPTY_CALENDAR) -> np.ndarray:
    """9 features: weekday one-hot, holiday today, holiday tomorrow."""
    vec = np.zeros(METADATA_WIDTH)
    vec[d.weekday()] = 1.0
    vec[7] = 1.0 if d in cal else 0.0
    vec[8] = 1.0 if (d + timedelta(days=1)) in cal else 0.0
    return vec


@dataclass(frozen=True)
class CycleFrame:
    """L x D matrix of whole primary cycles plus the calendar date per row."""

    matrix: np.ndarray  # (L, D) float64
    row_dates: tuple  # date per row
    start: datetime  # timestamp of matrix[0, 0]
    resolution: int  # seconds per step

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise InputError("cycle frame matrix must be 2-d")
        if len(self.row_dates) != self.matrix.shape[0]:
            raise InputError("one date required per frame row")

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cycle_len(self) -> int:
        return self.matrix.shape[1]


def compress(
    ts: TimeSeries, cycle_len: int = 24, anchor_offset: int = 0
) -> CycleFrame:
    """Reshape a gap-free series row-major into whole cycles.

    Cycle boundaries sit every `cycle_len` steps counted from midnight plus
    `anchor_offset` steps; leading steps before the first boundary and the
    trailing partial cycle are dropped.
    """
    if cycle_len < 1:
        raise InputError(f"cycle length must be >= 1, got {cycle_len}")
    if ts.has_missing:
        raise InputError("compress requires a gap-free series (run fill_missing)")

    sec_from_midnight = (
        ts.start.hour * 3600 + ts.start.minute * 60 + ts.start.second
    )
    if sec_from_midnight % ts.resolution != 0:
        raise InputError("series start is not aligned to its own resolution")
    step_in_day = sec_from_midnight // ts.resolution
    lead = (anchor_offset - step_in_day) % cycle_len

    n_rows = (len(ts) - lead) // cycle_len
    if n_rows < 1:
        raise InputError(
            f"series has no complete cycle of {cycle_len} steps after alignment"
        )
    start = ts.timestamp(lead)
    matrix = ts.values[lead: lead + n_rows * cycle_len].reshape(n_rows, cycle_len)
    row_dates = tuple(
        (start + timedelta(seconds=r * cycle_len * ts.resolution)).date()
        for r in range(n_rows)
    )
    return CycleFrame(matrix=matrix.copy(), row_dates=row_dates, start=start,
                      resolution=ts.resolution)


def decompress(frame: CycleFrame) -> TimeSeries:
    """Row-major flattening; exact inverse of compress on the aligned span."""
    return TimeSeries(
        start=frame.start,
        resolution=frame.resolution,
        values=frame.matrix.reshape(-1).copy(),
    )


def rhp(
    frame: CycleFrame,
    row: int,
    k: int = 3,
    cal: HolidayCalendar = EMPTY_CALENDAR,
) -> np.ndarray:
    """Mean of the k most recent strictly-prior rows in the row's category."""
    target_cat = categorize(frame.row_dates[row], cal)
    picked = []
    for r in range(row - 1, -1, -1):
        if categorize(frame.row_dates[r], cal) == target_cat:
            picked.append(r)
            if len(picked) == k:
                break
    if len(picked) < k:
        earliest = _first_valid_row(frame, k, cal)
        raise WarmupError(
            f"row {row} ({frame.row_dates[row]}, {target_cat.value}) has only "
            f"{len(picked)} prior same-category rows, need {k}"
            + (f"; earliest fully valid row is {earliest}" if earliest is not None
               else "; no row in this frame has enough history")
        )
    return frame.matrix[picked].mean(axis=0)


def _history_ok(frame: CycleFrame, k: int, cal: HolidayCalendar) -> np.ndarray:
    cats = [categorize(d, cal) for d in frame.row_dates]
    counts = {c: 0 for c in DayCategory}
    ok = np.zeros(frame.n_rows, dtype=bool)
    for r, c in enumerate(cats):
        ok[r] = counts[c] >= k
        counts[c] += 1
    return ok


def _first_valid_row(frame, k, cal):
    ok = _history_ok(frame, k, cal)
    # first row from which every later row also has enough history
    for r in range(frame.n_rows):
        if ok[r:].all():
            return r
    return None


def residual_frame(
    frame: CycleFrame,
    k: int = 3,
    cal: HolidayCalendar = EMPTY_CALENDAR,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Compute per-row RHP and residuals.

    Returns (residuals, rhps, valid_from); rows before valid_from are NaN and
    must not enter sample assembly.
    """
    valid_from = _first_valid_row(frame, k, cal)
    if valid_from is None:
        raise InputError(
            f"no row has {k} prior rows in every category; frame too short "
            f"({frame.n_rows} rows)"
        )
    rhps = np.full_like(frame.matrix, np.nan)
    for r in range(valid_from, frame.n_rows):
        rhps[r] = rhp(frame, r, k, cal)
    residuals = frame.matrix - rhps
    return residuals, rhps, valid_from


@dataclass(frozen=True)
class WindowSample:
    """One training/inference window at cycle granularity."""

    encoder_input: np.ndarray  # (H, D + M) residuals + metadata
    decoder_input: np.ndarray  # (F, D + M) RHP + metadata
    target_residuals: np.ndarray  # (F, D)
    target_rhp: np.ndarray  # (F, D)
    target_raw: np.ndarray  # (F, D) normalized ground truth
    last_observed_row: np.ndarray  # (D,) raw row just before the anchor
    anchor_date: date

    def __post_init__(self):
        recon = self.target_rhp + self.target_residuals
        if not np.allclose(recon, self.target_raw, rtol=0, atol=1e-12):
            raise InputError("target decomposition violated: raw != rhp + residual")


def build_samples(
    frame: CycleFrame,
    residuals: np.ndarray,
    rhps: np.ndarray,
    history_len: int = 21,
    forecast_len: int = 7,
    cal: HolidayCalendar = EMPTY_CALENDAR,
    stride: int = 1,
    valid_from: int | None = None,
) -> list[WindowSample]:
    """Slide a (history_len + forecast_len)-row window over the valid rows."""
    if valid_from is None:
        valid_from = int(np.flatnonzero(~np.isnan(rhps).any(axis=1))[0])
    meta = np.stack([metadata_vector(d, cal) for d in frame.row_dates])
    samples = []
    first_anchor = valid_from + history_len
    for a in range(first_anchor, frame.n_rows - forecast_len + 1, stride):
        enc = np.concatenate(
            [residuals[a - history_len: a], meta[a - history_len: a]], axis=1
        )
        dec = np.concatenate([rhps[a: a + forecast_len],
                              meta[a: a + forecast_len]], axis=1)
        samples.append(WindowSample(
            encoder_input=enc,
            decoder_input=dec,
            target_residuals=residuals[a: a + forecast_len].copy(),
            target_rhp=rhps[a: a + forecast_len].copy(),
            target_raw=frame.matrix[a: a + forecast_len].copy(),
            last_observed_row=frame.matrix[a - 1].copy(),
            anchor_date=frame.row_dates[a],
        ))
    if not samples:
        raise InputError(
            f"no samples: {frame.n_rows - valid_from} valid rows, need at least "
            f"{history_len + forecast_len}"
        )
    return samples


def rhp_baseline(samples: list[WindowSample]) -> list[np.ndarray]:
    """Zero-residual forecast: exactly the RHP of the target rows."""
    return [s.target_rhp.copy() for s in samples]


def persistence_baseline(samples: list[WindowSample]) -> list[np.ndarray]:
    """Repeat the last observed cycle row for every forecast row."""
    return [
        np.tile(s.last_observed_row, (s.target_raw.shape[0], 1)) for s in samples
    ]
