"""Synthetic hourly demand-style data for tests, examples, and benchmarks.

The generator composes a daily sinusoid, a day-category level shift, a slowly
mixing day-level AR(1) amplitude pattern (the learnable structure a profile
average smooths out), and optional Gaussian noise.
"""

from __future__ import annotations

from datetime import datetime, timedelta

import numpy as np

from .frames import EMPTY_CALENDAR, DayCategory, categorize
from .series import TimeSeries

CATEGORY_LEVEL = {
    DayCategory.WEEKDAY: 1.0,
    DayCategory.SATURDAY: 0.75,
    DayCategory.SUN_HOLIDAY: 0.6,
}


def generate(
    n_days: int = 400,
    cycle_len: int = 24,
    start: datetime = datetime(2020, 1, 6),  # a Monday
    base_level: float = 100.0,
    daily_amplitude: float = 30.0,
    pattern_scale: float = 0.0,
    pattern_ar: float = 0.92,
    noise_sigma: float = 0.0,
    seed: int = 0,
    calendar=EMPTY_CALENDAR,
) -> TimeSeries:
    """Hourly series of n_days whole days starting at midnight.

    pattern_scale > 0 injects an AR(1) day-level amplitude modulation that is
    predictable from recent days but invisible to a category-profile average;
    noise_sigma adds iid Gaussian noise on top.
    """
    rng = np.random.default_rng(seed)
    resolution = 86400 // cycle_len
    hours = np.arange(cycle_len) * (24.0 / cycle_len)
    day_shape = np.sin(2.0 * np.pi * (hours - 6.0) / 24.0)

    ar = np.zeros(n_days)
    for d in range(1, n_days):
        ar[d] = pattern_ar * ar[d - 1] + np.sqrt(1 - pattern_ar ** 2) * \
            rng.standard_normal()

    rows = []
    for d in range(n_days):
        day = start.date() + timedelta(days=d)
        level = CATEGORY_LEVEL[categorize(day, calendar)]
        row = base_level * level + daily_amplitude * level * day_shape
        row = row + pattern_scale * ar[d] * (1.0 + 0.5 * day_shape)
        rows.append(row)
    values = np.concatenate(rows)
    if noise_sigma > 0:
        values = values + rng.normal(0.0, noise_sigma, size=values.shape)
    return TimeSeries(start=start, resolution=resolution, values=values,
                      name="synthetic")
