import math
from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclecast import series
from cyclecast.errors import InputError
from conftest import make_series


def write_rows(path, rows, header="timestamp,value"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n")


class TestLoadCsv:
    def test_three_rows_hourly(self, tmp_path):
        p = tmp_path / "a.csv"
        write_rows(p, [
            "2020-01-01 00:00:00,1.0",
            "2020-01-01 01:00:00,2.0",
            "2020-01-01 02:00:00,3.0",
        ])
        ts = series.load_csv(p, "timestamp", "value")
        assert len(ts) == 3
        assert ts.resolution == 3600
        np.testing.assert_array_equal(ts.values, [1.0, 2.0, 3.0])

    def test_gap_becomes_missing(self, tmp_path):
        p = tmp_path / "a.csv"
        write_rows(p, [
            "2020-01-01 01:00:00,1.0",
            "2020-01-01 03:00:00,3.0",
            "2020-01-01 04:00:00,4.0",
        ])
        ts = series.load_csv(p, "timestamp", "value")
        assert len(ts) == 4
        assert math.isnan(ts.values[1])

    def test_duplicate_timestamp_errors(self, tmp_path):
        p = tmp_path / "a.csv"
        write_rows(p, [
            "2020-01-01 00:00:00,1.0",
            "2020-01-01 00:00:00,2.0",
            "2020-01-01 01:00:00,3.0",
        ])
        with pytest.raises(InputError, match="2020-01-01 00:00:00"):
            series.load_csv(p, "timestamp", "value")

    def test_unparseable_timestamp_names_row(self, tmp_path):
        p = tmp_path / "a.csv"
        write_rows(p, ["2020-01-01 00:00:00,1.0", "not-a-date,2.0"])
        with pytest.raises(InputError, match="row 3"):
            series.load_csv(p, "timestamp", "value")

    def test_too_few_rows(self, tmp_path):
        p = tmp_path / "a.csv"
        write_rows(p, ["2020-01-01 00:00:00,1.0"])
        with pytest.raises(InputError, match="at least 2"):
            series.load_csv(p, "timestamp", "value")

    def test_roundtrip_through_write_csv(self, tmp_path, hourly_series):
        p = tmp_path / "out.csv"
        series.write_csv(hourly_series, p)
        back = series.load_csv(p, "timestamp", "value")
        np.testing.assert_array_equal(back.values, hourly_series.values)
        assert back.resolution == hourly_series.resolution


class TestResample:
    def test_quarter_hour_to_hour(self):
        ts = make_series([1, 2, 3, 4], resolution=900)
        out = series.resample(ts, 3600)
        np.testing.assert_array_equal(out.values, [2.5])
        assert out.resolution == 3600

    def test_identity_when_same_resolution(self, hourly_series):
        assert series.resample(hourly_series, 3600) is hourly_series

    def test_window_with_missing_uses_partial_mean(self):
        ts = make_series([1, np.nan, 3, 4], resolution=900)
        out = series.resample(ts, 3600)
        np.testing.assert_allclose(out.values, [8.0 / 3.0])

    def test_non_integer_ratio_errors(self):
        ts = make_series([1, 2, 3], resolution=900)
        with pytest.raises(InputError, match="multiple"):
            series.resample(ts, 1000)


class TestFillMissing:
    def test_interior_gap_two_neighbor_mean(self):
        ts = make_series([1, np.nan, 3])
        np.testing.assert_array_equal(
            series.fill_missing(ts).values, [1, 2, 3]
        )

    def test_leading_gap_copies_nearest(self):
        ts = make_series([np.nan, 5, 5])
        np.testing.assert_array_equal(
            series.fill_missing(ts).values, [5, 5, 5]
        )

    def test_run_takes_gap_edge_mean(self):
        # derived with the nearest-valid-neighbor rule applied per gap
        ts = make_series([1, np.nan, np.nan, 5])
        np.testing.assert_array_equal(
            series.fill_missing(ts).values, [1, 3, 3, 5]
        )

    def test_all_missing_errors(self):
        ts = make_series([np.nan, np.nan])
        with pytest.raises(InputError):
            series.fill_missing(ts)

    @given(st.lists(
        st.one_of(st.none(), st.floats(-100, 100)),
        min_size=2, max_size=40,
    ).filter(lambda v: any(x is not None for x in v)))
    @settings(max_examples=60, deadline=None)
    def test_idempotent_and_complete(self, raw):
        vals = [np.nan if v is None else v for v in raw]
        out = series.fill_missing(make_series(vals))
        assert not out.has_missing
        np.testing.assert_array_equal(
            series.fill_missing(out).values, out.values
        )


class TestNormalization:
    def test_fit_on_train_fraction_only(self):
        ts = make_series([-2.0, 4.0, 9.0])
        stats = series.fit_norm(ts, series.SplitSpec(2 / 3, 1 / 6, 1 / 6))
        assert stats.min == -2.0 and stats.max == 4.0

    def test_constant_train_errors(self):
        ts = make_series([5, 5, 5, 1, 9])
        with pytest.raises(InputError, match="constant"):
            series.fit_norm(ts, series.SplitSpec(0.6, 0.2, 0.2))

    def test_basic_mapping(self):
        stats = series.NormStats(0.0, 10.0)
        out = series.normalize(make_series([10.0, 12.0]), stats)
        np.testing.assert_allclose(out.values, [1.0, 1.2])

    @given(st.floats(-1e6, 1e6), st.floats(1e-3, 1e6))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, lo, width):
        stats = series.NormStats(lo, lo + width)
        ts = make_series(np.linspace(lo - width, lo + 2 * width, 8))
        back = series.denormalize(series.normalize(ts, stats), stats)
        np.testing.assert_allclose(back.values, ts.values, rtol=1e-12,
                                   atol=1e-12 * max(1.0, abs(lo)))

    def test_degenerate_stats_rejected(self):
        with pytest.raises(InputError):
            series.NormStats(3.0, 3.0)


class TestSplit:
    def test_even_split_100_days(self):
        ts = make_series(np.arange(100 * 24.0))
        tr, va, te = series.split(ts, series.SplitSpec(), cycle_steps=24)
        assert (len(tr), len(va), len(te)) == (60 * 24, 20 * 24, 20 * 24)

    def test_101_days_drops_remainder_at_end(self):
        ts = make_series(np.arange(101 * 24.0))
        tr, va, te = series.split(ts, series.SplitSpec(), cycle_steps=24)
        assert (len(tr), len(va), len(te)) == (60 * 24, 20 * 24, 20 * 24)

    def test_concatenation_is_prefix(self):
        ts = make_series(np.arange(53 * 24.0))
        parts = series.split(ts, series.SplitSpec(), cycle_steps=24)
        joined = np.concatenate([p.values for p in parts])
        np.testing.assert_array_equal(joined, ts.values[: len(joined)])

    def test_too_short_errors_with_minimum(self):
        ts = make_series(np.arange(10 * 24.0))
        with pytest.raises(InputError, match="too short"):
            series.split(ts, series.SplitSpec(), cycle_steps=24,
                         min_cycles_per_split=21 + 7 + 21)

    def test_splits_start_at_correct_times(self):
        ts = make_series(np.arange(50 * 24.0))
        tr, va, te = series.split(ts, series.SplitSpec(), cycle_steps=24)
        assert va.start == ts.timestamp(len(tr))
        assert te.start == ts.timestamp(len(tr) + len(va))


def test_resample_then_fill_commutes_on_gap_free():
    rng = np.random.default_rng(3)
    ts = make_series(rng.uniform(0, 1, 96), resolution=900)
    a = series.fill_missing(series.resample(ts, 3600)) \
        if series.resample(ts, 3600).has_missing else series.resample(ts, 3600)
    b = series.resample(ts, 3600)
    np.testing.assert_array_equal(a.values, b.values)
