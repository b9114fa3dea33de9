import numpy as np
import pytest

from hybridscale.errors import ConfigError, OrderingError, ParseError, RangeError
from hybridscale.trace import (
    Spike,
    SyntheticProfile,
    TimeSeries,
    Window,
    bin_max,
    generate_synthetic,
    ingest_counts,
    read_series,
    window_at,
    write_series,
)

from conftest import per_second, write_trace


def test_ingest_fills_missing_seconds_with_zero(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("100,5\n101,7\n104,2\n")
    s = ingest_counts(p)
    assert s.lag == 1 and s.start_time == 100
    assert s.values.tolist() == [5, 7, 0, 0, 2]


def test_ingest_reports_line_of_malformed_row(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("100,5\n101,abc\n")
    with pytest.raises(ParseError, match="line 2"):
        ingest_counts(p)


def test_ingest_rejects_negative_and_unsorted(tmp_path):
    p = tmp_path / "neg.csv"
    p.write_text("100,-1\n")
    with pytest.raises(ParseError):
        ingest_counts(p)
    q = tmp_path / "order.csv"
    q.write_text("100,1\n102,1\n101,1\n")
    with pytest.raises(OrderingError, match="line 3"):
        ingest_counts(q)


def test_ingest_empty_file(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("\n")
    with pytest.raises(ParseError):
        ingest_counts(p)


def test_bin_max_example():
    b = bin_max(per_second([3, 9, 4, 4, 4, 8]), 3)
    assert b.lag == 3
    assert b.values.tolist() == [9, 8]


def test_bin_max_drops_partial_tail_and_validates():
    s = per_second(range(10))
    assert bin_max(s, 4).values.tolist() == [3, 7]
    with pytest.raises(ConfigError):
        bin_max(s, 0)
    with pytest.raises(ConfigError):
        bin_max(bin_max(s, 2), 3)  # not a multiple of the lag


def test_bin_max_of_daily_trace_has_1440_minutes():
    s = per_second(np.zeros(86_400))
    assert len(bin_max(s, 60)) == 1440


def test_binning_is_idempotent_at_same_lag():
    s = bin_max(per_second(np.arange(120)), 60)
    assert bin_max(s, 60).values.tolist() == s.values.tolist()


def test_write_then_read_roundtrip(tmp_path):
    s = bin_max(per_second(np.arange(600) % 37), 60)
    write_series(s, tmp_path / "m.csv")
    back = read_series(tmp_path / "m.csv")
    assert back.lag == 60 and back.start_time == s.start_time
    np.testing.assert_array_equal(back.values, s.values)


def test_timeseries_invariants():
    with pytest.raises(ConfigError):
        TimeSeries(0, 0, np.ones(3))
    with pytest.raises((ConfigError, ValueError)):
        TimeSeries(0, 1, np.array([1.0, -1.0]))
    s = per_second([1, 2])
    with pytest.raises(ValueError):
        s.values[0] = 5  # read-only


def test_window_at_bounds():
    s = per_second(range(10))
    hist, fut = window_at(s, 3, Window(4, 2))
    assert hist.tolist() == [0, 1, 2, 3] and fut.tolist() == [4, 5]
    with pytest.raises(RangeError):
        window_at(s, 2, Window(4, 2))
    with pytest.raises(RangeError):
        window_at(s, 8, Window(4, 2))


def test_synthetic_is_seeded_and_non_negative():
    prof = SyntheticProfile(100, 80, (Spike(10, 5, 500),), noise_seed=3, noise_std=50)
    a, b = generate_synthetic(prof, 0.1), generate_synthetic(prof, 0.1)
    assert len(a) == 8640
    np.testing.assert_array_equal(a.values, b.values)
    assert a.values.min() >= 0
    assert np.all(a.values == np.rint(a.values))
    c = generate_synthetic(SyntheticProfile(100, 80, (Spike(10, 5, 500),), noise_seed=4, noise_std=50), 0.1)
    assert not np.array_equal(a.values, c.values)


def test_synthetic_spike_adds_height():
    flat = generate_synthetic(SyntheticProfile(100), 0.01)
    spiky = generate_synthetic(SyntheticProfile(100, spike_schedule=(Spike(10, 5, 50),)), 0.01)
    diff = spiky.values - flat.values
    assert diff[10:15].tolist() == [50] * 5
    assert diff.sum() == 250


def test_ingest_from_written_trace(tmp_path):
    p = write_trace(tmp_path / "w.csv", [1, 2, 3])
    assert ingest_counts(p).values.tolist() == [1, 2, 3]
