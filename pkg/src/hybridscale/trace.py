"""Request-rate traces: ingestion, max-binning, windows and synthetic generation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, OrderingError, ParseError, RangeError


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly spaced, gap-free series of request counts.

    Point ``i`` is stamped ``start_time + i * lag``. ``values`` is stored as a
    read-only float64 array so the series can be shared between workers.
    """

    start_time: int
    lag: int
    values: np.ndarray

    def __post_init__(self):
        if int(self.lag) != self.lag or self.lag < 1:
            raise ConfigError(f"lag must be a positive integer, got {self.lag!r}")
        arr = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if arr.size < 1:
            raise ConfigError("a time series needs at least one point")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ConfigError("series values must be finite and non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "lag", int(self.lag))
        object.__setattr__(self, "start_time", int(self.start_time))

    def __len__(self) -> int:
        return self.values.size

    def timestamp(self, i: int) -> int:
        return self.start_time + i * self.lag

    @property
    def end_time(self) -> int:
        """Timestamp of the last point."""
        return self.timestamp(len(self) - 1)


@dataclass(frozen=True)
class Window:
    lookback: int
    horizon: int
    slide: int = 1

    def __post_init__(self):
        for name in ("lookback", "horizon", "slide"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"window {name} must be a positive integer, got {v!r}")


def ingest_counts(path: str | Path, format: str = "csv_per_second") -> TimeSeries:
    """Read ``epoch_seconds,count`` rows into a lag-1 series.

    Missing seconds are filled with zero arrivals.
    """
    if format != "csv_per_second":
        raise ConfigError(f"unsupported trace format {format!r}")
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        return _parse_rows(fh)


def _parse_rows(lines: Iterable[str]) -> TimeSeries:
    stamps: list[int] = []
    counts: list[float] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'epoch_seconds,count', got {line!r}", lineno)
        try:
            ts = int(parts[0])
            count = float(parts[1])
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        if not math.isfinite(count) or count < 0:
            raise ParseError(f"count must be a non-negative number, got {parts[1]!r}", lineno)
        if stamps and ts <= stamps[-1]:
            raise OrderingError(
                f"line {lineno}: timestamp {ts} does not follow {stamps[-1]}"
            )
        stamps.append(ts)
        counts.append(count)
    if not stamps:
        raise ParseError("trace file has no rows")
    start = stamps[0]
    values = np.zeros(stamps[-1] - start + 1, dtype=np.float64)
    values[np.asarray(stamps) - start] = counts
    return TimeSeries(start, 1, values)


def write_series(series: TimeSeries, path: str | Path) -> None:
    """Write a series in the same CSV format ``ingest_counts`` reads.

    Each row carries the timestamp of the point, so a binned series written
    here keeps its lag only implicitly (through its row spacing).
    """
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for i, v in enumerate(series.values):
            fv = float(v)
            text = str(int(fv)) if fv.is_integer() else repr(fv)
            fh.write(f"{series.timestamp(i)},{text}\n")


def read_series(path: str | Path, lag: int | None = None) -> TimeSeries:
    """Read a series CSV, inferring the lag from row spacing when not given."""
    path = Path(path)
    stamps, vals = [], []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                a, b = line.split(",")
                stamps.append(int(a))
                vals.append(float(b))
            except ValueError:
                raise ParseError(f"malformed row {line!r}", lineno) from None
    if not stamps:
        raise ParseError("series file has no rows")
    if lag is None:
        lag = stamps[1] - stamps[0] if len(stamps) > 1 else 1
    if lag < 1:
        raise OrderingError("timestamps must be increasing")
    if len(stamps) > 1 and any(b - a != lag for a, b in zip(stamps, stamps[1:])):
        # irregular spacing: only a lag-1 file can be gap-filled safely
        if lag != 1:
            raise ParseError("series rows are not evenly spaced")
        return _parse_rows(f"{s},{v}" for s, v in zip(stamps, vals))
    return TimeSeries(stamps[0], lag, np.asarray(vals))


def bin_max(series: TimeSeries, bin_lag: int) -> TimeSeries:
    """Max-aggregate consecutive bins of ``bin_lag`` seconds; a partial tail is dropped."""
    if int(bin_lag) != bin_lag or bin_lag < 1 or bin_lag % series.lag:
        raise ConfigError(
            f"bin_lag={bin_lag!r} must be a positive multiple of the series lag {series.lag}"
        )
    per_bin = int(bin_lag) // series.lag
    n_bins = len(series) // per_bin
    if n_bins < 1:
        raise ConfigError(
            f"series of {len(series)} points is shorter than one bin of {per_bin} points"
        )
    binned = series.values[: n_bins * per_bin].reshape(n_bins, per_bin).max(axis=1)
    return TimeSeries(series.start_time, int(bin_lag), binned)


def window_at(series: TimeSeries | Sequence[float], t: int, win: Window) -> tuple[np.ndarray, np.ndarray]:
    values = series.values if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)
    if t - win.lookback + 1 < 0 or t + win.horizon >= values.size:
        raise RangeError(
            f"window (lookback={win.lookback}, horizon={win.horizon}) at t={t} "
            f"does not fit a series of length {values.size}"
        )
    return values[t - win.lookback + 1 : t + 1], values[t + 1 : t + 1 + win.horizon]


@dataclass(frozen=True)
class Spike:
    offset: int  # seconds from trace start
    width: int
    height: float


@dataclass(frozen=True)
class SyntheticProfile:
    base_rate: float
    diurnal_amplitude: float = 0.0
    spike_schedule: tuple[Spike, ...] = field(default_factory=tuple)
    noise_seed: int = 0
    noise_std: float = 0.0
    period: int = 86_400
    phase: float = 0.0
    start_time: int = 0

    def __post_init__(self):
        if not self.base_rate > 0:
            raise ConfigError("base_rate must be positive")
        if self.diurnal_amplitude < 0 or self.noise_std < 0:
            raise ConfigError("amplitude and noise_std must be non-negative")
        if self.period < 1:
            raise ConfigError("period must be a positive number of seconds")
        spikes = tuple(s if isinstance(s, Spike) else Spike(*s) for s in self.spike_schedule)
        for s in spikes:
            if s.offset < 0 or s.width < 1:
                raise ConfigError(f"bad spike {s}")
        object.__setattr__(self, "spike_schedule", spikes)


def generate_synthetic(profile: SyntheticProfile, days: float) -> TimeSeries:
    """Seeded per-second trace: sinusoidal day cycle, spikes, then gaussian noise.

    Values are rounded to whole requests and clipped at zero.
    """
    n = int(round(days * 86_400))
    if n < 1:
        raise ConfigError("days must cover at least one second")
    t = np.arange(n, dtype=np.float64)
    clean = profile.base_rate + profile.diurnal_amplitude * np.sin(
        2 * np.pi * t / profile.period + profile.phase
    )
    for s in profile.spike_schedule:
        clean[s.offset : s.offset + s.width] += s.height
    if profile.noise_std > 0:
        rng = np.random.default_rng(profile.noise_seed)
        clean = clean + rng.normal(0.0, profile.noise_std, size=n)
    return TimeSeries(profile.start_time, 1, np.maximum(np.rint(clean), 0.0))
