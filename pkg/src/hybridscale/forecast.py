"""Workload forecasting: pluggable forecasters, estimator functions and evaluation."""

from __future__ import annotations

import itertools
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InsufficientDataError
from .trace import TimeSeries, Window

GRID = tuple(round(0.05 + 0.15 * k, 2) for k in range(7))  # 0.05 .. 0.95


class Forecaster:
    """Base class. Subclasses implement ``_predict`` and ``min_history``."""

    name = "base"

    @property
    def min_history(self) -> int:
        return 1

    def _predict(self, history: np.ndarray, horizon: int, origin: int | None) -> np.ndarray:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


@dataclass(frozen=True)
class Forecast:
    values: np.ndarray
    origin: int | None = None

    def __len__(self) -> int:
        return self.values.size


def predict(fc: Forecaster, history: Sequence[float], f: int, origin: int | None = None) -> Forecast:
    """Forecast ``f`` points after ``history``; outputs are clamped at zero.

    ``origin`` is the index of the last history point in the underlying
    series. Only index-aware forecasters (the test oracle) need it.
    """
    if f < 1:
        raise ConfigError(f"forecast horizon must be >= 1, got {f}")
    hist = np.asarray(history, dtype=np.float64)
    if hist.size < fc.min_history:
        raise InsufficientDataError(
            f"{fc.name} needs at least {fc.min_history} history points, got {hist.size}",
            minimum=fc.min_history,
        )
    out = np.asarray(fc._predict(hist, f, origin), dtype=np.float64)
    if out.shape != (f,):
        raise DomainError(f"{fc.name} returned {out.shape} values for horizon {f}")
    return Forecast(np.maximum(out, 0.0), origin)


class SeasonalNaive(Forecaster):
    """Repeat the last full season. ``season_length=1`` is the plain naive forecast."""

    def __init__(self, season_length: int = 1):
        if season_length < 1:
            raise ConfigError("season_length must be >= 1")
        self.season_length = int(season_length)
        self.name = "naive" if season_length == 1 else "seasonal_naive"

    @property
    def min_history(self) -> int:
        return 1 if self.season_length == 1 else 2 * self.season_length

    def _predict(self, history, horizon, origin):
        m = self.season_length
        if m == 1:
            return np.full(horizon, history[-1])
        last = history[-m:]
        return np.resize(last, horizon)


class MovingPercentile(Forecaster):
    """Flat forecast at a percentile of the trailing ``window`` points."""

    name = "moving_percentile"

    def __init__(self, window: int = 60, percentile: float = 50.0):
        if window < 1 or not 0 < percentile <= 100:
            raise ConfigError("moving_percentile needs window >= 1 and 0 < percentile <= 100")
        self.window = int(window)
        self.percentile = float(percentile)

    @property
    def min_history(self) -> int:
        return self.window

    def _predict(self, history, horizon, origin):
        level = np.percentile(history[-self.window :], self.percentile)
        return np.full(horizon, level)


class PerfectOracle(Forecaster):
    """Test-only forecaster that returns the realized future of a bound series."""

    name = "oracle"

    def __init__(self, truth: Sequence[float] | None = None):
        self.truth = None if truth is None else np.asarray(truth, dtype=np.float64)

    def bind(self, truth: Sequence[float]) -> "PerfectOracle":
        return PerfectOracle(truth)

    def _predict(self, history, horizon, origin):
        if self.truth is None:
            raise ConfigError("oracle forecaster is not bound to a series")
        if origin is None:
            raise ConfigError("oracle forecaster needs the origin index")
        out = self.truth[origin + 1 : origin + 1 + horizon]
        if out.size < horizon:  # past the end of the trace: hold the last value
            fill = self.truth[-1] if self.truth.size else 0.0
            out = np.concatenate([out, np.full(horizon - out.size, fill)])
        return out


class HoltWinters(Forecaster):
    """Additive Holt-Winters with (alpha, beta, gamma) chosen by grid search.

    Every grid point is smoothed simultaneously (vectorized over the grid);
    the one with the lowest in-sample one-step RMSE wins, ties going to the
    earliest grid point. ``season_length=None`` gives Holt's linear trend.
    """

    name = "holt_winters"

    def __init__(self, season_length: int | None = None, grid: Sequence[float] = GRID):
        if season_length is not None and season_length < 2:
            raise ConfigError("season_length must be >= 2 (or None for no seasonality)")
        self.season_length = season_length
        self.grid = tuple(float(g) for g in grid)

    @property
    def min_history(self) -> int:
        return 3 if self.season_length is None else 2 * self.season_length

    def fit(self, history: np.ndarray) -> dict[str, Any]:
        """Return the selected parameters and the final smoothing state."""
        y = np.asarray(history, dtype=np.float64)
        m = self.season_length
        if m is None:
            params = np.array(list(itertools.product(self.grid, self.grid)))
            a, b = params[:, 0], params[:, 1]
            level = np.full(len(params), y[0])
            trend = np.full(len(params), y[1] - y[0])
            sse = np.zeros(len(params))
            for t in range(1, y.size):
                pred = level + trend
                err = y[t] - pred
                sse += err * err
                new_level = pred + a * err
                trend = b * (new_level - level) + (1 - b) * trend
                level = new_level
            k = int(np.argmin(sse))
            return {"alpha": a[k], "beta": b[k], "gamma": None, "level": level[k],
                    "trend": trend[k], "season": None, "rmse": math.sqrt(sse[k] / (y.size - 1))}

        params = np.array(list(itertools.product(self.grid, self.grid, self.grid)))
        a, b, g = params[:, 0], params[:, 1], params[:, 2]
        n_par = len(params)
        first, second = y[:m], y[m : 2 * m]
        slope = (second.mean() - first.mean()) / m
        # detrended seasonal start so that a pure ramp has zero seasonality
        offsets = np.arange(m) - (m - 1) / 2.0
        season0 = first - (first.mean() + slope * offsets)
        level = np.full(n_par, first.mean() + slope * (m - 1) / 2.0)
        trend = np.full(n_par, slope)
        season = np.tile(season0, (n_par, 1))
        sse = np.zeros(n_par)
        for t in range(m, y.size):
            idx = t % m
            s_old = season[:, idx]
            pred = level + trend + s_old
            err = y[t] - pred
            sse += err * err
            new_level = a * (y[t] - s_old) + (1 - a) * (level + trend)
            trend = b * (new_level - level) + (1 - b) * trend
            season[:, idx] = g * (y[t] - new_level) + (1 - g) * s_old
            level = new_level
        k = int(np.argmin(sse))
        # rotate so that position 0 is the season slot of the first forecast point
        nxt = y.size % m
        s_k = np.roll(season[k], -nxt)
        return {"alpha": a[k], "beta": b[k], "gamma": g[k], "level": level[k],
                "trend": trend[k], "season": s_k, "rmse": math.sqrt(sse[k] / (y.size - m))}

    def _predict(self, history, horizon, origin):
        st = self.fit(history)
        h = np.arange(1, horizon + 1)
        out = st["level"] + h * st["trend"]
        if st["season"] is not None:
            out = out + np.resize(st["season"], horizon)
        return out


FORECASTERS = {
    "naive": lambda **kw: SeasonalNaive(1),
    "seasonal_naive": SeasonalNaive,
    "holt_winters": HoltWinters,
    "moving_percentile": MovingPercentile,
    "oracle": PerfectOracle,
}


def make_forecaster(spec: str | Mapping[str, Any]) -> Forecaster:
    """Build a forecaster from ``"name"`` or ``{"model": name, **params}``."""
    if isinstance(spec, str):
        spec = {"model": spec}
    params = dict(spec)
    model = params.pop("model", None)
    if model not in FORECASTERS:
        raise ConfigError(f"unknown forecaster {model!r}; known: {sorted(FORECASTERS)}")
    try:
        return FORECASTERS[model](**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for forecaster {model!r}: {exc}") from None


@dataclass(frozen=True)
class Estimator:
    """Reduction of a multi-step forecast to one planning value."""

    kind: str = "max"
    p: float | None = None

    def __post_init__(self):
        if self.kind not in ("max", "mean", "median", "percentile"):
            raise ConfigError(f"unknown estimator kind {self.kind!r}")
        if self.kind == "percentile" and (self.p is None or not 0 < self.p <= 100):
            raise ConfigError("percentile estimator needs 0 < p <= 100")

    def __call__(self, values: Sequence[float]) -> float:
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            raise DomainError("cannot reduce an empty forecast")
        if self.kind == "max":
            return float(v.max())
        if self.kind == "mean":
            # keep the result inside [min, max] despite rounding
            return float(min(max(v.mean(), v.min()), v.max()))
        if self.kind == "median":
            return float(np.median(v))
        return float(np.percentile(v, self.p))

    def __str__(self) -> str:
        return f"p{self.p:g}" if self.kind == "percentile" else self.kind

    @classmethod
    def parse(cls, text: str) -> "Estimator":
        """Accepts ``max``, ``mean``, ``median``, ``p90``, ``percentile(90)`` or ``percentile:90``."""
        s = str(text).strip().lower()
        if s in ("max", "mean", "median"):
            return cls(s)
        m = re.fullmatch(r"(?:p|percentile[:(])\s*([0-9.]+)\)?", s)
        if not m:
            raise ConfigError(f"cannot parse estimator {text!r}")
        return cls("percentile", float(m.group(1)))


def estimate_one_step(forecast: Forecast | Sequence[float], phi: Estimator) -> float:
    values = forecast.values if isinstance(forecast, Forecast) else forecast
    return phi(values)


def rmse(predicted: Sequence[float], actual: Sequence[float]) -> float:
    p = np.asarray(predicted, dtype=np.float64)
    a = np.asarray(actual, dtype=np.float64)
    if p.shape != a.shape or p.size < 1:
        raise DomainError(f"rmse needs equal non-empty sequences, got {p.shape} and {a.shape}")
    d = p - a
    return float(np.sqrt(np.mean(d * d)))


@dataclass(frozen=True)
class WindowRecord:
    window_index: int
    origin: int
    omega_hat: float
    actual_max: float
    rmse: float


def window_origins(n: int, win: Window) -> range:
    """Origins ``t`` of every full (history, future) window in a series of length ``n``."""
    return range(win.lookback - 1, n - win.horizon, win.slide)


def rolling_evaluate(
    series: TimeSeries,
    fc: Forecaster,
    win: Window,
    phi: Estimator,
    workers: int = 1,
) -> list[WindowRecord]:
    """Slide a (lookback, horizon) window over the series and score each forecast."""
    origins = window_origins(len(series), win)
    if len(origins) == 0:
        raise InsufficientDataError(
            f"series of {len(series)} points has no full window "
            f"(needs {win.lookback + win.horizon})",
            minimum=win.lookback + win.horizon,
        )
    values = series.values

    def one(args):
        k, t = args
        hist = values[t - win.lookback + 1 : t + 1]
        future = values[t + 1 : t + 1 + win.horizon]
        fcst = predict(fc, hist, win.horizon, origin=t)
        return WindowRecord(k, t, estimate_one_step(fcst, phi), float(future.max()),
                            rmse(fcst.values, future))

    jobs = list(enumerate(origins))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, jobs))
    return [one(j) for j in jobs]
