"""Proactive infrastructure control: forecast the next period, then add or remove capacity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..catalog import Allocation, InstanceCatalog, allocation_stats
from ..dco import DcoSolution, solve_scale_in, solve_scale_out
from ..forecast import Estimator, Forecast, Forecaster, HoltWinters, estimate_one_step, predict
from ..trace import Window

EPS = 1e-9


@dataclass(frozen=True)
class PicConfig:
    """PIC settings; window sizes are counted in points of the (minute-max) series."""

    window: Window = field(default_factory=lambda: Window(1440, 60, 60))
    forecaster: Forecaster = field(default_factory=HoltWinters)
    phi: Estimator = field(default_factory=Estimator)


@dataclass(frozen=True)
class PicDecision:
    action: str  # "add" | "remove" | "persist"
    change: Allocation
    omega_hat: float
    delta: float
    forecast: Forecast
    solution: DcoSolution | None = None


def pic_step(
    history: Sequence[float],
    current: Mapping[str, int],
    cfg: PicConfig,
    catalog: InstanceCatalog,
    origin: int | None = None,
) -> PicDecision:
    """One PIC decision.

    Any positive delta is covered by a scale-out. A negative delta smaller
    in magnitude than the smallest instance is treated as "no change".
    """
    fc = predict(cfg.forecaster, history, cfg.window.horizon, origin=origin)
    omega_hat = estimate_one_step(fc, cfg.phi)
    r_t = allocation_stats(current, catalog).aggregate_alpha
    delta = omega_hat - r_t
    if delta > EPS:
        sol = solve_scale_out(delta, catalog)
        return PicDecision("add", sol.change, omega_hat, delta, fc, sol)
    if -delta >= catalog.min_alpha and len(current):
        sol = solve_scale_in(-delta, current, catalog)
        if sol.change:
            return PicDecision("remove", sol.change, omega_hat, delta, fc, sol)
    return PicDecision("persist", Allocation(), omega_hat, delta, fc)
