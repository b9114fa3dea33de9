"""Responsive software control: split forecast arrivals into full, partial and dropped."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..catalog import InstanceCatalog, allocation_stats
from ..errors import DomainError
from ..forecast import Forecaster, SeasonalNaive, predict
from ..trace import Window

SCENARIO_FULL = "scenario1"  # forecast fits in full-response capacity
SCENARIO_SATURATED = "scenario2"  # forecast exceeds even partial-response capacity
SCENARIO_MIXED = "scenario3"


@dataclass(frozen=True)
class SplitDecision:
    zeta: float  # served fully
    eta: float  # served partially
    theta: float  # not served
    origin: str

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.zeta, self.eta, self.theta)


@dataclass(frozen=True)
class RscConfig:
    """Window sizes are counted in seconds (points of the per-second series)."""

    window: Window = field(default_factory=lambda: Window(1800, 1, 1))
    forecaster: Forecaster = field(default_factory=lambda: SeasonalNaive(1))


def _fits(i: float, ratio: float, alpha_t: float, omega_hat: float) -> bool:
    return i + ratio * (alpha_t - i) >= omega_hat


def rsc_split(omega_hat: float, alpha_t: float, beta_t: float) -> SplitDecision:
    """Plan the full/partial/dropped split for one step.

    The mixed case uses the closed form of the descending search "largest
    integer i <= alpha_T with i + (beta/alpha)(alpha_T - i) >= omega_hat",
    i = floor((beta_T - omega_hat) / (ratio - 1)), nudged by one step in
    either direction so float rounding cannot disagree with the search.
    """
    if not alpha_t > 0:
        raise DomainError(f"alpha_T must be positive, got {alpha_t!r}")
    if beta_t < alpha_t:
        raise DomainError(f"beta_T ({beta_t}) must be >= alpha_T ({alpha_t})")
    if omega_hat < 0:
        raise DomainError(f"omega_hat must be non-negative, got {omega_hat!r}")
    if omega_hat <= alpha_t:
        return SplitDecision(alpha_t, 0.0, 0.0, SCENARIO_FULL)
    if omega_hat > beta_t:
        return SplitDecision(0.0, beta_t, omega_hat - beta_t, SCENARIO_SATURATED)
    ratio = beta_t / alpha_t
    top = math.floor(alpha_t)
    i = min(top, max(0, math.floor((beta_t - omega_hat) / (ratio - 1.0))))
    while i < top and _fits(i + 1, ratio, alpha_t, omega_hat):
        i += 1
    while i > 0 and not _fits(i, ratio, alpha_t, omega_hat):
        i -= 1
    if not _fits(i, ratio, alpha_t, omega_hat):
        # the search finds nothing and leaves the zero-initialised split
        return SplitDecision(0.0, 0.0, 0.0, SCENARIO_MIXED)
    return SplitDecision(float(i), omega_hat - i, 0.0, SCENARIO_MIXED)


def split_for_capacity(omega_hat: float, alpha_t: float, beta_t: float) -> SplitDecision:
    """``rsc_split`` that tolerates an empty allocation (everything is dropped)."""
    if alpha_t <= 0:
        return SplitDecision(0.0, 0.0, max(omega_hat, 0.0), SCENARIO_SATURATED)
    return rsc_split(omega_hat, alpha_t, beta_t)


def rsc_schedule(
    recent: Sequence[float],
    alloc: Mapping[str, int],
    cfg: RscConfig,
    catalog: InstanceCatalog,
    origin: int | None = None,
) -> list[SplitDecision]:
    """One split per forecast step (the RSC loop consumes the whole forecast)."""
    fc = predict(cfg.forecaster, recent, cfg.window.horizon, origin=origin)
    stats = allocation_stats(alloc, catalog)
    return [split_for_capacity(float(w), stats.aggregate_alpha, stats.aggregate_beta) for w in fc.values]


def rsc_step(
    recent: Sequence[float],
    alloc: Mapping[str, int],
    cfg: RscConfig,
    catalog: InstanceCatalog,
    origin: int | None = None,
) -> SplitDecision:
    return rsc_schedule(recent, alloc, cfg, catalog, origin)[0]
