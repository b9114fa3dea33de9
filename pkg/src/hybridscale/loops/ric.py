"""Reactive infrastructure control: threshold policies over fixed evaluation periods.

Time is cut into aligned evaluation periods of ``eval_period`` seconds. A
period "crosses" the scale-out threshold when the observed workload exceeds
``R_T + kappa * min_alpha`` in at least ``min_crossings`` seconds. Scale-out
fires at the end of a period once ``n`` consecutive periods have crossed.
Scale-in is symmetric around ``R_T - kappa * min_alpha``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Mapping

from ..catalog import Allocation, InstanceCatalog
from ..dco import DcoSolution, solve_scale_in, solve_scale_out
from ..errors import ConfigError

NONE, SCALE_OUT, SCALE_IN = "none", "scale_out", "scale_in"


@dataclass(frozen=True)
class RicPolicy:
    kappa: float = 1.0
    n: int = 3  # consecutive crossing periods needed to fire
    eval_period: int = 300  # seconds
    cooldown: int = 300  # seconds after a trigger during which periods do not count
    min_crossings: int = 1  # per period
    offset: float | None = None  # absolute threshold offset in Rps, replaces kappa*min_alpha
    scale_in: bool = True
    basis: str = "avg"  # which observed delta drives the DCO: "avg" or "max"
    # "overlay": RIC owns the instances it launches and its scale-in only releases those;
    # proactive planning runs against its own instances and adopts reactive ones when it
    # scales out. "shared": one pool, both loops plan against all of it.
    ownership: str = "overlay"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ConfigError("RIC kappa must be positive")
        if self.n < 1 or self.min_crossings < 1:
            raise ConfigError("RIC n and min_crossings must be >= 1")
        if self.eval_period < 1:
            raise ConfigError("RIC eval_period must be >= 1 second")
        if self.cooldown < 0:
            raise ConfigError("RIC cooldown must be >= 0")
        if self.basis not in ("avg", "max"):
            raise ConfigError(f"RIC basis must be 'avg' or 'max', got {self.basis!r}")
        if self.ownership not in ("overlay", "shared"):
            raise ConfigError(f"RIC ownership must be 'overlay' or 'shared', got {self.ownership!r}")

    def margin(self, min_alpha: float) -> float:
        return self.offset if self.offset is not None else self.kappa * min_alpha


@dataclass
class _Period:
    index: int
    out_crossings: int = 0
    in_crossings: int = 0
    # observed distance from R_T over seconds on the respective side of it
    excess_sum: float = 0.0
    excess_n: int = 0
    excess_max: float = 0.0
    short_sum: float = 0.0
    short_n: int = 0
    short_max: float = 0.0


@dataclass
class RicState:
    closed: deque = field(default_factory=deque)
    current: _Period | None = None
    quiet_until: int = 0  # periods ending before this time are ignored


@dataclass(frozen=True)
class RicSignal:
    trigger: str
    avg_delta: float = 0.0
    max_delta: float = 0.0
    time: int | None = None

    def delta(self, basis: str) -> float:
        return self.max_delta if basis == "max" else self.avg_delta


def ric_observe(
    t: int,
    omega_t: float,
    state: RicState,
    r_t: float,
    policy: RicPolicy,
    min_alpha: float,
) -> RicSignal:
    """Record second ``t`` and report whether a policy fires at the end of its period.

    ``state`` is updated in place. The same observation sequence always
    produces the same signals.
    """
    idx = t // policy.eval_period
    cur = state.current
    if cur is None or cur.index != idx:
        if cur is not None and cur.index != idx - 1:
            state.closed.clear()  # a gap in observations breaks consecutiveness
        cur = state.current = _Period(idx)
    margin = policy.margin(min_alpha)
    if omega_t > r_t + margin:
        cur.out_crossings += 1
    if omega_t < r_t - margin:
        cur.in_crossings += 1
    if omega_t > r_t:
        d = omega_t - r_t
        cur.excess_sum += d
        cur.excess_n += 1
        cur.excess_max = max(cur.excess_max, d)
    elif omega_t < r_t:
        d = r_t - omega_t
        cur.short_sum += d
        cur.short_n += 1
        cur.short_max = max(cur.short_max, d)

    if t % policy.eval_period != policy.eval_period - 1:
        return RicSignal(NONE, time=t)

    # period complete
    state.current = None
    if t + 1 <= state.quiet_until:
        state.closed.clear()
        return RicSignal(NONE, time=t)
    state.closed.append(cur)
    while len(state.closed) > policy.n:
        state.closed.popleft()
    if len(state.closed) < policy.n:
        return RicSignal(NONE, time=t)
    span = list(state.closed)
    signal = RicSignal(NONE, time=t)
    if all(p.out_crossings >= policy.min_crossings for p in span):
        n_ex = sum(p.excess_n for p in span)
        signal = RicSignal(
            SCALE_OUT,
            sum(p.excess_sum for p in span) / n_ex,
            max(p.excess_max for p in span),
            t,
        )
    elif policy.scale_in and all(p.in_crossings >= policy.min_crossings for p in span):
        n_sh = sum(p.short_n for p in span)
        signal = RicSignal(
            SCALE_IN,
            sum(p.short_sum for p in span) / n_sh,
            max(p.short_max for p in span),
            t,
        )
    if signal.trigger != NONE:
        state.closed.clear()
        state.quiet_until = t + 1 + policy.cooldown
    return signal


def ric_react(
    signal: RicSignal,
    basis: str,
    current: Mapping[str, int],
    catalog: InstanceCatalog,
) -> DcoSolution | None:
    """Size the reactive change with the same DCO used by PIC."""
    if signal.trigger == NONE:
        raise ConfigError("ric_react needs a scale_out or scale_in trigger")
    delta = signal.delta(basis)
    if delta <= 0:
        return None
    if signal.trigger == SCALE_OUT:
        return solve_scale_out(delta, catalog)
    if not len(current):
        return None
    return solve_scale_in(delta, current, catalog)


class ReactiveLoop:
    """Stateful wrapper used by the simulator."""

    def __init__(self, policy: RicPolicy, catalog: InstanceCatalog):
        self.policy = policy
        self.catalog = catalog
        self.state = RicState()
        self.min_alpha = catalog.min_alpha

    def observe(self, t: int, omega_t: float, r_t: float) -> RicSignal:
        return ric_observe(t, omega_t, self.state, r_t, self.policy, self.min_alpha)

    def react(self, signal: RicSignal, current: Allocation) -> DcoSolution | None:
        return ric_react(signal, self.policy.basis, current, self.catalog)
