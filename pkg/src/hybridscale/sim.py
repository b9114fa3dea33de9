"""Second-by-second replay of a trace through a wired controller, with hourly accounting."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .catalog import Allocation, allocation_stats
from .coordinator import Controller
from .errors import ConfigError, InsufficientDataError
from .forecast import predict, rmse
from .loops import NONE, SCALE_IN, SplitDecision, pic_step, split_for_capacity
from .trace import TimeSeries, bin_max

PIC_ONLY, PIC_RSC, PIC_RSC_RIC = "pic_only", "pic_rsc", "pic_rsc_ric"
MODES = (PIC_ONLY, PIC_RSC, PIC_RSC_RIC)
_MODE_ALIASES = {"pic": PIC_ONLY, "pic+rsc": PIC_RSC, "pic+rsc+ric": PIC_RSC_RIC}


def parse_mode(mode: str) -> str:
    m = _MODE_ALIASES.get(mode, mode)
    if m not in MODES:
        raise ConfigError(f"unknown mode {mode!r}; use one of {list(_MODE_ALIASES)}")
    return m


def serve_second(omega_t: float, plan: SplitDecision, alpha_t: float, beta_t: float) -> tuple[float, float, float]:
    """Serve one second of arrivals under a split plan.

    Up to ``zeta`` arrivals get full responses. If the plan enables partial
    responses, the capacity left over by the full responses is converted at
    the beta/alpha rate and serves the rest partially. Whatever remains is
    dropped.
    """
    full = min(omega_t, plan.zeta)
    rest = omega_t - full
    partial = 0.0
    if plan.eta > 0 and alpha_t > 0:
        # small epsilon so an exact-capacity product is not floored one short
        cap = math.floor((1.0 - full / alpha_t) * beta_t + 1e-9)
        partial = min(rest, max(cap, 0))
    return full, partial, rest - partial


@dataclass
class HourRecord:
    hour: int
    start: int  # seconds since trace start
    omega_hat: float
    actual_max: float
    forecast_rmse: float | None
    alpha_T: int
    peak_alpha: int
    cost: Decimal
    allocation: dict
    billed_allocation: dict
    pic_action: str
    requests: float = 0.0
    served_full: float = 0.0
    served_partial: float = 0.0
    dropped: float = 0.0
    above_alpha: float = 0.0
    est_zeta: float = 0.0
    est_eta: float = 0.0
    est_theta: float = 0.0
    ric_events: list = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["cost"] = float(self.cost)
        return d


@dataclass
class SimReport:
    mode: str
    hours: list[HourRecord]
    aggregates: dict[str, Any]
    # optional per-second ledger: arrays "arrivals", "full", "partial", "dropped", "alpha"
    seconds: dict[str, np.ndarray] | None = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {"mode": self.mode, "hours": [h.to_dict() for h in self.hours],
                "aggregates": self.aggregates}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hour", "omega_hat", "actual_max", "alpha_T", "cost", "dropped", "partial"])
            for h in self.hours:
                w.writerow([h.hour, f"{h.omega_hat:.6g}", f"{h.actual_max:.6g}", h.alpha_T,
                            f"{h.cost:.4f}", f"{h.dropped:.6g}", f"{h.served_partial:.6g}"])

    @property
    def total_dropped(self) -> float:
        return self.aggregates["dropped"]


class _Engine:
    def __init__(self, series: TimeSeries, controller: Controller, mode: str, record_seconds: bool = False):
        if series.lag != 1:
            raise ConfigError(f"simulation needs a lag-1 (per-second) series, got lag={series.lag}")
        self.mode = parse_mode(mode)
        self.ctrl = controller.bind(series)
        self.catalog = self.ctrl.catalog
        self.series = series
        self.values = series.values
        self.vals = series.values.tolist()
        self.minute = bin_max(series, self.ctrl.pic_lag).values
        opt = self.ctrl.options
        self.billing = opt.billing_period
        self.boot_delay = opt.boot_delay
        self.start = math.ceil(self.ctrl.warmup / self.billing) * self.billing
        self.n_hours = (len(series) - self.start) // self.billing
        if self.n_hours < 1:
            raise InsufficientDataError(
                f"trace of {len(series)} s is shorter than warm-up {self.start} s plus one "
                f"{self.billing} s period",
                minimum=self.start + self.billing,
            )
        self.alloc: Allocation = self.ctrl.state.allocation
        self.pending: list[tuple[int, Allocation]] = []  # (effective time, additions)
        self.deferred = Allocation()  # removals that take effect at the next boundary
        self.reactive = Allocation()  # committed instances launched by RIC (overlay ownership)
        self.overlay = self.ctrl.ric_policy.ownership == "overlay"
        self._now = 0
        self._refresh()
        self.ledger = None
        if record_seconds:
            n = self.n_hours * self.billing
            self.ledger = {k: np.zeros(n) for k in ("arrivals", "full", "partial", "dropped", "alpha")}

    # -- allocation bookkeeping -------------------------------------------------
    def _refresh(self):
        st = allocation_stats(self.alloc, self.catalog)
        self.alpha_t = st.aggregate_alpha
        self.beta_t = st.aggregate_beta
        self.ctrl.state.allocation = self.alloc
        self.version = getattr(self, "version", 0) + 1
        # RIC thresholds follow committed capacity: booting instances in, deferred removals out
        if self.pending or self.deferred:
            self.ric_capacity = allocation_stats(self._committed() - self.deferred, self.catalog).aggregate_alpha
        else:
            self.ric_capacity = self.alpha_t

    def _committed(self) -> Allocation:
        out = self.alloc
        for _, a in self.pending:
            out = out + a
        return out

    def _schedule_add(self, change: Allocation, at: int):
        if at <= self._now:
            self.alloc = self.alloc + change
        else:
            self.pending.append((at, change))
            self.pending.sort(key=lambda p: p[0])
        self._refresh()

    def _remove(self, change: Allocation):
        # remove from running instances first, then from ones still booting
        take = Allocation({k: min(v, self.alloc[k]) for k, v in change.items()})
        self.alloc = self.alloc - take
        rest = change - take
        kept = []
        for at, a in reversed(self.pending):
            if rest:
                cut = Allocation({k: min(v, a[k]) for k, v in rest.items()})
                a, rest = a - cut, rest - cut
            if a:
                kept.append((at, a))
        self.pending = sorted(kept, key=lambda p: p[0])
        self._refresh()

    def _activate(self, t: int):
        changed = False
        while self.pending and self.pending[0][0] <= t:
            self.alloc = self.alloc + self.pending.pop(0)[1]
            changed = True
        if changed:
            self._refresh()

    # -- main loop ----------------------------------------------------------------
    def run(self) -> SimReport:
        ctrl, vals = self.ctrl, self.vals
        lag = ctrl.pic_lag
        pw = ctrl.pic.window
        rw = ctrl.rsc.window
        rsc_on = self.mode != PIC_ONLY
        ric_on = self.mode == PIC_RSC_RIC
        ric = ctrl.ric
        hours: list[HourRecord] = []

        for h in range(self.n_hours):
            s = self.start + h * self.billing
            self._now = s
            self._activate(s)
            if self.deferred:
                gone, self.deferred = self.deferred, Allocation()
                self._remove(gone)
                self.reactive = self.reactive - Allocation(
                    {k: min(v, self.reactive[k]) for k, v in gone.items()})

            # PIC decision for the coming period, planned against the capacity it owns
            m = s // lag
            history = self.minute[m - pw.lookback : m]
            dec = pic_step(history, self._committed() - self.reactive, ctrl.pic, self.catalog, origin=m - 1)
            if dec.action == "add":
                # reactive instances of the wanted types are handed over instead of launching duplicates
                adopt = Allocation({k: min(v, self.reactive[k]) for k, v in dec.change.items()})
                self.reactive = self.reactive - adopt
                if dec.change - adopt:
                    self._schedule_add(dec.change - adopt, s + self.boot_delay)
            elif dec.action == "remove":
                self._remove(dec.change)
            future = self.minute[m : m + pw.horizon]
            f_rmse = rmse(dec.forecast.values, future) if future.size == pw.horizon else None

            billed = self._committed()
            rec = HourRecord(
                hour=s // self.billing,
                start=s,
                omega_hat=dec.omega_hat,
                actual_max=float(self.values[s : s + self.billing].max()),
                forecast_rmse=f_rmse,
                alpha_T=allocation_stats(billed, self.catalog).aggregate_alpha,
                peak_alpha=0,
                cost=Decimal(0),
                allocation=billed.to_dict(),
                billed_allocation={},
                pic_action=dec.action,
            )

            plan_version = -1
            schedule: list[SplitDecision] = []
            plan_t0 = s
            full_plan = None
            peak = self.alpha_t
            req = sf_sum = sp_sum = dr_sum = above = ez = ee = et = 0.0
            for t in range(s, s + self.billing):
                self._now = t
                if self.pending and self.pending[0][0] <= t:
                    self._activate(t)
                a_t, b_t = self.alpha_t, self.beta_t
                if a_t > peak:
                    peak = a_t
                if rsc_on:
                    if plan_version != self.version or (t - self.start) % rw.slide == 0:
                        fc = predict(ctrl.rsc.forecaster, vals_window(self.values, t, rw.lookback),
                                     rw.horizon, origin=t - 1)
                        schedule = [split_for_capacity(float(w), a_t, b_t) for w in fc.values]
                        plan_t0, plan_version = t, self.version
                    plan = schedule[min(t - plan_t0, len(schedule) - 1)]
                else:
                    if full_plan is None or full_plan.zeta != a_t:
                        full_plan = SplitDecision(float(a_t), 0.0, 0.0, "scenario1")
                    plan = full_plan
                omega = vals[t]
                sf, sp, dr = serve_second(omega, plan, a_t, b_t)
                if self.ledger is not None:
                    i = t - self.start
                    for k, v in (("arrivals", omega), ("full", sf), ("partial", sp), ("dropped", dr),
                                 ("alpha", a_t)):
                        self.ledger[k][i] = v
                req += omega
                sf_sum += sf
                sp_sum += sp
                dr_sum += dr
                if omega > a_t:
                    above += omega - a_t
                ez += plan.zeta
                ee += plan.eta
                et += plan.theta
                if ric_on:
                    sig = ric.observe(t, omega, self.ric_capacity)
                    if sig.trigger != NONE:
                        added = self._react(sig, t, rec)
                        if added:
                            billed = billed + added
            rec.requests, rec.served_full, rec.served_partial, rec.dropped = req, sf_sum, sp_sum, dr_sum
            rec.above_alpha = above
            rec.est_zeta, rec.est_eta, rec.est_theta = ez, ee, et
            rec.peak_alpha = max(peak, self.alpha_t)
            rec.billed_allocation = billed.to_dict()
            rec.cost = allocation_stats(billed, self.catalog).hourly_cost
            hours.append(rec)

        return SimReport(self.mode, hours, compute_metrics(hours, ua_threshold=self.catalog.min_alpha),
                         self.ledger)

    def _react(self, sig, t: int, rec: HourRecord) -> Allocation | None:
        """Apply a RIC trigger; returns instances launched now (billed this period)."""
        owned = self.reactive if self.overlay else self._committed()
        sol = self.ctrl.ric.react(sig, owned - self.deferred)
        event = {"time": t, "trigger": sig.trigger, "avg_delta": sig.avg_delta,
                 "max_delta": sig.max_delta, "change": {}, "capacity": 0, "cost": 0.0}
        rec.ric_events.append(event)
        if sol is None or not sol.change:
            return None
        event.update(change=sol.change.to_dict(), capacity=sol.capacity_change,
                     cost=float(sol.objective_cost))
        if sig.trigger == SCALE_IN:
            # instances are paid for the whole period, so they leave at its end
            self.deferred = self.deferred + sol.change
            self._refresh()
            return None
        if self.overlay:
            self.reactive = self.reactive + sol.change
        self._schedule_add(sol.change, t + 1 + self.boot_delay)
        return sol.change


def vals_window(values: np.ndarray, t: int, lookback: int) -> np.ndarray:
    return values[t - lookback : t]


def run(series: TimeSeries, controller: Controller, mode: str = PIC_RSC_RIC,
        record_seconds: bool = False) -> SimReport:
    """Replay ``series`` (lag 1 s) through ``controller`` in the given mode.

    The first PIC lookback span (rounded up to a billing boundary) is
    warm-up history only and is not simulated or billed. With
    ``record_seconds`` the report also carries the per-second service ledger.
    """
    return _Engine(series, controller, mode, record_seconds).run()


def billed_periods(n_seconds: int, warmup: int, billing: int = 3_600) -> int:
    start = math.ceil(warmup / billing) * billing
    return max(0, (n_seconds - start) // billing)


def compute_metrics(hours: Sequence[HourRecord], ua_threshold: float = 200.0) -> dict[str, Any]:
    """Aggregate hourly records.

    ``ua_threshold`` separates minor from severe under-allocation and
    marks over-allocation (capacity above the hour's peak by more than it).
    """
    tac = sum((h.cost for h in hours), Decimal("0.0000"))
    rmses = [h.forecast_rmse for h in hours if h.forecast_rmse is not None]
    sums = {k: float(sum(getattr(h, k) for h in hours)) for k in
            ("requests", "served_full", "served_partial", "dropped", "above_alpha",
             "est_zeta", "est_eta", "est_theta")}
    above, dropped = sums["above_alpha"], sums["dropped"]
    triggers = [e for h in hours for e in h.ric_events]
    return {
        "hours": len(hours),
        "requests": sums["requests"],
        "served_full": sums["served_full"],
        "served_partial": sums["served_partial"],
        "dropped": dropped,
        "above_alpha": above,
        "recovery_pct": (100.0 * (above - dropped) / above) if above > 0 else None,
        "estimated_split": [sums["est_zeta"], sums["est_eta"], sums["est_theta"]],
        "corrected_split": [sums["served_full"], sums["served_partial"], dropped],
        "rmse": float(np.mean(rmses)) if rmses else None,
        "wue": sum(1 for h in hours if h.omega_hat < h.actual_max),
        "rua": sum(1 for h in hours if h.alpha_T < h.actual_max),
        "ua_severe": sum(1 for h in hours if h.actual_max - h.alpha_T >= ua_threshold),
        "oa": sum(1 for h in hours if h.alpha_T - h.actual_max > ua_threshold),
        "ua_threshold": ua_threshold,
        "under_allocated_hours": sum(1 for h in hours if h.dropped > 0),
        "tac": float(tac),
        "tac_exact": str(tac),
        "ric_triggers": len(triggers),
        "ric_actions": sum(1 for e in triggers if e["change"]),
    }


def compare_forecasters(runs: Mapping[str, Sequence[HourRecord]]) -> dict[str, dict[str, Any]]:
    """Per-hour winner counts across forecasters run on the same trace.

    BWE credits the forecaster(s) whose estimate is closest to the hour's
    actual peak; BRA credits the one(s) whose allocated capacity is closest.
    Hours where every forecaster ties credit nobody.
    """
    names = list(runs)
    if len(names) < 2:
        raise ConfigError("comparing forecasters needs at least two runs")
    n = len(runs[names[0]])
    if any(len(runs[k]) != n for k in names):
        raise ConfigError("runs cover different numbers of hours")
    out = {k: {"bwe": 0, "bra": 0} for k in names}
    for i in range(n):
        recs = {k: runs[k][i] for k in names}
        for metric, dist in (("bwe", lambda r: abs(r.omega_hat - r.actual_max)),
                             ("bra", lambda r: abs(r.actual_max - r.alpha_T))):
            d = {k: dist(r) for k, r in recs.items()}
            best = min(d.values())
            winners = [k for k, v in d.items() if v == best]
            if len(winners) < len(names):
                for k in winners:
                    out[k][metric] += 1
    for k in names:
        agg = compute_metrics(runs[k])
        out[k].update(rmse=agg["rmse"], wue=agg["wue"], rua=agg["rua"], tac=agg["tac"])
    return out
