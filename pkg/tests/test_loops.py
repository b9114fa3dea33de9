import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridscale.catalog import Allocation, allocation_stats
from hybridscale.errors import ConfigError, DomainError
from hybridscale.forecast import Estimator, PerfectOracle, SeasonalNaive
from hybridscale.loops import (
    NONE,
    SCALE_IN,
    SCALE_OUT,
    PicConfig,
    ReactiveLoop,
    RicPolicy,
    RicSignal,
    RicState,
    RscConfig,
    pic_step,
    ric_observe,
    ric_react,
    rsc_split,
    rsc_step,
    split_for_capacity,
)
from hybridscale.trace import Window


def literal_split(omega_hat, alpha_t, beta_t):
    """Descending search, one candidate at a time."""
    if omega_hat <= alpha_t:
        return (alpha_t, 0, 0)
    if omega_hat > beta_t:
        return (0, beta_t, omega_hat - beta_t)
    r = beta_t / alpha_t
    i = math.floor(alpha_t)
    while i >= 0:
        if i + r * (alpha_t - i) >= omega_hat:
            return (i, omega_hat - i, 0)
        i -= 1
    return (0, 0, 0)


# -- PIC -------------------------------------------------------------------------

def flat_cfg(level_window=Window(4, 2, 2)):
    return PicConfig(level_window, SeasonalNaive(), Estimator())


def test_pic_adds_reference_capacity(ec2):
    cur = Allocation({"t2.medium": 2})  # 400 Rps
    dec = pic_step([1073.0] * 4, cur, flat_cfg(), ec2)
    assert dec.action == "add" and dec.delta == pytest.approx(673)
    assert dec.change == Allocation({"t2.medium": 1, "c4.large": 1})


def test_pic_persists_when_forecast_matches(ec2):
    cur = Allocation({"c4.large": 2})
    dec = pic_step([1000.0] * 4, cur, flat_cfg(), ec2)
    assert dec.action == "persist" and not dec.change


def test_pic_removes(ec2):
    cur = Allocation({"c4.large": 1, "t2.medium": 2})
    dec = pic_step([450.0] * 4, cur, flat_cfg(), ec2)
    assert dec.action == "remove" and dec.change == Allocation({"t2.medium": 2})


def test_pic_dead_band_on_scale_in_only(ec2):
    cur = Allocation({"c4.large": 2})
    assert pic_step([850.0] * 4, cur, flat_cfg(), ec2).action == "persist"  # 150 below
    assert pic_step([1001.0] * 4, cur, flat_cfg(), ec2).action == "add"


def test_pic_oracle_max_never_under_allocates(ec2):
    rng = np.random.default_rng(5)
    truth = rng.uniform(0, 4000, 200)
    cfg = PicConfig(Window(10, 5, 5), PerfectOracle(truth), Estimator("max"))
    cur = Allocation()
    for t in range(9, 190, 5):
        dec = pic_step(truth[t - 9 : t + 1], cur, cfg, ec2, origin=t)
        cur = cur + dec.change if dec.action == "add" else cur - dec.change
        assert allocation_stats(cur, ec2).aggregate_alpha >= truth[t + 1 : t + 6].max()


# -- RSC -------------------------------------------------------------------------

def test_rsc_scenarios():
    assert rsc_split(80, 100, 200).as_tuple() == (100, 0, 0)
    assert rsc_split(250, 100, 200).as_tuple() == (0, 200, 50)
    d = rsc_split(150, 100, 200)
    assert d.as_tuple() == (50, 100, 0) and d.origin == "scenario3"
    assert rsc_split(200, 100, 200).as_tuple() == (0, 200, 0)  # boundary continuity


def test_rsc_rejects_bad_inputs():
    with pytest.raises(DomainError):
        rsc_split(10, 0, 0)
    with pytest.raises(DomainError):
        rsc_split(10, 100, 50)
    with pytest.raises(DomainError):
        rsc_split(-1, 100, 200)
    assert split_for_capacity(30, 0, 0).as_tuple() == (0, 0, 30)


def test_rsc_matches_literal_search_small():
    for a in range(1, 40):
        for r in (1.25, 1.5, 2.0, 3.0):
            b = a * r
            for w in range(0, math.ceil(b) + 5):
                assert rsc_split(w, a, b).as_tuple() == literal_split(w, a, b)


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10_000), st.sampled_from([1.25, 1.5, 2.0, 3.0]), st.floats(0, 40_000))
def test_rsc_invariants(alpha, r, w):
    beta = alpha * r
    z, e, th = rsc_split(w, alpha, beta).as_tuple()
    assert min(z, e, th) >= 0 and z <= alpha
    assert z / alpha + e / beta <= 1 + 1 / alpha
    if alpha < w <= beta:
        assert z + e == w


def test_rsc_step_uses_forecaster(ec2):
    cur = Allocation({"c4.large": 2})  # alpha 1000, beta 2000
    d = rsc_step([1500.0] * 5, cur, RscConfig(Window(5, 1, 1), SeasonalNaive()), ec2)
    assert d.as_tuple() == (500, 1000, 0)


# -- RIC -------------------------------------------------------------------------

def feed(policy, crossing_periods, n_periods=6, r_t=3300.0, high=3800.0, low=3300.0):
    state, sigs = RicState(), []
    for t in range(n_periods * policy.eval_period):
        p = t // policy.eval_period + 1
        w = high if p in crossing_periods and t % policy.eval_period == 17 else low
        s = ric_observe(t, w, state, r_t, policy, 200)
        if s.trigger != NONE:
            sigs.append((p, s.trigger))
    return sigs


def test_ric_fires_on_three_consecutive_periods():
    assert feed(RicPolicy(scale_in=False), {1, 2, 3}) == [(3, SCALE_OUT)]


def test_ric_does_not_fire_on_gap():
    assert feed(RicPolicy(scale_in=False), {1, 3, 4}) == []


def test_ric_never_fires_below_threshold():
    assert feed(RicPolicy(), set(), n_periods=20) == []


def test_ric_cooldown_and_refire():
    pol = RicPolicy(scale_in=False, cooldown=300)
    assert feed(pol, {1, 2, 3, 4, 5, 6, 7}, n_periods=8) == [(3, SCALE_OUT), (7, SCALE_OUT)]
    pol0 = RicPolicy(scale_in=False, cooldown=0)
    assert feed(pol0, {1, 2, 3, 4, 5, 6}, n_periods=6) == [(3, SCALE_OUT), (6, SCALE_OUT)]


def test_ric_scale_in_symmetric():
    pol = RicPolicy()
    state = RicState()
    sigs = [ric_observe(t, 100.0, state, 1000.0, pol, 200) for t in range(900)]
    fired = [s for s in sigs if s.trigger != NONE]
    assert len(fired) == 1 and fired[0].trigger == SCALE_IN
    assert fired[0].avg_delta == fired[0].max_delta == 900


def test_ric_reference_deltas(ec2):
    """Excess over R_T=3300 averages 673 and peaks at 2049 across three periods."""
    pol = RicPolicy(scale_in=False)
    state = RicState()
    excess = {100: 2049.0, 400: 300.0, 700: 1000.0, 701: 200.0, 702: 90.0, 703: 399.0}
    assert sum(excess.values()) / len(excess) == 673
    sig = None
    for t in range(900):
        s = ric_observe(t, 3300.0 + excess.get(t, 0.0), state, 3300.0, pol, ec2.min_alpha)
        if s.trigger != NONE:
            sig = s
    assert sig is not None and sig.time == 899
    assert (sig.avg_delta, sig.max_delta) == (673, 2049)
    avg = ric_react(sig, "avg", Allocation(), ec2)
    mx = ric_react(sig, "max", Allocation(), ec2)
    assert (avg.capacity_change, str(avg.objective_cost)) == (700, "0.1884")
    assert (mx.capacity_change, str(mx.objective_cost)) == (2100, "0.5652")


def test_ric_absolute_offset():
    pol = RicPolicy(offset=50, scale_in=False)
    assert feed(pol, {1, 2, 3}, high=3351.0) == [(3, SCALE_OUT)]
    assert feed(pol, {1, 2, 3}, high=3349.0) == []


def test_ric_is_deterministic():
    rng = np.random.default_rng(1)
    obs = rng.uniform(2000, 4500, 3000)

    def trace():
        loop = ReactiveLoop(RicPolicy(), __import__("hybridscale").default_catalog())
        return [loop.observe(t, w, 3300.0) for t, w in enumerate(obs)]

    assert trace() == trace()


def test_ric_react_scale_in(ec2):
    sig = RicSignal(SCALE_IN, 150, 150)
    assert ric_react(sig, "avg", Allocation({"c4.large": 1}), ec2).change == Allocation()
    sig = RicSignal(SCALE_IN, 600, 600)
    assert ric_react(sig, "avg", Allocation({"c4.large": 2}), ec2).change == Allocation({"c4.large": 1})
    assert ric_react(sig, "avg", Allocation(), ec2) is None
    with pytest.raises(ConfigError):
        ric_react(RicSignal(NONE), "avg", Allocation(), ec2)


def test_ric_policy_validation():
    for kw in ({"kappa": 0}, {"n": 0}, {"eval_period": 0}, {"cooldown": -1}, {"basis": "p90"},
               {"ownership": "mine"}):
        with pytest.raises(ConfigError):
            RicPolicy(**kw)
