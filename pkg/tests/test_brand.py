import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bidpacing.brand import (FixedFrequencyState, GdState, RnfState, fixed_freq_step, gd_batch,
                             gd_replay, gd_step, rnf_batch, rnf_step)
from bidpacing.core import StepSizeSchedule
from oracles import cheapest_constant_bid_cost


def test_rnf_bid_formula_and_clamp():
    s = RnfState({"a": 10}, 1, 3, lam=1.0, mu={"a": 0.1}, gamma={"a": 0.3})
    assert s.bid("a") == pytest.approx(1.2)
    s.mu["a"] = 2.0
    assert s.bid("a") == 0.0


def test_rnf_validation():
    with pytest.raises(ValueError):
        RnfState({"a": 10}, 3, 1)
    with pytest.raises(ValueError):
        RnfState({"a": 0}, 1, 2)
    s = RnfState({"a": 10}, 1, 2)
    with pytest.raises(KeyError):
        rnf_step(s, "b", 0.1, True, 1.0, 0.1)


def test_rnf_step_on_target_frequency_keeps_mu():
    # F_u / T_m = 1 so a win is exactly on rate
    s = RnfState({"a": 2, "b": 5}, 0, 2, lam=1.0, mu={"a": 0.4}, hard_cap=False)
    rnf_step(s, "a", 0.1, True, 1.0, 0.5)
    assert s.mu["a"] == pytest.approx(0.4)


def test_rnf_step_touches_only_that_user():
    s = RnfState({"a": 10, "b": 10}, 1, 3, mu={"b": 0.2}, gamma={"b": 0.1})
    rnf_step(s, "a", 0.1, True, 1.0, 0.5)
    assert s.mu["b"] == 0.2 and s.gamma["b"] == 0.1


def test_rnf_batch_examples():
    s = RnfState({"a": 10}, 1, 2, lam=1.0, mu={"a": 0.5}, gamma={"a": 0.5})
    rnf_batch(s, {"a": (5, 1)}, requests=5, spend=0.5, B=10.0, eps=0.1, T=100)
    assert s.mu["a"] == pytest.approx(0.5)  # I = R F_u / T_m
    assert s.lam == pytest.approx(1.0)

    s = RnfState({"a": 10}, 2, 4, gamma={"a": 0.0})
    rnf_batch(s, {"a": (5, 0)}, 0, 0.0, 10.0, 0.1)
    assert s.gamma["a"] == pytest.approx(0.1 * 5 * 2 / 10)
    assert s.lam == 1.0
    with pytest.raises(ValueError):
        rnf_batch(s, {"a": (-1, 0)}, 0, 0.0, 10.0, 0.1)


def test_rnf_hard_cap_bounds_frequency_in_simulation():
    rng = np.random.default_rng(0)
    n_users, per_user, F_l, F_u = 50, 40, 1, 3
    users = np.repeat(np.arange(n_users), per_user)
    rng.shuffle(users)
    c = rng.lognormal(math.log(0.02), 0.6, len(users))
    B, T = 0.5 * c.sum(), len(users)
    s = RnfState({u: per_user for u in range(n_users)}, F_l, F_u, lam=0.02)
    count = np.zeros(n_users)
    for u, ci in zip(users, c):
        won = s.bid(u) > ci
        count[u] += won
        rnf_step(s, u, ci, won, B, 0.05, T)
    assert count.max() <= F_u
    assert count.min() >= F_l


@given(st.lists(st.tuples(st.sampled_from("abc"), st.floats(0, 1)), max_size=200),
       st.floats(1e-3, 1.0))
def test_fixed_frequency_equals_rnf_when_each_user_is_one_sided(events, eps):
    # a user who always wins (or always loses) keeps one of the two rnf
    # duals pinned at zero, so the pair acts like the single equality dual
    outcome = {"a": True, "b": False, "c": True}
    forecasts = {"a": 5, "b": 7, "c": 3}
    ff = FixedFrequencyState(forecasts, 2)
    rf = RnfState(forecasts, 2, 2, hard_cap=False)
    for user, cost in events:
        won = outcome[user]
        assert fixed_freq_step(ff, user, cost, won, 1.0, eps) == rnf_step(rf, user, cost, won, 1.0, eps)
    assert ff.lam == rf.lam


def test_fixed_frequency_bid_direction():
    s = FixedFrequencyState({"a": 10}, 1, lam=2.0)
    assert s.bid("a") == 0.5
    before = s.bid("a")
    fixed_freq_step(s, "a", 0.0, True, 1.0, 0.1, T=1e9)
    assert s.mu["a"] > 0 and s.bid("a") < before


def test_gd_steps():
    s = GdState(500, 1000, lam=1.0)
    assert gd_step(s, 0.5, 0.1) == pytest.approx(1.0 + 0.1 * (0.5 - 1))
    s = GdState(500, 1000, lam=1.0)
    assert gd_step(s, 2.0, 0.1) == pytest.approx(1.05)
    s = GdState(500, 1000, lam=1.0)
    assert gd_batch(s, 100, 50, 0.1) == pytest.approx(1.0)
    assert gd_batch(s, 100, 10, 0.1) > 1.0
    assert s.bid == s.lam
    with pytest.raises(ValueError):
        GdState(10, 5)


@pytest.mark.parametrize("seed", range(5))
def test_gd_batch_replay_reaches_goal_cheaply(seed):
    rng = np.random.default_rng(seed)
    costs = rng.lognormal(math.log(0.02), 0.6, 2000)
    G = 400
    state = gd_replay(costs, G, StepSizeSchedule.harmonic(5e-5), passes=200, batch=True)
    won = costs < state.bid
    assert won.sum() >= G
    assert costs[won].sum() <= 1.02 * cheapest_constant_bid_cost(costs, G)


def test_gd_stream_replay_near_goal():
    rng = np.random.default_rng(9)
    costs = rng.lognormal(math.log(0.02), 0.6, 2000)
    state = gd_replay(costs, 400, StepSizeSchedule.harmonic(1e-3), passes=20, rng=rng)
    assert abs(int((costs < state.bid).sum()) - 400) <= 40
