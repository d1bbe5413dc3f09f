import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bidpacing.core import StepSizeSchedule
from bidpacing.dogd import DualState, dogd_md_batch, dogd_md_step
from bidpacing.mpc import mpc_costcap_bid
from bidpacing.portfolio import (AuctionKind, ChannelSpec, GroupState, channel_bid,
                                 group_costcap_mpc, group_md_batch, group_md_bid, group_md_step,
                                 group_min_delivery_bid, group_min_delivery_step,
                                 multichannel_step)
from bidpacing.shading import WinProbModel


def const(eps):
    return StepSizeSchedule.constant(eps)


def test_group_bids_scale_with_quality():
    s = GroupState([100, 100], DualState(lam=2.0))
    assert group_md_bid(s, 0, 0.1) == pytest.approx(0.05)
    assert group_md_bid(s, 1, 0.2) == pytest.approx(0.1)


def test_group_batch_on_target_keeps_lambda():
    s = GroupState([100, 300], DualState(lam=1.5, schedule=const(0.1)))
    lam, _ = group_md_batch(s, requests=40, spend=4.0, B=40.0)
    assert lam == pytest.approx(1.5)


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=100))
def test_group_of_one_matches_single_campaign(stream):
    g = GroupState([len(stream) + 1], DualState(lam=1.0, schedule=StepSizeSchedule.harmonic(0.3)))
    d = DualState(lam=1.0, schedule=StepSizeSchedule.harmonic(0.3))
    T = len(stream) + 1
    for r, c in stream:
        assert group_md_step(g, 0, r, c, 5.0) == dogd_md_step(d, r, c, 5.0, T)
    assert group_md_batch(g, 7, 0.3, 5.0) == dogd_md_batch(d, 7, 0.3, 5.0, T)


@given(st.lists(st.tuples(st.integers(0, 2), st.floats(0.01, 1), st.floats(0, 1)), max_size=60))
def test_every_campaign_reads_the_same_dual(events):
    s = GroupState([10, 20, 30], DualState(lam=1.0, schedule=const(0.05)), shares=[0.2, 0.2, 0.2])
    for i, r, c in events:
        group_md_step(s, i, r, c, 3.0)
        group_min_delivery_step(s, i, r, c, 3.0)
        assert len({group_md_bid(s, j, 1.0) for j in range(3)}) == 1


def test_group_validation():
    with pytest.raises(ValueError):
        GroupState([10, 10], shares=[0.7, 0.4])
    with pytest.raises(ValueError):
        GroupState([])
    with pytest.raises(ValueError):
        GroupState([0.0])
    with pytest.raises(ValueError):
        GroupState([10], multipliers=[1.0, 2.0])


def test_min_delivery_bid_examples():
    s = GroupState([100], DualState(lam=1.0), shares=[0.5], gamma=[0.2])
    assert group_min_delivery_bid(s, 0, 0.1) == pytest.approx(0.125)
    s.gamma[0] = 0.0
    assert group_min_delivery_bid(s, 0, 0.1) == pytest.approx(0.1)
    s.gamma[0] = 5.0
    assert group_min_delivery_bid(s, 0, 0.1) == pytest.approx(0.1 / s.dual.lam_floor)


def test_min_delivery_floor_rate_keeps_gamma():
    # floor rate s B / T_i = 0.5 * 10 / 100 = 0.05, matched by a won auction
    s = GroupState([100], DualState(lam=1.0, schedule=const(0.1)), shares=[0.5], gamma=[0.2])
    _, gamma, _ = group_min_delivery_step(s, 0, r=1.0, c=0.05, B=10.0, T=200.0)
    assert gamma == pytest.approx(0.2)
    # a lost auction is under the floor, so gamma rises
    _, gamma, _ = group_min_delivery_step(s, 0, r=0.0, c=0.05, B=10.0, T=200.0)
    assert gamma > 0.2


def test_costcap_group_of_one_reduces_to_single():
    f = lambda b: 8.0 * b
    g = lambda b: 3.0 + b
    args = dict(B_rem=40.0, B=100.0, b_l=0.1, b_u=5.0, step=0.1)
    single = mpc_costcap_bid(f, g, C=2.0, conversions=10.0, requests_rem=80.0, requests_horizon=20.0, **args)
    group = group_costcap_mpc([f], [g], [2.0], [500.0], [10.0], [80.0], [20.0], **args)
    assert group == single


def test_costcap_group_limited_by_tightest_campaign():
    f = [lambda b: 10.0 * b, lambda b: 10.0 * b]
    g = [lambda b: 5.0, lambda b: 2.0]
    caps = [2.0, 2.0]
    kw = dict(forecasts=[50.0, 50.0], conversions=[0.0, 0.0], requests_rem=[50.0, 50.0],
              requests_horizon=[50.0, 50.0], B_rem=100.0, B=100.0)
    bid = group_costcap_mpc(f, g, caps, b_l=0.1, b_u=3.0, step=0.05, **kw)
    # grid oracle: campaign i's horizon cap is 50 / (50 / 2) = 2
    grid = 0.1 + 0.05 * np.arange(59)
    ok = [b for b in grid if 20 * b <= 100 and 10 * b / 5 <= 2 and 10 * b / 2 <= 2]
    assert bid == pytest.approx(max(ok))
    assert bid == pytest.approx(0.4)
    # relax the tight cap and the other campaign governs
    assert group_costcap_mpc(f, g, [2.0, 10.0], b_l=0.1, b_u=3.0, step=0.05, **kw) == pytest.approx(1.0)


def test_costcap_group_unbounded_caps_is_spend_search():
    f = [lambda b: 10.0 * b, lambda b: 30.0 * b]
    g = [lambda b: 1.0, lambda b: 1.0]
    bid = group_costcap_mpc(f, g, [1.0, 1.0], [50.0, 50.0], [1e9, 1e9], [50.0, 50.0], [10.0, 10.0],
                            B_rem=100.0, B=100.0, b_l=0.1, b_u=3.0, step=0.1)
    # horizon budget 20/100 * 100 = 20 -> 40 b <= 20
    assert bid == pytest.approx(0.5)
    with pytest.raises(ValueError):
        group_costcap_mpc(f, g[:1], [1.0], [1.0], [0.0], [1.0], [1.0], 1.0, 1.0, 0.1, 1.0, 0.1)


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec(0, AuctionKind.SPA, markup=0.1)
    with pytest.raises(ValueError):
        ChannelSpec(1, AuctionKind.FPA)
    with pytest.raises(ValueError):
        ChannelSpec(1, AuctionKind.FPA, -0.1, WinProbModel())


def test_multichannel_bids():
    onsite = ChannelSpec(0)
    assert channel_bid(2.0, 0.1, onsite) == pytest.approx(0.05)
    offsite = ChannelSpec(1, AuctionKind.FPA, markup=1.0, model=WinProbModel(0.0, (), 1.0))
    # r / (lam (1 + m)) = 1 / (0.25 * 2) = 2
    assert channel_bid(0.25, 1.0, offsite) == pytest.approx(math.sqrt(3) - 1, abs=1e-6)


def test_multichannel_step_costs_and_fixed_point():
    onsite = ChannelSpec(0)
    s = DualState(lam=2.0, schedule=const(0.5))
    lam, bid, cost = multichannel_step(s, 10.0, 100.0, 0.1, onsite, competing=0.1)
    assert cost == 0.0 and lam == pytest.approx(2.0 - 0.05)

    s = DualState(lam=1.0, schedule=const(0.5))
    lam, _, cost = multichannel_step(s, 10.0, 100.0, 0.5, onsite, competing=0.1)
    assert cost == 0.1 and lam == pytest.approx(1.0)

    offsite = ChannelSpec(1, AuctionKind.FPA, markup=0.5, model=WinProbModel(0.0, (), 1.0))
    s = DualState(lam=0.5, schedule=const(0.5))
    _, bid, cost = multichannel_step(s, 10.0, 100.0, 1.0, offsite)
    assert cost == pytest.approx(bid / (1 + bid) * bid * 1.5)
    with pytest.raises(ValueError):
        multichannel_step(DualState(), 1.0, 1.0, 0.1, onsite)
