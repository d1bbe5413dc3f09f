import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bidpacing.core import (AuctionOpportunity, CampaignConfig, CostCap, GuaranteedDelivery,
                            PacingClock, ReachFrequency, SpendLedger, StepSizeSchedule,
                            ledger_record, schedule_value)


def test_schedule_values():
    assert schedule_value(StepSizeSchedule.harmonic(1.0), 1) == 1.0
    assert schedule_value(StepSizeSchedule.harmonic(1.0), 4) == 0.25
    assert schedule_value(StepSizeSchedule.constant(0.01), 999) == 0.01


def test_schedule_rejects_bad_inputs():
    with pytest.raises(ValueError):
        StepSizeSchedule.constant(0.0)
    with pytest.raises(ValueError):
        StepSizeSchedule.harmonic(1.0).value(0)


def test_harmonic_partial_sums():
    eps0 = 0.7
    t = np.arange(1, 10**6 + 1)
    steps = np.array([StepSizeSchedule.harmonic(eps0).value(int(k)) for k in (1, 10, 1000)])
    assert np.allclose(steps, eps0 / np.array([1, 10, 1000]))
    vals = eps0 / t
    sums = np.cumsum(vals)
    # grows like log t: passes any fixed bound given enough terms
    assert sums[-1] > 13 * eps0 and sums[10**5] > sums[10**4] + 2 * eps0
    sq = np.cumsum(vals ** 2)
    assert np.all(np.diff(sq) > 0)
    assert sq[-1] <= math.pi ** 2 / 6 * eps0 ** 2


def test_ledger_examples():
    led = ledger_record(SpendLedger(), 2, 1, 1, 3)
    assert (led.spend, led.conversions, led.impressions, led.requests) == (2, 1, 1, 3)
    led = SpendLedger().record(1, 0, 1, 1).record(1, 1, 0, 1)
    assert (led.spend, led.conversions, led.impressions, led.requests) == (2, 1, 1, 2)
    with pytest.raises(ValueError):
        SpendLedger().record(-1, 0, 0, 0)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.floats(0, 1e3, allow_nan=False), max_size=20), max_size=20))
def test_interval_sums_match_cumulative_exactly(intervals):
    led = SpendLedger()
    for chunk in intervals:
        for x in chunk:
            led.record(spend=x, requests=1)
        led.close_interval()
    assert sum(iv.spend for iv in led.intervals) == led.spend
    assert sum(iv.requests for iv in led.intervals) == led.requests


def test_campaign_validation():
    assert CampaignConfig("c", 100.0, 1000).spend_rate == 0.1
    with pytest.raises(ValueError):
        CampaignConfig("c", -1.0, 10)
    with pytest.raises(ValueError):
        CampaignConfig("c", 1.0, 0)
    with pytest.raises(ValueError):
        CampaignConfig("c", 1.0, 10, GuaranteedDelivery(11))
    with pytest.raises(ValueError):
        CostCap(0.0)
    with pytest.raises(ValueError):
        ReachFrequency(3, 2)


def test_auction_opportunity_validation():
    AuctionOpportunity(0, 0.0, 0.5, 1.0)
    with pytest.raises(ValueError):
        AuctionOpportunity(0, 0.0, 1.5, 1.0)
    with pytest.raises(ValueError):
        AuctionOpportunity(0, 0.0, 0.5, -1.0)


def test_clock_layout():
    clock = PacingClock(900, 3600)
    assert clock.n_buckets == 24
    assert clock.n_updates == 96
    assert clock.updates_per_bucket == 4
    assert clock.bucket_of_update(5) == 1
    assert clock.update_of_time(86399.9) == 95
    with pytest.raises(IndexError):
        clock.bucket_of_update(96)
    with pytest.raises(ValueError):
        PacingClock(7200, 3600)
    with pytest.raises(ValueError):
        PacingClock(1000, 3600)
