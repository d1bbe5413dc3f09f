import math

import numpy as np
import pytest
from scipy import stats

from bidpacing.core import CampaignConfig, CostCap, GuaranteedDelivery, PacingClock
from bidpacing.sim import (CONTROLLERS, IncompatibleController, MarketSpec, TRACE_HEADER,
                           generate_stream, make_controller, run_campaign, trace_lines)


def test_stream_is_seeded():
    a = generate_stream(MarketSpec(auctions=5000, seed=3))
    b = generate_stream(MarketSpec(auctions=5000, seed=3))
    c = generate_stream(MarketSpec(auctions=5000, seed=4))
    assert np.array_equal(a.competing, b.competing) and np.array_equal(a.times, b.times)
    assert not np.array_equal(a.competing[:100], c.competing[:100])


def test_degenerate_lognormals_give_constant_streams():
    s = generate_stream(MarketSpec(pctr_sigma=0.0, ecpm_sigma=0.0, auctions=1000))
    assert np.all(s.pctr == s.pctr[0]) and np.all(s.competing == s.competing[0])
    assert s.pctr[0] == pytest.approx(0.02)


def test_times_sorted_and_inside_buckets():
    spec = MarketSpec(auctions=5000)
    s = generate_stream(spec)
    assert np.all(np.diff(s.times) >= 0)
    width = spec.day / len(spec.supply)
    edges = np.repeat(np.arange(len(spec.supply)), s.bucket_counts)
    assert np.all(s.times // width == edges)


def test_bucket_counts_follow_supply_shape():
    spec = MarketSpec(auctions=20_000)
    pvals = []
    for seed in range(200):
        counts = generate_stream(spec, seed=seed).bucket_counts
        pvals.append(stats.chisquare(counts, counts.sum() * spec.supply_share).pvalue)
    assert 0.02 <= np.mean(np.array(pvals) < 0.05) <= 0.09


def test_ladder_streams():
    s = generate_stream(MarketSpec(auctions=500, slots=(1.0, 0.5, 0.25)))
    assert s.ladder.shape == (len(s), 3)
    assert np.all(np.diff(s.ladder, axis=1) <= 0)
    assert np.array_equal(s.competing, s.ladder[:, 0])


def test_spec_validation():
    with pytest.raises(ValueError):
        MarketSpec(pctr_sigma=-1)
    with pytest.raises(ValueError):
        MarketSpec(supply=(0.0, 0.0))


SMALL = MarketSpec(auctions=5000, seed=2)


def test_zero_budget_spends_nothing():
    rep = run_campaign(CampaignConfig("z", 0.0, 5000), "fixed", SMALL, params={"bid0": 10.0})
    assert rep.summary["spend"] == 0.0 and rep.summary["impressions"] == 0


@pytest.mark.parametrize("name,params", [
    ("fixed", {"bid0": 50.0}),
    ("throttle", {"bid0": 50.0}),
    ("pid", {"bid0": 5.0, "kp": 0.5}),
    ("dogd", {"lam0": 0.05}),
    ("dogd-batch", {"lam0": 0.05}),
    ("even-dogd", {"lam0": 0.05, "sigma": 0.5, "periods": 2}),
])
def test_spend_passes_budget_by_at_most_one_auction(name, params):
    B = 2.0
    rep = run_campaign(CampaignConfig("o", B, 5000), name, SMALL, params=params)
    assert rep.summary["spend"] <= B + rep.max_cost


@pytest.mark.parametrize("name", ["fixed", "pid", "dogd", "dogd-batch", "throttle"])
def test_summary_equals_trace_sums(name):
    rep = run_campaign(CampaignConfig("s", 5.0, 5000), name, SMALL, params={"bid0": 1.0, "lam0": 1.0})
    lines = trace_lines(rep)
    assert lines[0] == ",".join(TRACE_HEADER)
    cols = list(zip(*[l.split(",") for l in lines[1:]]))
    spend = sum(float(v) for v in cols[2])
    assert spend == rep.summary["spend"]
    assert sum(int(v) for v in cols[7]) == rep.summary["impressions"]
    assert sum(float(v) for v in cols[8]) == rep.summary["conversions"]
    assert sum(int(v) for v in cols[1]) == len(generate_stream(SMALL))


def test_run_is_deterministic():
    camp = CampaignConfig("d", 5.0, 5000)
    a = trace_lines(run_campaign(camp, "dogd", SMALL, params={"lam0": 1.0}))
    b = trace_lines(run_campaign(camp, "dogd", SMALL, params={"lam0": 1.0}))
    assert a == b


def test_incompatible_pairings_rejected():
    gd = CampaignConfig("g", 5.0, 5000, GuaranteedDelivery(100))
    with pytest.raises(IncompatibleController):
        make_controller("dogd", gd)
    cap = CampaignConfig("c", 5.0, 5000, CostCap(1.0))
    with pytest.raises(IncompatibleController):
        make_controller("gd", cap)
    with pytest.raises(ValueError):
        make_controller("nope", cap)


def test_every_controller_has_a_name():
    assert set(CONTROLLERS) >= {"fixed", "throttle", "pid", "dual-pid", "dogd", "dogd-batch",
                                "dogd-costcap", "even-dogd", "even-mpc", "gd"}
