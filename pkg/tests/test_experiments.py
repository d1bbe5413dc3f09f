import numpy as np
import pytest
from hypothesis import given, strategies as st

from bidpacing.core import CampaignConfig
from bidpacing.experiments import (SampleSummary, Strategy, budget_split_run, campaign_split_run,
                                   critical_value, decide, p_value, pooled_t, read_results,
                                   write_results)
from bidpacing.sim import MarketSpec


def test_hand_computed_t():
    t, dof = pooled_t(SampleSummary.of([1, 2, 3]), SampleSummary.of([2, 3, 4]))
    assert t == pytest.approx(-1.22474, abs=1e-5)
    assert dof == 4


def test_identical_summaries_give_zero():
    a = SampleSummary(10, 3.0, 1.5)
    assert pooled_t(a, a)[0] == 0.0


def test_zero_pooled_variance_is_an_error():
    with pytest.raises(ValueError):
        pooled_t(SampleSummary.of([1, 1]), SampleSummary.of([2, 2]))
    with pytest.raises(ValueError):
        SampleSummary.of([1.0])


@given(st.integers(2, 50), st.integers(2, 50), st.floats(-100, 100), st.floats(-100, 100),
       st.floats(0.01, 10), st.floats(0.01, 10))
def test_antisymmetry(na, nb, ma, mb, sa, sb):
    a, b = SampleSummary(na, ma, sa), SampleSummary(nb, mb, sb)
    t_ab, d_ab = pooled_t(a, b)
    t_ba, d_ba = pooled_t(b, a)
    assert t_ab == -t_ba and d_ab == d_ba


def test_decision_rule():
    assert not decide(0.0, 10, 0.05)
    assert decide(-2.98, 2e5 - 2, 0.05)
    assert not decide(100.0, 10, 0.0)
    assert critical_value(1e6, 0.05) == pytest.approx(1.959964, abs=1e-5)
    assert p_value(0.0, 5) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        decide(1.0, 0, 0.05)


def test_null_calibration():
    rng = np.random.default_rng(0)
    rejects = 0
    for _ in range(2000):
        a = SampleSummary.of(rng.normal(size=20))
        b = SampleSummary.of(rng.normal(size=20))
        rejects += decide(*pooled_t(a, b), 0.05)
    assert 0.03 <= rejects / 2000 <= 0.07


SMALL = MarketSpec(auctions=2000)
CAMPAIGN = CampaignConfig("c", 10.0, 2000)
FIXED = Strategy("fixed", {"bid0": 0.5})


def test_harness_runs_are_seeded():
    a = budget_split_run(SMALL, CAMPAIGN, FIXED, FIXED, 3, seed=4)
    b = budget_split_run(SMALL, CAMPAIGN, FIXED, FIXED, 3, seed=4)
    assert a.values == b.values
    c = campaign_split_run(SMALL, CAMPAIGN, FIXED, FIXED, 3, seed=4)
    d = campaign_split_run(SMALL, CAMPAIGN, FIXED, FIXED, 3, seed=4)
    assert c.values == d.values


def test_harness_needs_two_replicas():
    with pytest.raises(ValueError):
        budget_split_run(SMALL, CAMPAIGN, FIXED, FIXED, 1, seed=0)


def test_campaign_split_favours_aggressive_arm():
    aggressive = Strategy("fixed", {"bid0": 0.5}, multiplier=1.2)
    s = campaign_split_run(SMALL, CAMPAIGN, FIXED, aggressive, 5, seed=1)
    assert all(b > a for a, b in zip(s.values["A"], s.values["B"]))


def test_results_roundtrip(tmp_path):
    s = budget_split_run(SMALL, CAMPAIGN, FIXED, FIXED, 2, seed=0)
    path = tmp_path / "res.csv"
    write_results(path, s)
    assert path.read_text().splitlines()[0] == "arm,replica,metric,value"
    assert read_results(path, "spend") == s.values
    assert read_results(path, "cpc") == {}
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        read_results(bad)
