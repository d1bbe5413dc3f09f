import numpy as np
import pytest
from hypothesis import given, strategies as st

from bidpacing.core import StepSizeSchedule
from bidpacing.dogd import DualState, dogd_md_step
from bidpacing.evenpacing import IntraPeriodState, even_dogd_step, even_mpc_budget


def test_bid_uses_sum_of_duals():
    s = IntraPeriodState([0.0], 10.0, 0.5, DualState(lam=1.0), [0.25])
    assert s.bid(0, 0.1) == pytest.approx(0.08)
    s.period_duals[0] = 0.0
    assert s.bid(0, 0.1) == pytest.approx(0.1)


def test_period_lookup_covers_horizon():
    s = IntraPeriodState([0.0, 6.0, 12.0], 24.0, 0.5)
    assert [s.period_of(t) for t in (0.0, 5.99, 6.0, 23.9)] == [0, 0, 1, 2]
    assert s.period_length(2) == 12.0
    with pytest.raises(ValueError):
        s.period_of(24.0)
    with pytest.raises(ValueError):
        s.period_of(-1.0)


def test_state_validation():
    with pytest.raises(ValueError):
        IntraPeriodState([0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        IntraPeriodState([0.0], 1.0, sigma=0.0)
    with pytest.raises(ValueError):
        IntraPeriodState([0.0], 1.0, period_duals=[0.0, 0.0])
    with pytest.raises(ValueError):
        IntraPeriodState([0.0, 1.0], 2.0, period_forecasts=[1.0, 0.0])


def test_period_dual_fixed_at_cap_rate():
    # sigma B / T_i = 0.5 * 10 / 50 = 0.1
    s = IntraPeriodState([0.0, 5.0], 10.0, 0.5, DualState(lam=1.0, schedule=StepSizeSchedule.constant(0.3)),
                         [0.4, 0.0], period_forecasts=[50.0, 50.0])
    _, lam_i, _ = even_dogd_step(s, 1.0, r=1.0, c=0.1, B=10.0, T=100.0, won=True)
    assert lam_i == pytest.approx(0.4)
    _, lam_i, _ = even_dogd_step(s, 1.0, r=1.0, c=0.3, B=10.0, T=100.0, won=True)
    assert lam_i > 0.4
    assert s.period_duals[1] == 0.0


@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), max_size=200), st.floats(1e-3, 2.0))
def test_full_cap_single_period_is_plain_dogd(stream, eps0):
    T = len(stream) + 1
    even = IntraPeriodState([0.0], float(T), 1.0, DualState(lam=1.0, schedule=StepSizeSchedule.harmonic(eps0)))
    plain = DualState(lam=1.0, schedule=StepSizeSchedule.harmonic(eps0))
    for t, (r, c) in enumerate(stream):
        lam, lam_i, bid = even_dogd_step(even, float(t), r, c, 3.0, T)
        assert (lam, bid) == dogd_md_step(plain, r, c, 3.0, T)
        assert lam_i == 0.0


def test_mpc_budget_examples():
    assert even_mpc_budget(60.0, 0.5, 40.0, 15.0) == 25.0
    assert even_mpc_budget(60.0, 0.5, 1e9, 0.0) == 30.0
    assert even_mpc_budget(60.0, 0.5, 40.0, 45.0) == 0.0
    with pytest.raises(ValueError):
        even_mpc_budget(60.0, 0.5, 40.0, -1.0)
    with pytest.raises(ValueError):
        even_mpc_budget(60.0, 1.5, 40.0, 0.0)
