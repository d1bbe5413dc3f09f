"""Budget pacing with intra-period spend limits: a per-period dual on top of
the max delivery dual, and the effective-budget rule for receding-horizon
bidding."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .dogd import DualState


@dataclass
class IntraPeriodState:
    """Max delivery dual plus one dual per period.

    ``starts`` holds each period's start time; period i covers
    [starts[i], starts[i+1]) and the last one runs to ``end``. Each period
    may spend at most ``sigma`` of the budget. ``period_forecasts`` gives the
    per-period auction count used in the period's target rate; when absent
    the campaign horizon T is used.
    """

    starts: Sequence[float]
    end: float
    sigma: float = 1.0
    dual: DualState = field(default_factory=DualState)
    period_duals: list = field(default_factory=list)
    period_forecasts: Optional[Sequence[float]] = None

    def __post_init__(self):
        self.starts = [float(s) for s in self.starts]
        if not self.starts:
            raise ValueError("need at least one period")
        if any(b <= a for a, b in zip(self.starts, self.starts[1:])) or self.end <= self.starts[-1]:
            raise ValueError("period starts must be strictly increasing and before the end")
        if not 0 < self.sigma <= 1:
            raise ValueError("cap fraction must lie in (0, 1]")
        if not self.period_duals:
            self.period_duals = [0.0] * len(self.starts)
        if len(self.period_duals) != len(self.starts):
            raise ValueError("one dual per period")
        self.period_duals = [max(0.0, v) for v in self.period_duals]
        if self.period_forecasts is not None:
            if len(self.period_forecasts) != len(self.starts):
                raise ValueError("one forecast per period")
            if any(not v > 0 for v in self.period_forecasts):
                raise ValueError("period forecasts must be positive")

    @property
    def lam(self) -> float:
        return self.dual.lam

    @property
    def n_periods(self) -> int:
        return len(self.starts)

    def period_of(self, time: float) -> int:
        if not self.starts[0] <= time < self.end:
            raise ValueError(f"time {time} falls outside every period")
        return bisect.bisect_right(self.starts, time) - 1

    def period_length(self, i: int) -> float:
        stop = self.starts[i + 1] if i + 1 < len(self.starts) else self.end
        return stop - self.starts[i]

    def bid(self, i: int, r: float) -> float:
        return r / (self.dual.lam + self.period_duals[i])


def even_dogd_step(state: IntraPeriodState, time: float, r: float, c: float,
                   B: float, T: float, won: Optional[bool] = None):
    """Per-auction update of the budget dual and the dual of the period that
    contains ``time``. With ``won`` omitted the win indicator is
    r > (lam + lam_i) c under the pre-update duals.

    A cap of the whole budget can never bind, so with sigma = 1 the period
    duals stay at zero and the step is exactly the plain max delivery step.
    Returns (lam, lam_i, next bid per impression).
    """
    if not (B > 0 and T > 0):
        raise ValueError("budget and horizon must be positive")
    i = state.period_of(time)
    ds = state.dual
    eps = ds.next_step()
    lam_i = state.period_duals[i]
    if won is None:
        won = r > (ds.lam + lam_i) * c
    spent = c if won else 0.0
    grad = B / T - spent
    grad *= ds._scale(B, T)
    ds.lam = max(ds.lam_floor, ds.lam - eps * grad)
    if state.sigma < 1:
        Ti = state.period_forecasts[i] if state.period_forecasts is not None else T
        g_i = (state.sigma * B / Ti - spent) * ds._scale(B, T)
        state.period_duals[i] = max(0.0, lam_i - eps * g_i)
    return ds.lam, state.period_duals[i], state.bid(i, r)


def even_mpc_budget(B_remaining: float, weight: float, period_cap: float, spent_in_period: float) -> float:
    """Budget for the next receding horizon: the lifetime share
    ``weight`` x B_remaining, but never more than what the current period
    may still spend. Clamped at zero once the period cap is used up."""
    if spent_in_period < 0:
        raise ValueError("period spend must be non-negative")
    if not 0 <= weight <= 1:
        raise ValueError("weight must lie in [0, 1]")
    if B_remaining < 0 or period_cap < 0:
        raise ValueError("budgets must be non-negative")
    lifetime = weight * B_remaining
    period = period_cap - spent_in_period
    return max(0.0, min(period, lifetime))
