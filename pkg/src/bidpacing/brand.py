"""Brand products: reach and frequency with per-user frequency duals, the
fixed-frequency special case, and guaranteed delivery."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import StepSizeSchedule
from .dogd import LAMBDA_FLOOR


@dataclass
class RnfState:
    """Budget dual ``lam`` plus, per user m, an upper-frequency dual mu[m]
    and a lower-frequency dual gamma[m]. ``forecasts`` maps each user to
    the expected number of auctions T_m.

    The duals steer frequency only on average, so with ``hard_cap`` a user
    who already has F_u impressions gets a zero bid.
    """

    forecasts: Mapping
    F_l: float
    F_u: float
    lam: float = 1.0
    mu: dict = field(default_factory=dict)
    gamma: dict = field(default_factory=dict)
    lam_floor: float = LAMBDA_FLOOR
    hard_cap: bool = True
    impressions: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.F_l <= self.F_u:
            raise ValueError("need 0 <= F_l <= F_u")
        if any(not v > 0 for v in self.forecasts.values()):
            raise ValueError("every user forecast must be positive")
        self.forecasts = dict(self.forecasts)

    @property
    def total_forecast(self) -> float:
        return float(sum(self.forecasts.values()))

    def bid(self, user) -> float:
        if self.hard_cap and self.impressions.get(user, 0) >= self.F_u:
            return 0.0
        num = 1.0 - self.mu.get(user, 0.0) + self.gamma.get(user, 0.0)
        return max(0.0, num) / self.lam

    def _forecast(self, user) -> float:
        try:
            return self.forecasts[user]
        except KeyError:
            raise KeyError(f"no auction forecast for user {user!r}") from None


def rnf_step(state: RnfState, user, cost: float, won: bool, B: float, eps: float, T=None) -> float:
    """Per-auction update after observing the price and whether the
    impression was won. Only ``user``'s frequency duals move. Returns the
    user's next bid per impression."""
    T = state.total_forecast if T is None else T
    Tm = state._forecast(user)
    x = 1.0 if won else 0.0
    state.impressions[user] = state.impressions.get(user, 0) + int(won)
    state.lam = max(state.lam_floor, state.lam - eps * (B / T - cost * x))
    state.mu[user] = max(0.0, state.mu.get(user, 0.0) - eps * (state.F_u / Tm - x))
    state.gamma[user] = max(0.0, state.gamma.get(user, 0.0) - eps * (x - state.F_l / Tm))
    return state.bid(user)


def rnf_batch(state: RnfState, per_user: Mapping, requests: float, spend: float,
              B: float, eps: float, T=None) -> RnfState:
    """Mini-batch update. ``per_user`` maps user -> (requests R_m,
    impressions I_m) observed in the interval."""
    if min(requests, spend) < 0:
        raise ValueError("aggregates must be non-negative")
    T = state.total_forecast if T is None else T
    state.lam = max(state.lam_floor, state.lam - eps * (requests / T * B - spend))
    for user, (r_m, i_m) in per_user.items():
        if min(r_m, i_m) < 0:
            raise ValueError("aggregates must be non-negative")
        state.impressions[user] = state.impressions.get(user, 0) + i_m
        share = r_m / state._forecast(user)
        state.mu[user] = max(0.0, state.mu.get(user, 0.0) - eps * (share * state.F_u - i_m))
        state.gamma[user] = max(0.0, state.gamma.get(user, 0.0) - eps * (i_m - share * state.F_l))
    return state


@dataclass
class FixedFrequencyState:
    """One equality dual per user; it may go negative."""

    forecasts: Mapping
    F: float
    lam: float = 1.0
    mu: dict = field(default_factory=dict)
    lam_floor: float = LAMBDA_FLOOR

    @property
    def total_forecast(self) -> float:
        return float(sum(self.forecasts.values()))

    def bid(self, user) -> float:
        return max(0.0, 1.0 - self.mu.get(user, 0.0)) / self.lam


def fixed_freq_step(state: FixedFrequencyState, user, cost: float, won: bool, B: float,
                    eps: float, T=None) -> float:
    T = state.total_forecast if T is None else T
    x = 1.0 if won else 0.0
    state.lam = max(state.lam_floor, state.lam - eps * (B / T - cost * x))
    state.mu[user] = state.mu.get(user, 0.0) - eps * (state.F / state.forecasts[user] - x)
    return state.bid(user)


# ---------------------------------------------------------------------------
# Guaranteed delivery
# ---------------------------------------------------------------------------

@dataclass
class GdState:
    """Win at least G of T impressions at minimum cost. The dual ``lam`` is
    both the price threshold and the bid."""

    goal_G: float
    inventory_T: float
    lam: float = 0.0

    def __post_init__(self):
        if not 0 <= self.goal_G <= self.inventory_T:
            raise ValueError("goal must lie in [0, inventory]")
        self.lam = max(0.0, self.lam)

    @property
    def bid(self) -> float:
        return self.lam


def gd_step(state: GdState, competing: float, eps: float) -> float:
    """Per-auction dual ascent: lam rises when the win rate falls short of
    G/T and drops after each win."""
    won = competing < state.lam
    state.lam = max(0.0, state.lam + eps * (state.goal_G / state.inventory_T - (1.0 if won else 0.0)))
    return state.lam


def gd_batch(state: GdState, opportunities: float, wins: float, eps: float) -> float:
    state.lam = max(0.0, state.lam + eps * (state.goal_G / state.inventory_T * opportunities - wins))
    return state.lam


def gd_replay(costs, goal_G: float, schedule: StepSizeSchedule, passes: int = 50,
              lam0: float = 0.0, rng=None, batch: bool = False) -> GdState:
    """Run the ascent over a frozen log for several passes. The step index
    is the pass number, so each pass uses one step size.

    Per-auction passes visit the log in a fresh random order when ``rng`` is
    given. With ``batch`` each pass is a single mini-batch step on the
    whole log, which is deterministic and settles inside the interval of
    thresholds that win exactly G auctions once steps are small enough.
    """
    costs = np.asarray(costs, dtype=float)
    state = GdState(goal_G, len(costs), lam0)
    for k in range(1, passes + 1):
        eps = schedule.value(k)
        if batch:
            gd_batch(state, len(costs), int(np.count_nonzero(costs < state.lam)), eps)
            continue
        order = rng.permutation(len(costs)) if rng is not None else range(len(costs))
        for i in order:
            gd_step(state, costs[i], eps)
    return state
