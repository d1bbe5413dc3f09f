"""Dual online gradient descent for max delivery and cost cap, per auction
and on mini-batches, plus the offline dual threshold used to check it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import StepSizeSchedule

LAMBDA_FLOOR = 1e-6


@dataclass
class DualState:
    """Budget dual ``lam``, cost dual ``mu`` and the step counter.

    With ``normalize`` set, gradients are divided by the per-auction target
    spend B/T so one step size fits every budget scale.
    """

    lam: float = 1.0
    mu: float = 0.0
    schedule: StepSizeSchedule = field(default_factory=lambda: StepSizeSchedule.constant(0.01))
    lam_floor: float = LAMBDA_FLOOR
    normalize: bool = False
    t: int = 0

    def __post_init__(self):
        if not self.lam_floor > 0:
            raise ValueError("lambda floor must be positive")
        self.lam = max(self.lam, self.lam_floor)
        self.mu = max(self.mu, 0.0)

    def next_step(self) -> float:
        self.t += 1
        return self.schedule.value(self.t)

    def _scale(self, B, T):
        return (T / B) if self.normalize and B > 0 else 1.0


def md_bid(lam: float, r: float) -> float:
    return r / lam


def cost_cap_bid(lam: float, mu: float, C: float, r: float) -> float:
    return (1.0 + mu * C) / (lam + mu) * r


def dogd_md_step(state: DualState, r: float, c: float, B: float, T: float):
    """Per-auction update after observing the auction's price ``c``.

    The win indicator is evaluated with the pre-update dual, matching a bid
    of r/lam settled at second price. Returns (lam, next bid per impression).
    """
    if not (B > 0 and T > 0):
        raise ValueError("budget and horizon must be positive")
    eps = state.next_step()
    won = r > state.lam * c
    grad = B / T - (c if won else 0.0)
    grad *= state._scale(B, T)
    state.lam = max(state.lam_floor, state.lam - eps * grad)
    return state.lam, md_bid(state.lam, r)


def dogd_md_batch(state: DualState, requests: float, spend: float, B: float, T: float):
    """Mini-batch update from one interval's request count and spend.
    Returns (lam, bid per click)."""
    if requests < 0:
        raise ValueError("request count must be non-negative")
    eps = state.next_step()
    grad = requests / T * B - spend
    grad *= state._scale(B, T)
    state.lam = max(state.lam_floor, state.lam - eps * grad)
    return state.lam, 1.0 / state.lam


def dogd_costcap_step(state: DualState, r: float, c: float, B: float, T: float, C: float):
    """Per-auction update of both duals. Returns (lam, mu, next bid per
    impression)."""
    if not C > 0:
        raise ValueError("cap must be positive")
    eps = state.next_step()
    lam, mu = state.lam, state.mu
    won = r - lam * c - mu * c + mu * C * r > 0
    g_lam = B / T - (c if won else 0.0)
    g_mu = (C * r - c) if won else 0.0
    s = state._scale(B, T)
    state.lam = max(state.lam_floor, lam - eps * g_lam * s)
    state.mu = max(0.0, mu - eps * g_mu * s)
    return state.lam, state.mu, cost_cap_bid(state.lam, state.mu, C, r)


def dogd_costcap_batch(state: DualState, requests: float, spend: float, conversions: float,
                       B: float, T: float, C: float):
    """Mini-batch cost cap update. Returns (lam, mu, bid per click)."""
    if not C > 0:
        raise ValueError("cap must be positive")
    eps = state.next_step()
    s = state._scale(B, T)
    g_lam = requests / T * B - spend
    g_mu = C * conversions - spend
    state.lam = max(state.lam_floor, state.lam - eps * g_lam * s)
    state.mu = max(0.0, state.mu - eps * g_mu * s)
    return state.lam, state.mu, (1.0 + state.mu * C) / (state.lam + state.mu)


# ---------------------------------------------------------------------------
# Offline counterparts
# ---------------------------------------------------------------------------

def threshold_allocation(r, c, lam: float) -> np.ndarray:
    """Auctions won by bidding r/lam at second price."""
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    return r > lam * c


def replay_spend(r, c, lam: float) -> float:
    c = np.asarray(c, dtype=float)
    return float(c[threshold_allocation(r, c, lam)].sum())


def lambda_star(r, c, B: float, floor: float = LAMBDA_FLOOR) -> float:
    """Smallest dual whose threshold allocation spends at most B.

    Spend is a step function of lam that drops at each ratio r/c; the
    answer is the first ratio, in descending order, at which the running
    spend would exceed B.
    """
    r = np.asarray(r, dtype=float)
    c = np.asarray(c, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(c > 0, r / np.where(c > 0, c, 1.0), np.where(r > 0, np.inf, 0.0))
    order = np.argsort(-ratio, kind="stable")
    q = ratio[order]
    spend = np.cumsum(c[order])
    # items sharing a ratio enter together
    n = len(q)
    j = 0
    while j < n:
        k = j
        while k + 1 < n and q[k + 1] == q[j]:
            k += 1
        if spend[k] > B:
            lam = max(float(q[j]), floor)
            # r > lam c can disagree with r/c > lam in the last bit
            while replay_spend(r, c, lam) > B:
                lam = float(np.nextafter(lam, np.inf))
            return lam
        j = k + 1
    return floor
