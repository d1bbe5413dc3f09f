"""Deep-funnel bidding: PID control of the delivery, conversion-cost and
deep-conversion multipliers, predicted-CPX smoothing, and GSP replay of
bid-to-cost and bid-to-conversion curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .mpc import bid_grid
from .pid import PidChannel, PidGains, pid_control


def deep_bid(alpha: float, beta1: float, beta2: float, C: float, D: float, r: float, d: float) -> float:
    """Bid per impression alpha (beta1 C r + beta2 D d r)."""
    if not (0 <= r <= 1 and 0 <= d <= 1):
        raise ValueError("rates must lie in [0, 1]")
    return alpha * (beta1 * C * r + beta2 * D * d * r)


def variant_bid(alpha: float, beta1: float, beta2: float, C: float, D: float, r: float, d: float) -> float:
    """Bid of the deep-rate formulation: the cost-cap bid alpha beta1 C r,
    scaled up or down by how the deep rate d compares with the target rate
    C/D. The scale is floored at zero."""
    target_rate = C / D
    if not target_rate > 0:
        raise ValueError("target deep rate must be positive")
    factor = max(0.0, 1.0 + beta2 * (d / target_rate - 1.0))
    return alpha * beta1 * C * r * factor


@dataclass
class DeepPidState:
    alpha: float = 1.0
    beta1: float = 1.0
    beta2: float = 1.0
    gains: tuple = (PidGains(), PidGains(), PidGains())
    channels: list = field(default_factory=lambda: [PidChannel(), PidChannel(), PidChannel()])
    variant: bool = False

    def __post_init__(self):
        if min(self.alpha, self.beta1, self.beta2) <= 0:
            raise ValueError("multipliers must be positive")
        if isinstance(self.gains, PidGains):
            self.gains = (self.gains,) * 3

    def bid(self, C, D, r, d) -> float:
        if self.variant:
            return variant_bid(self.alpha, self.beta1, self.beta2, C, D, r, d)
        return deep_bid(self.alpha, self.beta1, self.beta2, C, D, r, d)


def deep_pid_update(state: DeepPidState, spend_obs: float, target_spend: float,
                    C: float, cost_obs: Optional[float], D: float,
                    deep_obs: Optional[float]) -> DeepPidState:
    """One interval of the three PID loops.

    ``target_spend`` is B/T times the interval's auction count. ``deep_obs``
    is the observed cost per deep conversion, or, for the variant, the
    observed deep rate. A None observation freezes that loop.
    """
    if not (target_spend > 0 and C > 0 and D > 0):
        raise ValueError("targets must be positive")
    errors = [target_spend - spend_obs, None, None]
    if cost_obs is not None:
        errors[1] = C - cost_obs
    if deep_obs is not None:
        errors[2] = (C / D - deep_obs) if state.variant else (D - deep_obs)
    names = ("alpha", "beta1", "beta2")
    for name, e, gains, ch in zip(names, errors, state.gains, state.channels):
        if e is None:
            continue
        u = pid_control(gains, ch, e, 1.0)
        setattr(state, name, getattr(state, name) * math.exp(u))
    return state


def predicted_cpx(costs, pctrs, deep_rates=None):
    """Cost per predicted conversion and per predicted deep conversion over
    won auctions. A None entry means the denominator is zero and the
    corresponding loop should hold still."""
    c = np.asarray(costs, dtype=float)
    r = np.asarray(pctrs, dtype=float)
    den = r.sum()
    cpc = float(c.sum() / den) if den > 0 else None
    cpd = None
    if deep_rates is not None:
        dd = (r * np.asarray(deep_rates, dtype=float)).sum()
        cpd = float(c.sum() / dd) if dd > 0 else None
    return cpc, cpd


# ---------------------------------------------------------------------------
# GSP replay
# ---------------------------------------------------------------------------

def _ladder_matrix(log, k: int) -> tuple:
    pctr = np.array([row[0] for row in log], dtype=float)
    lad = np.zeros((len(log), k))
    for i, row in enumerate(log):
        ladder = np.asarray(row[1], dtype=float)
        if len(ladder) != k:
            raise ValueError("every ladder needs one entry per slot")
        if np.any(np.diff(ladder) > 0):
            raise ValueError("eCPM ladders must be sorted descending")
        lad[i] = ladder
    return pctr, lad


def replay_gsp(log, slots: Sequence[float], bids) -> tuple:
    """Cost and expected conversions of each bid per conversion in ``bids``
    when inserted into logged GSP auctions.

    ``log`` holds (pctr, top-k competing eCPMs, descending). A bid enters
    when its eCPM reaches the last slot's eCPM, takes the slot below every
    strictly higher competitor, pays that slot's logged eCPM times the slot
    discount and collects pctr times the discount in conversions.
    """
    alpha = np.asarray(slots, dtype=float)
    k = len(alpha)
    bids = np.atleast_1d(np.asarray(bids, dtype=float))
    if len(log) == 0:
        return np.zeros_like(bids), np.zeros_like(bids)
    pctr, lad = _ladder_matrix(log, k)
    cost = np.zeros_like(bids)
    conv = np.zeros_like(bids)
    rows = np.arange(len(pctr))
    for n, b in enumerate(bids):
        ecpm = b * pctr
        win = ecpm >= lad[:, -1]
        slot = (lad > ecpm[:, None]).sum(axis=1)  # 0-based slot
        slot = np.minimum(slot, k - 1)
        a = alpha[slot]
        cost[n] = float((lad[rows, slot] * a)[win].sum())
        conv[n] = float((pctr * a)[win].sum())
    return cost, conv


def bid_cost_curve(log, slots, b_l: float, b_u: float, step: float):
    grid = bid_grid(b_l, b_u, step)
    return grid, replay_gsp(log, slots, grid)[0]


def bid_conversion_curve(log, slots, b_l: float, b_u: float, step: float):
    grid = bid_grid(b_l, b_u, step)
    return grid, replay_gsp(log, slots, grid)[1]
