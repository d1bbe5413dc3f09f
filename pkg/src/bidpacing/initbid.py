"""Initial bid estimation: lognormal market formula, cost cap capping,
auction replay search and the converged-bids window."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import ndtri


class InfeasibleBudget(ValueError):
    pass


@dataclass(frozen=True)
class LognormalParams:
    """Log-scale mean and deviation of the clearing price per impression
    (mu, sigma) and of the conversion rate (mu_r, sigma_r)."""

    mu: float
    sigma: float
    mu_r: float
    sigma_r: float

    def __post_init__(self):
        if self.sigma < 0 or self.sigma_r < 0:
            raise ValueError("log-scale deviations must be non-negative")


def budget_quantile(params: LognormalParams, B: float, T: float) -> float:
    """Fraction of the expected total market cost the budget covers."""
    return B / (T * math.exp(params.mu + params.sigma ** 2 / 2))


def init_bid_parametric(params: LognormalParams, B: float, T: float) -> float:
    """Bid per conversion whose expected second-price spend per auction is
    B/T when price and conversion rate are independent lognormals."""
    q = budget_quantile(params, B, T)
    if not 0 < q < 1:
        raise InfeasibleBudget(
            f"budget share {q:.6g} outside (0, 1): budget is zero or exceeds the whole market")
    spread = math.sqrt(params.sigma_r ** 2 + params.sigma ** 2)
    return math.exp(params.mu - params.mu_r + params.sigma ** 2 + spread * float(ndtri(q)))


def init_bid_costcap(bid: float, C: float, sigma_ratio: float = 1.0) -> float:
    if not C > 0:
        raise ValueError("cap must be positive")
    if not 0 < sigma_ratio <= 1:
        raise ValueError("price ratio must lie in (0, 1]")
    return min(bid, C / sigma_ratio)


def replay_spend(costs: np.ndarray, pctrs: np.ndarray, bid: float) -> float:
    """Second-price spend of a constant bid per conversion over a log."""
    won = bid * pctrs > costs
    return float(costs[won].sum())


def auction_replay_bid(log, B: float, b_l: float = 1e-6, b_u: float = 1e4,
                       eps: float = 1e-6) -> float:
    """Binary search for the bid that spends the budget on a past day.

    ``log`` is a sequence of (competing eCPM, pctr) pairs. The midpoint of
    the final interval is returned when it stays within budget; otherwise
    the largest probed bid that did.
    """
    arr = np.asarray(log, dtype=float)
    if arr.size == 0:
        raise ValueError("empty auction log")
    if B < 0:
        raise ValueError("budget must be non-negative")
    if not b_l < b_u:
        raise ValueError("invalid search interval")
    costs, pctrs = arr[:, 0], arr[:, 1]
    safe = None
    while b_u - b_l > eps:
        b = 0.5 * (b_l + b_u)
        spend = replay_spend(costs, pctrs, b)
        if spend <= B:
            safe = b if safe is None else max(safe, b)
        if spend < B:
            b_l = b
        else:
            b_u = b
    b = 0.5 * (b_l + b_u)
    if replay_spend(costs, pctrs, b) <= B:
        return b
    return safe if safe is not None else b_l


class BidWindow(NamedTuple):
    start: int   # inclusive, 0-based
    stop: int    # exclusive
    mean: float


def window_stats(prefix_s, prefix_q, start: int, stop: int):
    n = stop - start
    mean = (prefix_s[stop] - prefix_s[start]) / n
    var = (prefix_q[stop] - prefix_q[start]) / n - mean * mean
    return mean, var


def converged_bid_window(bids: Sequence[float], delta: float, K: int) -> Optional[BidWindow]:
    """Two-pointer scan for a long run of bids with (population) variance at
    most ``delta`` and length at least K.

    This is a heuristic: after the first qualifying window for a given right
    end the scan moves on, so a longer window may be missed.
    """
    b = np.asarray(bids, dtype=float)
    T = len(b)
    if K < 2:
        raise ValueError("minimum length must be at least 2")
    if K > T:
        raise ValueError("minimum length exceeds the sequence")
    S = np.concatenate([[0.0], np.cumsum(b)])
    Q = np.concatenate([[0.0], np.cumsum(b * b)])
    left = 0
    best = None
    best_len = 0
    for right in range(T):
        while right - left + 1 >= K:
            mean, var = window_stats(S, Q, left, right + 1)
            # differences of running sums carry rounding from the whole
            # prefix, so allow a few ulps of the prefix totals
            n = right + 1 - left
            slack = 8 * np.finfo(float).eps * (Q[right + 1] + S[right + 1] * abs(mean)) / n
            if var <= delta + slack:
                if right - left + 1 > best_len:
                    best_len = right - left + 1
                    best = BidWindow(left, right + 1, float(mean))
                break
            left += 1
    return best
