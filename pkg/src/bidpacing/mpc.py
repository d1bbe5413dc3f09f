"""Model predictive control: monotone bid landscapes (LIS, PAVA), the eCPM
histogram model, and receding-horizon bid search for cost cap and target
CPA campaigns."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class BidObservation:
    bid: float
    spend: float
    conversions: float = 0.0

    def __post_init__(self):
        if min(self.bid, self.spend, self.conversions) < 0:
            raise ValueError("observations must be non-negative")


# ---------------------------------------------------------------------------
# Monotone extraction
# ---------------------------------------------------------------------------

def lis_indices(values: Sequence[float]) -> list:
    """Indices of a longest non-decreasing subsequence, O(n log n).

    Among maximal-length answers the one ending earliest is returned.
    """
    n = len(values)
    if n == 0:
        raise ValueError("empty sequence")
    tails = []       # tails[l] = value ending the best run of length l+1
    tail_idx = []
    pred = [-1] * n
    length = [0] * n
    for i, v in enumerate(values):
        j = bisect.bisect_right(tails, v)
        pred[i] = tail_idx[j - 1] if j > 0 else -1
        if j == len(tails):
            tails.append(v)
            tail_idx.append(i)
        else:
            tails[j] = v
            tail_idx[j] = i
        length[i] = j + 1
    best = max(length)
    end = length.index(best)
    out = []
    while end != -1:
        out.append(end)
        end = pred[end]
    return out[::-1]


def lis_extract(observations: Sequence, key: Callable = lambda o: o.spend) -> list:
    if not observations:
        raise ValueError("no observations")
    return [observations[i] for i in lis_indices([key(o) for o in observations])]


def pava_fit(values, weights=None) -> np.ndarray:
    """Weighted least-squares non-decreasing fit, one value per input."""
    y = np.asarray(values, dtype=float)
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    if y.shape != w.shape:
        raise ValueError("values and weights differ in length")
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    means, wts, sizes = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        wts.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), wts.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), wts.pop(), sizes.pop()
            wt = w1 + w2
            means.append((w1 * m1 + w2 * m2) / wt)
            wts.append(wt)
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


# ---------------------------------------------------------------------------
# Piecewise-linear monotone curve
# ---------------------------------------------------------------------------

class MonotoneCurve:
    """Piecewise-linear non-decreasing map from bid to a delivery metric,
    extended linearly past both ends. Values and inverses are clamped at 0.
    """

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("knots must be two equal-length vectors")
        if len(x) < 2:
            raise ValueError("need at least two knots")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knot bids must be strictly increasing")
        if np.any(np.diff(y) < 0):
            raise ValueError("knot values must be non-decreasing")
        self.x = x
        self.y = y

    def __call__(self, b: float) -> float:
        x, y = self.x, self.y
        if b <= x[0]:
            slope = (y[1] - y[0]) / (x[1] - x[0])
            v = y[0] + slope * (b - x[0])
        elif b >= x[-1]:
            slope = (y[-1] - y[-2]) / (x[-1] - x[-2])
            v = y[-1] + slope * (b - x[-1])
        else:
            v = float(np.interp(b, x, y))
        return max(0.0, float(v))

    def invert(self, target: float) -> float:
        x, y = self.x, self.y
        if target < y[0]:
            i = _first_rising(y)
            if i is None:
                return max(0.0, float(x[0]))
            b = x[i] + (target - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i])
        elif target > y[-1]:
            i = _last_rising(y)
            if i is None:
                return float(x[-1])
            b = x[i + 1] + (target - y[i + 1]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i])
        else:
            # first knot reaching the target, then interpolate back
            j = int(np.searchsorted(y, target, side="left"))
            if y[j] == target:
                b = x[j]
            else:
                b = x[j - 1] + (target - y[j - 1]) / (y[j] - y[j - 1]) * (x[j] - x[j - 1])
        return max(0.0, float(b))

    def scaled(self, factor: float) -> "MonotoneCurve":
        """Same curve with values multiplied by ``factor`` (horizon rescaling)."""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        return MonotoneCurve(self.x, self.y * factor)


def _first_rising(y):
    for i in range(len(y) - 1):
        if y[i + 1] > y[i]:
            return i
    return None


def _last_rising(y):
    for i in range(len(y) - 2, -1, -1):
        if y[i + 1] > y[i]:
            return i
    return None


def _collapse_equal_bids(x, y):
    xs, ys = [], []
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[j + 1] == x[i]:
            j += 1
        xs.append(x[i])
        ys.append(float(np.mean(y[i:j + 1])))
        i = j + 1
    return np.array(xs), np.array(ys)


def curve_from_pairs(bids, values, method: str = "pava") -> MonotoneCurve:
    """Fit a monotone bid-to-metric curve from recent (bid, value) pairs.

    Pairs are ordered by bid first. ``lis`` keeps the longest run of
    non-decreasing values; ``pava`` keeps every pair and pools violators.
    """
    b = np.asarray(bids, dtype=float)
    v = np.asarray(values, dtype=float)
    if b.shape != v.shape:
        raise ValueError("bids and values differ in length")
    order = np.argsort(b, kind="stable")
    b, v = b[order], v[order]
    method = method.lower()
    if method == "lis":
        keep = lis_indices(list(v))
        b, v = b[keep], v[keep]
    elif method == "pava":
        v = pava_fit(v)
    else:
        raise ValueError(f"unknown fitting method {method!r}")
    x, y = _collapse_equal_bids(b, v)
    # averaging equal values can drift by an ulp; keep the knots monotone
    y = np.maximum.accumulate(y)
    if len(x) < 2:
        raise ValueError("need at least two distinct bids after fitting")
    return MonotoneCurve(x, y)


# ---------------------------------------------------------------------------
# eCPM histogram
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EcpmHistogram:
    edges: np.ndarray
    p: np.ndarray
    z: np.ndarray   # bucket midpoints
    g: np.ndarray   # mean price over buckets 0..j

    @property
    def n_buckets(self) -> int:
        return len(self.p)


def histogram_fit(samples, n_buckets: int) -> EcpmHistogram:
    s = np.asarray(samples, dtype=float)
    if s.size == 0:
        raise ValueError("no eCPM samples")
    if n_buckets < 1:
        raise ValueError("need at least one bucket")
    lo, hi = float(s.min()), float(s.max())
    if lo == hi:
        edges = np.array([lo, hi])
        p = np.array([1.0])
    else:
        counts, edges = np.histogram(s, bins=n_buckets, range=(lo, hi))
        p = counts / counts.sum()
    z = 0.5 * (edges[:-1] + edges[1:])
    cum_p = np.cumsum(p)
    cum_zp = np.cumsum(z * p)
    g = cum_zp / cum_p  # first bucket holds the minimum, so cum_p > 0
    return EcpmHistogram(edges, p, z, g)


def histogram_bid(hist: EcpmHistogram, target_cost: float, ctr: float) -> float:
    """Bid per click whose winning threshold gives the mean price nearest
    ``target_cost``."""
    if not ctr > 0:
        raise ValueError("click-through rate must be positive")
    k = int(np.argmin(np.abs(hist.g - target_cost)))
    return float(hist.z[k] / ctr)


# ---------------------------------------------------------------------------
# Receding-horizon search
# ---------------------------------------------------------------------------

def bid_grid(b_l: float, b_u: float, step: float) -> np.ndarray:
    if not (b_l < b_u and step > 0):
        raise ValueError("need b_l < b_u and a positive step")
    n = int(math.floor((b_u - b_l) / step + 1e-9))
    return b_l + step * np.arange(n + 1)


def horizon_cost_cap(B_rem: float, B: float, C: float, conversions: float) -> float:
    """Highest average cost per conversion still compatible with the cap;
    inf once the lifetime conversion target has been reached."""
    left = B / C - conversions
    return B_rem / left if left > 0 else math.inf


def mpc_costcap_bid(f, g, B_rem: float, B: float, C: float, conversions: float,
                    requests_rem: float, requests_horizon: float,
                    b_l: float, b_u: float, step: float) -> float:
    """Largest grid bid whose forecast horizon spend fits the horizon budget
    and whose forecast cost per conversion stays under the horizon cap.
    ``f`` and ``g`` map bid to spend and conversions over the horizon.
    Falls back to ``b_l`` when no bid qualifies."""
    if not requests_rem > 0:
        raise ValueError("no remaining supply")
    budget_h = requests_horizon / requests_rem * B_rem
    cap_h = horizon_cost_cap(B_rem, B, C, conversions)
    best = b_l
    for b in bid_grid(b_l, b_u, step):
        if _feasible(f(b), g(b), budget_h, cap_h):
            best = max(best, float(b))
    return best


def _feasible(spend, conv, budget, cap) -> bool:
    if spend > budget:
        return False
    if math.isinf(cap):
        return True
    if conv > 0:
        return spend / conv <= cap
    return spend == 0


def spend_deviation(spend: float, conversions: float, C: float) -> float:
    return spend - C * conversions


def mpc_targetcpa_bid(f, g, spend: float, conversions: float, B: float, C: float,
                      dt: float, remaining: float, b_l: float, b_u: float, step: float,
                      tol: float = 1e-9) -> float:
    """Bid that repays the accumulated spend deviation S - C*NC.

    ``f`` and ``g`` forecast spend and conversions per pacing interval. For
    a bid b held over a window W the deviation left is
    P(b, W) = (f(b) - C g(b)) W/dt + D. The highest bid that can bring P to
    zero inside the remaining lifetime wins; if P keeps one sign everywhere
    the bid closest to zero is taken (largest on the negative side, smallest
    on the positive side).
    """
    if not (dt > 0 and remaining > 0):
        raise ValueError("interval and remaining lifetime must be positive")
    D = spend_deviation(spend, conversions, C)
    grid = bid_grid(b_l, b_u, step)
    n_win = max(1, int(math.floor(remaining / dt + 1e-9)))
    windows = np.arange(1, n_win + 1, dtype=float)  # W / dt
    repay = np.array([f(b) - C * g(b) for b in grid])
    P = repay[:, None] * windows[None, :] + D

    zero = np.abs(P) <= tol
    first, last = P[:, 0], P[:, -1]
    crosses = zero.any(axis=1) | (first * last < 0)
    if crosses.any():
        return float(grid[np.nonzero(crosses)[0].max()])
    if np.all(P < 0):
        rows = np.nonzero(P.max(axis=1) == P.max())[0]
        return float(grid[rows.max()])
    if np.all(P > 0):
        rows = np.nonzero(P.min(axis=1) == P.min())[0]
        return float(grid[rows.min()])
    # signs differ across bids but no single bid crosses zero in range
    closest = np.abs(P).min(axis=1)
    rows = np.nonzero(closest == closest.min())[0]
    return float(grid[rows.max()])


def stabilize_bid(new_bid: float, previous_bid: float, band: float = 0.1) -> float:
    """Keep successive bids within +-band of the previous one."""
    if previous_bid is None or previous_bid <= 0:
        return new_bid
    return min(max(new_bid, (1 - band) * previous_bid), (1 + band) * previous_bid)


def horizon_factor(horizon: float, dt: float, requests_horizon=None, requests_interval=None) -> float:
    """Factor turning a per-interval forecast into a horizon forecast: the
    request-count ratio when both forecasts are given, else H/dt."""
    if requests_horizon is not None and requests_interval:
        return requests_horizon / requests_interval
    return horizon / dt
