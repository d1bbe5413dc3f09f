"""Campaign groups sharing one budget, and max delivery across channels that
mix second-price onsite auctions with first-price offsite exchanges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

from .dogd import DualState, dogd_md_batch, dogd_md_step, md_bid
from .mpc import _feasible, bid_grid, horizon_cost_cap
from .shading import WinProbModel, solve_margin_bid, winprob_eval


@dataclass
class GroupState:
    """Shared budget dual plus per-campaign duals.

    ``mu`` are cost-cap duals, ``gamma`` the duals of the minimum spend
    shares ``shares``. ``forecasts`` is each campaign's expected auction
    count T_i. ``multipliers`` scales each campaign's bid and defaults to 1;
    campaigns are otherwise assumed to face the same market.
    """

    forecasts: Sequence[float]
    dual: DualState = field(default_factory=DualState)
    shares: Optional[Sequence[float]] = None
    mu: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    multipliers: Optional[Sequence[float]] = None

    def __post_init__(self):
        n = len(self.forecasts)
        if n == 0:
            raise ValueError("a group needs at least one campaign")
        if any(not t > 0 for t in self.forecasts):
            raise ValueError("campaign forecasts must be positive")
        self.forecasts = [float(t) for t in self.forecasts]
        if self.shares is None:
            self.shares = [0.0] * n
        if len(self.shares) != n or any(s < 0 for s in self.shares):
            raise ValueError("one non-negative share per campaign")
        if sum(self.shares) > 1 + 1e-12:
            raise ValueError(f"minimum shares sum to {sum(self.shares):.6g} > 1")
        self.mu = list(self.mu) or [0.0] * n
        self.gamma = list(self.gamma) or [0.0] * n
        if len(self.mu) != n or len(self.gamma) != n:
            raise ValueError("one dual per campaign")
        self.mu = [max(0.0, v) for v in self.mu]
        self.gamma = [max(0.0, v) for v in self.gamma]
        if self.multipliers is None:
            self.multipliers = [1.0] * n
        if len(self.multipliers) != n:
            raise ValueError("one multiplier per campaign")

    @property
    def lam(self) -> float:
        return self.dual.lam

    @property
    def n_campaigns(self) -> int:
        return len(self.forecasts)

    @property
    def total_forecast(self) -> float:
        return float(sum(self.forecasts))


def group_md_bid(state: GroupState, i: int, r: float) -> float:
    return md_bid(state.dual.lam, r) * state.multipliers[i]


def group_md_step(state: GroupState, i: int, r: float, c: float, B: float, T=None):
    """Per-auction shared-dual step for an auction of campaign ``i``."""
    T = state.total_forecast if T is None else T
    lam, _ = dogd_md_step(state.dual, r, c, B, T)
    return lam, group_md_bid(state, i, r)


def group_md_batch(state: GroupState, requests: float, spend: float, B: float, T=None):
    """Shared-dual step on group totals for one interval. Returns (lam,
    bid per click)."""
    T = state.total_forecast if T is None else T
    return dogd_md_batch(state.dual, requests, spend, B, T)


def group_costcap_mpc(f, g, caps: Sequence[float], forecasts: Sequence[float],
                      conversions: Sequence[float], requests_rem: Sequence[float],
                      requests_horizon: Sequence[float], B_rem: float, B: float,
                      b_l: float, b_u: float, step: float) -> float:
    """Largest shared grid bid whose summed horizon spend fits the group's
    horizon budget while every campaign's forecast cost per conversion stays
    under its own horizon cap.

    ``f[i]``, ``g[i]`` map bid to campaign i's horizon spend and
    conversions. The lifetime budget is split by forecast share; the
    remaining budget is split by each campaign's share of remaining supply.
    Falls back to ``b_l``.
    """
    n = len(f)
    if not (len(g) == len(caps) == len(forecasts) == len(conversions)
            == len(requests_rem) == len(requests_horizon) == n):
        raise ValueError("per-campaign inputs must have equal length")
    total_rem = float(sum(requests_rem))
    if not total_rem > 0:
        raise ValueError("no remaining supply")
    total_forecast = float(sum(forecasts))
    budget_h = float(sum(requests_horizon)) / total_rem * B_rem
    cap_h = []
    for i in range(n):
        B_i = forecasts[i] / total_forecast * B
        B_rem_i = requests_rem[i] / total_rem * B_rem
        cap_h.append(horizon_cost_cap(B_rem_i, B_i, caps[i], conversions[i]))
    best = b_l
    for b in bid_grid(b_l, b_u, step):
        spends = [f[i](b) for i in range(n)]
        if sum(spends) > budget_h:
            continue
        if all(_feasible(spends[i], g[i](b), math.inf, cap_h[i]) for i in range(n)):
            best = max(best, float(b))
    return best


def group_min_delivery_bid(state: GroupState, i: int, r: float) -> float:
    den = max(state.dual.lam_floor, state.dual.lam - state.gamma[i])
    return r / den * state.multipliers[i]


def group_min_delivery_step(state: GroupState, i: int, r: float, c: float, B: float, T=None):
    """Per-auction step for an auction of campaign ``i``.

    The budget dual moves as in max delivery, on wins only. Campaign i's
    floor dual rises while it spends below s_i B / T_i. Returns (lam,
    gamma_i, next bid).
    """
    if not B > 0:
        raise ValueError("budget must be positive")
    T = state.total_forecast if T is None else T
    ds = state.dual
    eps = ds.next_step()
    won = r * state.multipliers[i] > max(ds.lam_floor, ds.lam - state.gamma[i]) * c
    spent = c if won else 0.0
    s = ds._scale(B, T)
    ds.lam = max(ds.lam_floor, ds.lam - eps * (B / T - spent) * s)
    floor_rate = state.shares[i] * B / state.forecasts[i]
    state.gamma[i] = max(0.0, state.gamma[i] - eps * (spent - floor_rate) * s)
    return ds.lam, state.gamma[i], group_min_delivery_bid(state, i, r)


# ---------------------------------------------------------------------------
# Multiple channels
# ---------------------------------------------------------------------------

class AuctionKind(str, Enum):
    SPA = "spa"
    FPA = "fpa"


@dataclass(frozen=True)
class ChannelSpec:
    channel_id: int
    kind: AuctionKind = AuctionKind.SPA
    markup: float = 0.0
    model: Optional[WinProbModel] = None

    def __post_init__(self):
        if self.kind == AuctionKind.SPA:
            if self.markup != 0:
                raise ValueError("second-price channels carry no markup")
        else:
            if not isinstance(self.model, WinProbModel):
                raise ValueError("first-price channels need a win-probability model")
            if self.markup < 0:
                raise ValueError("markup must be non-negative")


def channel_bid(lam: float, r: float, channel: ChannelSpec, features=None) -> float:
    if channel.kind == AuctionKind.SPA:
        return md_bid(lam, r)
    return solve_margin_bid(channel.model, features, lam / r, channel.markup)


def multichannel_step(state: DualState, B: float, T: float, r: float, channel: ChannelSpec,
                      competing: Optional[float] = None, features=None):
    """Bid on one auction with the shared dual, then move the dual by the
    gap between the target spend B/T and this auction's cost.

    Onsite cost is the competing price when r > lam c (``competing`` is
    required). Offsite cost is the expected charge P(b) b (1 + m).
    Returns (updated lam, bid placed, cost used in the step).
    """
    if not (B > 0 and T > 0 and r > 0):
        raise ValueError("budget, horizon and pctr must be positive")
    lam = state.lam
    bid = channel_bid(lam, r, channel, features)
    if channel.kind == AuctionKind.SPA:
        if competing is None:
            raise ValueError("onsite step needs the competing price")
        cost = competing if r > lam * competing else 0.0
    else:
        p, _ = winprob_eval(channel.model, features, bid)
        cost = p * bid * (1.0 + channel.markup)
    eps = state.next_step()
    state.lam = max(state.lam_floor, lam - eps * (B / T - cost) * state._scale(B, T))
    return state.lam, bid, cost
