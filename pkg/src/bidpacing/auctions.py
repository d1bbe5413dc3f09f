"""Auction settlement: second price, first price, GSP, k-slot VCG and the
reserve price for two uniform bidders."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np


class Outcome(NamedTuple):
    won: bool
    cost: float


def settle_spa(bid: float, competing: float) -> Outcome:
    # ties lose
    if bid > competing:
        return Outcome(True, float(competing))
    return Outcome(False, 0.0)


def settle_fpa(bid: float, competing: float) -> Outcome:
    if bid > competing:
        return Outcome(True, float(bid))
    return Outcome(False, 0.0)


def settle_spa_multi(bids: Sequence[float], competing: float):
    """Single-slot second price among several campaigns plus an outside
    competing eCPM. Returns (winner index or None, price). The first of
    several equal top bids wins against the others, but every campaign bid
    must strictly beat ``competing``."""
    best = None
    best_bid = -np.inf
    for i, b in enumerate(bids):
        if b > best_bid:
            best, best_bid = i, b
    if best is None or not best_bid > competing:
        return None, 0.0
    price = competing
    for i, b in enumerate(bids):
        if i != best and b > price:
            price = b
    return best, float(price)


@dataclass(frozen=True)
class SlotConfig:
    """Position discounts, one per slot, sorted non-increasing."""

    discounts: tuple

    def __init__(self, discounts):
        alpha = tuple(float(a) for a in discounts)
        if not alpha:
            raise ValueError("need at least one slot")
        if any(a < 0 or a > 1 for a in alpha):
            raise ValueError("discounts must lie in [0, 1]")
        if any(a < b for a, b in zip(alpha, alpha[1:])):
            raise ValueError("discounts must be non-increasing")
        object.__setattr__(self, "discounts", alpha)

    @property
    def k(self) -> int:
        return len(self.discounts)


@dataclass
class SettlementResult:
    """Per-bidder outcome in input order. ``slot`` is 0-based or None."""

    slot: list
    payment: list
    payment_per_click: Optional[list] = None

    @property
    def by_slot(self) -> list:
        """Payments of the slot winners, top slot first."""
        out = {}
        for s, p in zip(self.slot, self.payment):
            if s is not None:
                out[s] = p
        return [out[s] for s in sorted(out)]


def settle_gsp(ecpms: Sequence[float], slots: SlotConfig, pctrs=None) -> SettlementResult:
    """Generalized second price on per-impression first-slot eCPMs.

    The winner of slot j pays the next ranked eCPM times the slot discount.
    Missing competitors count as eCPM 0. Equal eCPMs keep input order.
    """
    ecpms = [float(e) for e in ecpms]
    if not ecpms:
        raise ValueError("no bidders")
    if any(e < 0 for e in ecpms):
        raise ValueError("eCPMs must be non-negative")
    order = sorted(range(len(ecpms)), key=lambda i: -ecpms[i])  # stable
    ranked = [ecpms[i] for i in order] + [0.0] * (slots.k + 1)
    slot = [None] * len(ecpms)
    pay = [0.0] * len(ecpms)
    for j in range(min(slots.k, len(ecpms))):
        i = order[j]
        slot[i] = j
        pay[i] = ranked[j + 1] * slots.discounts[j]
    per_click = None
    if pctrs is not None:
        per_click = [0.0] * len(ecpms)
        for i, j in enumerate(slot):
            if j is None:
                continue
            clicks = pctrs[i] * slots.discounts[j]
            per_click[i] = pay[i] / clicks if clicks > 0 else 0.0
    return SettlementResult(slot, pay, per_click)


def vcg_kslot_payments(sorted_bids: Sequence[float], slots: SlotConfig) -> list:
    """VCG payments for the k top bidders.

    ``sorted_bids`` are per-click values sorted non-increasing and the slot
    discounts are click-through rates. Bidder i (1-based) pays
    sum_{j=i..k} b_{j+1} (a_j - a_{j+1}) with a_{k+1} = 0 and absent bids 0.
    """
    b = [float(x) for x in sorted_bids]
    if any(x < y for x, y in zip(b, b[1:])):
        raise ValueError("bids must be sorted non-increasing")
    k = slots.k
    a = list(slots.discounts) + [0.0]
    b = b + [0.0] * (k + 1 - len(b)) if len(b) < k + 1 else b
    n_win = min(k, len(sorted_bids))
    payments = []
    for i in range(n_win):
        # zero-based: slots i..k-1, next bid b[j+1]
        p = 0.0
        for j in range(i, k):
            p += b[j + 1] * (a[j] - a[j + 1])
        payments.append(p)
    return payments


class MyersonResult(NamedTuple):
    reserve: float
    profit_no_reserve: float
    profit_with_reserve: float


def second_price_revenue(values: np.ndarray, reserve: float = 0.0) -> np.ndarray:
    """Per-auction revenue of a second-price auction with a reserve.
    ``values`` has one row per auction, one column per bidder."""
    top2 = np.sort(values, axis=1)[:, -2:]
    second, first = top2[:, 0], top2[:, 1]
    rev = np.where(first >= reserve, np.maximum(second, reserve), 0.0)
    return rev


def myerson_uniform_reserve(n_draws: int = 1_000_000, seed=0) -> MyersonResult:
    """Optimal reserve for two i.i.d. U[0,1] bidders and the Monte Carlo
    expected revenue with and without it.

    The virtual value of U[0,1] is 2z - 1, whose root is the reserve.
    """
    reserve = _virtual_value_root()
    rng = np.random.default_rng(seed)
    v = rng.random((n_draws, 2))
    no_res = float(second_price_revenue(v, 0.0).mean())
    with_res = float(second_price_revenue(v, reserve).mean())
    return MyersonResult(reserve, no_res, with_res)


def _virtual_value_root() -> float:
    # phi(z) = z - (1 - F(z))/f(z) = 2z - 1 for F(z) = z on [0, 1]
    return 0.5
