"""Shared domain types: campaign configuration, auction requests, spend
accounting, step-size schedules and the pacing clock."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MaxDelivery:
    pass


@dataclass(frozen=True)
class CostCap:
    cap_C: float

    def __post_init__(self):
        if not self.cap_C > 0:
            raise ValueError(f"cost cap must be positive, got {self.cap_C}")


@dataclass(frozen=True)
class TargetCPA:
    cap_C: float
    tolerance_delta: float = 0.1

    def __post_init__(self):
        if not self.cap_C > 0:
            raise ValueError(f"target CPA must be positive, got {self.cap_C}")
        if not 0 <= self.tolerance_delta <= 1:
            raise ValueError("tolerance must be a fraction in [0, 1]")


@dataclass(frozen=True)
class ReachFrequency:
    F_l: float
    F_u: float

    def __post_init__(self):
        if not 0 <= self.F_l <= self.F_u:
            raise ValueError(f"need 0 <= F_l <= F_u, got {self.F_l}, {self.F_u}")


@dataclass(frozen=True)
class GuaranteedDelivery:
    goal_G: float

    def __post_init__(self):
        if self.goal_G < 0:
            raise ValueError("impression goal must be non-negative")


@dataclass(frozen=True)
class DeepRetention:
    cap_C: float
    deep_cap_D: float

    def __post_init__(self):
        if not (self.cap_C > 0 and self.deep_cap_D > 0):
            raise ValueError("both caps must be positive")


Objective = Union[MaxDelivery, CostCap, TargetCPA, ReachFrequency,
                  GuaranteedDelivery, DeepRetention]


class Charging(enum.Enum):
    OCPM = "oCPM"
    PER_RESULT = "perResult"


@dataclass(frozen=True)
class CampaignConfig:
    """Budget, horizon and objective of one campaign.

    horizon_T is the forecast number of auction opportunities over the
    campaign lifetime.
    """

    id: str
    budget_B: float
    horizon_T: int
    objective: Objective = field(default_factory=MaxDelivery)
    charging: Charging = Charging.OCPM
    markup_m: float = 0.0

    def __post_init__(self):
        if not self.budget_B >= 0:
            raise ValueError(f"budget must be >= 0, got {self.budget_B}")
        if self.horizon_T < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon_T}")
        if self.markup_m < 0:
            raise ValueError("markup must be >= 0")
        if isinstance(self.objective, GuaranteedDelivery) and self.objective.goal_G > self.horizon_T:
            raise ValueError("impression goal exceeds the available inventory")

    @property
    def spend_rate(self) -> float:
        """Target spend per auction opportunity, B/T."""
        return self.budget_B / self.horizon_T


# ---------------------------------------------------------------------------
# Auction opportunity
# ---------------------------------------------------------------------------

@dataclass
class AuctionOpportunity:
    index_t: int
    time: float
    pctr_r: float
    competing_ecpm_c: float = 0.0
    deep_rate_d: Optional[float] = None
    ecpm_ladder: Optional[tuple] = None
    channel: int = 1
    user: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.pctr_r <= 1.0:
            raise ValueError(f"pctr must lie in [0, 1], got {self.pctr_r}")
        if self.deep_rate_d is not None and not 0.0 <= self.deep_rate_d <= 1.0:
            raise ValueError(f"deep rate must lie in [0, 1], got {self.deep_rate_d}")
        if self.competing_ecpm_c < 0:
            raise ValueError("competing eCPM must be >= 0")
        if self.ecpm_ladder is not None:
            ladder = tuple(float(v) for v in self.ecpm_ladder)
            if any(a < b for a, b in zip(ladder, ladder[1:])):
                raise ValueError("eCPM ladder must be sorted non-increasing")
            self.ecpm_ladder = ladder


# ---------------------------------------------------------------------------
# Spend ledger
# ---------------------------------------------------------------------------

@dataclass
class IntervalTotals:
    requests: float = 0.0
    spend: float = 0.0
    conversions: float = 0.0
    impressions: float = 0.0


class SpendLedger:
    """Cumulative and per-interval delivery totals for one campaign.

    Interval totals are appended to ``intervals`` by ``close_interval``.
    Cumulative totals are the in-order sum of closed intervals plus the open
    one, so summing the closed intervals reproduces them exactly.
    """

    _FIELDS = ("spend", "conversions", "impressions", "requests")

    def __init__(self):
        self.closed = IntervalTotals()
        self.current = IntervalTotals()
        self.intervals: list[IntervalTotals] = []

    @property
    def spend(self) -> float:
        return self.closed.spend + self.current.spend

    @property
    def conversions(self) -> float:
        return self.closed.conversions + self.current.conversions

    @property
    def impressions(self) -> float:
        return self.closed.impressions + self.current.impressions

    @property
    def requests(self) -> float:
        return self.closed.requests + self.current.requests

    def record(self, spend=0.0, conversions=0.0, impressions=0.0, requests=0.0):
        if min(spend, conversions, impressions, requests) < 0:
            raise ValueError("ledger deltas must be non-negative")
        cur = self.current
        cur.spend += spend
        cur.conversions += conversions
        cur.impressions += impressions
        cur.requests += requests
        return self

    def close_interval(self) -> IntervalTotals:
        closed = self.current
        for name in self._FIELDS:
            setattr(self.closed, name, getattr(self.closed, name) + getattr(closed, name))
        self.intervals.append(closed)
        self.current = IntervalTotals()
        return closed

    def remaining(self, budget: float) -> float:
        return budget - self.spend


def ledger_record(ledger: SpendLedger, spend, conversions, impressions, requests) -> SpendLedger:
    return ledger.record(spend, conversions, impressions, requests)


# ---------------------------------------------------------------------------
# Step sizes
# ---------------------------------------------------------------------------

class ScheduleKind(enum.Enum):
    CONSTANT = "constant"
    HARMONIC = "harmonic"


@dataclass(frozen=True)
class StepSizeSchedule:
    kind: ScheduleKind
    eps0: float

    def __post_init__(self):
        if not self.eps0 > 0:
            raise ValueError("step size must be strictly positive")

    @classmethod
    def constant(cls, eps0: float) -> "StepSizeSchedule":
        return cls(ScheduleKind.CONSTANT, eps0)

    @classmethod
    def harmonic(cls, eps0: float) -> "StepSizeSchedule":
        return cls(ScheduleKind.HARMONIC, eps0)

    def value(self, t: int) -> float:
        if t < 1:
            raise ValueError("step index starts at 1")
        if self.kind is ScheduleKind.CONSTANT:
            return self.eps0
        return self.eps0 / t


def schedule_value(schedule: StepSizeSchedule, t: int) -> float:
    return schedule.value(t)


# ---------------------------------------------------------------------------
# Clock
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PacingClock:
    """Bid updates every ``bid_update_interval`` seconds, target spend
    buckets every ``target_bucket_interval`` seconds."""

    bid_update_interval: float
    target_bucket_interval: float
    end_of_day: float = 86400.0

    def __post_init__(self):
        dt, dtau, day = self.bid_update_interval, self.target_bucket_interval, self.end_of_day
        if not (dt > 0 and dtau > 0 and day > 0):
            raise ValueError("clock intervals must be positive")
        if dt > dtau:
            raise ValueError("bid update interval must not exceed the bucket interval")
        if not _divides(dtau, day):
            raise ValueError("bucket interval must divide the day evenly")
        if not _divides(dt, dtau):
            raise ValueError("update interval must divide the bucket interval evenly")

    @property
    def n_buckets(self) -> int:
        return int(round(self.end_of_day / self.target_bucket_interval))

    @property
    def n_updates(self) -> int:
        return int(round(self.end_of_day / self.bid_update_interval))

    @property
    def updates_per_bucket(self) -> int:
        return int(round(self.target_bucket_interval / self.bid_update_interval))

    def bucket_of_update(self, k: int) -> int:
        """Bucket index (0-based) containing update interval k (0-based)."""
        if not 0 <= k < self.n_updates:
            raise IndexError(f"update interval {k} outside the day")
        return k // self.updates_per_bucket

    def update_of_time(self, t: float) -> int:
        return min(int(t // self.bid_update_interval), self.n_updates - 1)


def _divides(step: float, total: float) -> bool:
    ratio = total / step
    return math.isclose(ratio, round(ratio), rel_tol=0, abs_tol=1e-9)


def make_rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)
