"""Target spend per bucket, proportional to forecast supply."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import PacingClock


@dataclass(frozen=True)
class SupplyForecast:
    requests: np.ndarray  # NR(t) per bucket

    def __init__(self, requests):
        nr = np.asarray(requests, dtype=float)
        if nr.ndim != 1 or nr.size == 0:
            raise ValueError("forecast must be a non-empty vector")
        if np.any(nr < 0):
            raise ValueError("forecast requests must be non-negative")
        if not nr.sum() > 0:
            raise ValueError("forecast has no supply")
        object.__setattr__(self, "requests", nr)


@dataclass(frozen=True)
class TargetSpendPlan:
    targets: np.ndarray  # TS(t) per bucket

    @property
    def total(self) -> float:
        return float(self.targets.sum())


def allocate_targets(budget: float, forecast) -> TargetSpendPlan:
    if not isinstance(forecast, SupplyForecast):
        forecast = SupplyForecast(forecast)
    nr = forecast.requests
    return TargetSpendPlan(nr / nr.sum() * budget)


def interval_target(plan: TargetSpendPlan, clock: PacingClock, k: int) -> float:
    """Target spend of update interval k (0-based): the bucket target spread
    linearly over its update intervals."""
    if len(plan.targets) != clock.n_buckets:
        raise ValueError("plan length does not match the clock's bucket count")
    bucket = clock.bucket_of_update(k)
    return clock.bid_update_interval / clock.target_bucket_interval * float(plan.targets[bucket])
