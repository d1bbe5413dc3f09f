"""Probabilistic throttling: fixed bid, adaptive participation rate."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass
class ThrottleState:
    p: float = 1.0
    rate: float = 0.10

    def __post_init__(self):
        if not 0 < self.rate < 1:
            raise ValueError("adjustment rate must lie in (0, 1)")
        self.p = min(1.0, max(0.0, self.p))


def throttle_update(state: ThrottleState, spent: float, target: float) -> ThrottleState:
    """Raise participation when spend is at or below target, cut it otherwise."""
    if spent <= target:
        state.p = min(1.0, state.p * (1 + state.rate))
    else:
        state.p = max(0.0, state.p * (1 - state.rate))
    return state


def throttle_decide(state: ThrottleState, u: float) -> bool:
    return u <= state.p


def safeguard_probability(spent: float, limit: float, trigger: float = 0.8) -> float:
    """Throttle probability for a period spend limit: zero until ``trigger``
    times the limit, then a linear ramp reaching one at the limit."""
    if not limit > 0:
        raise ValueError("limit must be positive")
    if not 0 <= trigger < 1:
        raise ValueError("trigger fraction must lie in [0, 1)")
    start = trigger * limit
    if spent <= start:
        return 0.0
    if spent >= limit:
        return 1.0
    return (spent - start) / (limit - start)
