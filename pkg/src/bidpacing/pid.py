"""PID pacing: max-delivery bid modulation, Cost-Min bid bound, dynamic bid
cap and the dual PID for cost cap campaigns."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

DUAL_FLOOR = 1e-6


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    u_max: float = 0.5

    def __post_init__(self):
        if not self.u_max > 0:
            raise ValueError("saturation bound must be positive")


@dataclass
class PidChannel:
    cumulative_error: float = 0.0
    previous_error: float = 0.0


def pid_control(gains: PidGains, channel: PidChannel, e: float, dt: float = 1.0) -> float:
    """One discrete PID step; mutates ``channel`` and returns the saturated
    control signal."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    ce = channel.cumulative_error + e * dt
    if gains.ki != 0:
        # anti-windup: integral term limited to 10x the output bound
        lim = 10 * gains.u_max / abs(gains.ki)
        ce = max(-lim, min(lim, ce))
    u = gains.kp * e + gains.ki * ce + gains.kd * (e - channel.previous_error) / dt
    channel.cumulative_error = ce
    channel.previous_error = e
    return max(-gains.u_max, min(gains.u_max, u))


class PidStep(NamedTuple):
    bid: float
    error: float
    control: float


def pid_md_step(gains: PidGains, channel: PidChannel, spend: float, target: float,
                bid_per_click: float, dt: float = 1.0) -> PidStep:
    """Max-delivery update. The error is normalized, 1 - spend/target, so one
    set of gains works across budget scales; the bid moves by exp(u)."""
    if not target > 0:
        raise ValueError("target spend must be positive")
    e = 1.0 - spend / target
    u = pid_control(gains, channel, e, dt)
    return PidStep(bid_per_click * math.exp(u), e, u)


def cost_min_bound(B: float, C: float, ledger, sigma: float = 1.0) -> float:
    """Largest bid per conversion that keeps the remaining average cost on
    the cap. ``sigma`` is the observed second-to-first price ratio; a ratio
    below one relaxes the bound. Returns inf once the conversion goal is met.
    """
    if not C > 0:
        raise ValueError("cap must be positive")
    if not 0 < sigma <= 1:
        raise ValueError("price ratio must lie in (0, 1]")
    remaining = B / C - ledger.conversions
    if remaining <= 0:
        return math.inf
    return (B - ledger.spend) / (remaining * sigma)


def dynamic_cap_update(cap: float, cpa: float, C: float, eps: float) -> float:
    if not eps > 0:
        raise ValueError("gain must be positive")
    return max(0.0, cap - eps * (cpa - C))


def cost_cap_bid_per_click(lam: float, mu: float, C: float) -> float:
    return (1.0 + mu * C) / (lam + mu)


@dataclass
class DualPidState:
    lam: float
    mu: float
    gains_lam: PidGains
    gains_mu: PidGains
    channel_lam: PidChannel = field(default_factory=PidChannel)
    channel_mu: PidChannel = field(default_factory=PidChannel)

    def bid_per_click(self, C: float) -> float:
        return cost_cap_bid_per_click(self.lam, self.mu, C)


def dual_pid_step(state: DualPidState, spend: float, clicks: float, target: float,
                  C: float, pctr: float, dt: float = 1.0):
    """Multiplicative PID updates of the budget dual (error spend - target)
    and the cost dual (error C - spend/clicks). With no clicks in the
    interval the cost channel is left untouched.

    Returns (lam, mu, bid per impression).
    """
    u_lam = pid_control(state.gains_lam, state.channel_lam, spend - target, dt)
    state.lam = max(DUAL_FLOOR, state.lam * math.exp(u_lam))
    if clicks > 0:
        u_mu = pid_control(state.gains_mu, state.channel_mu, C - spend / clicks, dt)
        state.mu = max(DUAL_FLOOR, state.mu * math.exp(u_mu))
    return state.lam, state.mu, state.bid_per_click(C) * pctr
