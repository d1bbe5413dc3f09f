"""Two-sample t statistics and the campaign-split and budget-split A/B
harnesses built on the simulator."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats

from .core import CampaignConfig, PacingClock, make_rng
from .sim import (MarketSpec, expected_requests, generate_stream, make_controller,
                  run_market)

METRICS = ("spend", "utilization", "conversions", "impressions", "cpc")


class SampleSummary(NamedTuple):
    n: int
    mean: float
    sd: float

    @classmethod
    def of(cls, values) -> "SampleSummary":
        x = np.asarray(values, dtype=float)
        if x.size < 2:
            raise ValueError("need at least two observations")
        return cls(int(x.size), float(x.mean()), float(x.std(ddof=1)))


def pooled_t(a: SampleSummary, b: SampleSummary):
    """Pooled-variance t statistic of mean(a) - mean(b) and its degrees of
    freedom."""
    if a.n + b.n <= 2 or min(a.n, b.n) < 1:
        raise ValueError("need more than two observations in total")
    if a.sd < 0 or b.sd < 0:
        raise ValueError("standard deviations must be non-negative")
    dof = a.n + b.n - 2
    sp2 = ((a.n - 1) * a.sd ** 2 + (b.n - 1) * b.sd ** 2) / dof
    if not sp2 > 0:
        raise ValueError("pooled variance is zero")
    t = (a.mean - b.mean) / (math.sqrt(sp2) * math.sqrt(1.0 / a.n + 1.0 / b.n))
    return t, dof


def p_value(t: float, dof: float) -> float:
    return float(2.0 * stats.t.sf(abs(t), dof))


def critical_value(dof: float, alpha: float) -> float:
    return float(stats.t.isf(alpha / 2.0, dof))


def decide(t: float, dof: float, alpha: float = 0.05) -> bool:
    """True when the two-sided test rejects equal means at level alpha."""
    if dof < 1:
        raise ValueError("need at least one degree of freedom")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0:
        return False
    return abs(t) > critical_value(dof, alpha)


# ---------------------------------------------------------------------------
# Harnesses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Strategy:
    """A controller with its parameters. ``multiplier`` scales every bid."""

    controller: str = "fixed"
    params: dict = field(default_factory=dict)
    multiplier: float = 1.0


class _Scaled:
    def __init__(self, inner, factor):
        self.inner = inner
        self.factor = factor

    def bid(self, r, time):
        b = self.inner.bid(r, time)
        return None if b is None else b * self.factor

    def __getattr__(self, name):
        return getattr(self.inner, name)


@dataclass
class ArmSamples:
    values: dict  # arm -> list of metric values, one per replica
    metric: str

    def summaries(self):
        return SampleSummary.of(self.values["A"]), SampleSummary.of(self.values["B"])

    def t_test(self):
        return pooled_t(*self.summaries())

    def rows(self):
        for arm in sorted(self.values):
            for i, v in enumerate(self.values[arm]):
                yield arm, i, self.metric, v


def _controller(strategy: Strategy, campaign, rng, clock, exp):
    ctrl = make_controller(strategy.controller, campaign, strategy.params, rng, clock, exp)
    return _Scaled(ctrl, strategy.multiplier) if strategy.multiplier != 1.0 else ctrl


def _metric(report, metric):
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    return float(report.summary[metric])


def _check(replicas, market, clock):
    if replicas < 2:
        raise ValueError("need at least two replicas")
    clock = clock or PacingClock(900.0, market.day / len(market.supply), market.day)
    return clock


def budget_split_run(market: MarketSpec, campaign: CampaignConfig, strategy_a: Strategy,
                     strategy_b: Strategy, replicas: int, seed: int, metric: str = "spend",
                     clock: Optional[PacingClock] = None) -> ArmSamples:
    """Each replica draws a fresh day, routes every request to exactly one
    of two sub-campaigns at random, and gives each half the budget and half
    the expected requests."""
    clock = _check(replicas, market, clock)
    half = replace(campaign, budget_B=campaign.budget_B / 2, horizon_T=max(1, campaign.horizon_T // 2))
    exp = expected_requests(market, clock, half.horizon_T)
    values = {"A": [], "B": []}
    for rep in range(replicas):
        seeds = np.random.SeedSequence([seed, rep]).spawn(4)
        stream = generate_stream(market, seed=seeds[0])
        route = make_rng(seeds[1]).random(len(stream)) < 0.5
        ctrl_a = _controller(strategy_a, replace(half, id=campaign.id + "-A"), make_rng(seeds[2]), clock, exp)
        ctrl_b = _controller(strategy_b, replace(half, id=campaign.id + "-B"), make_rng(seeds[3]), clock, exp)
        reports = run_market([(half, ctrl_a), (half, ctrl_b)], stream, clock, market.supply,
                             eligible=np.vstack([route, ~route]))
        values["A"].append(_metric(reports[0], metric))
        values["B"].append(_metric(reports[1], metric))
    return ArmSamples(values, metric)


def campaign_split_run(market: MarketSpec, campaign: CampaignConfig, strategy_a: Strategy,
                       strategy_b: Strategy, replicas: int, seed: int, metric: str = "utilization",
                       clock: Optional[PacingClock] = None) -> ArmSamples:
    """Two sub-campaigns with half the budget each bid in every auction of
    the same day, so they compete with each other."""
    clock = _check(replicas, market, clock)
    half = replace(campaign, budget_B=campaign.budget_B / 2)
    exp = expected_requests(market, clock, half.horizon_T)
    values = {"A": [], "B": []}
    for rep in range(replicas):
        seeds = np.random.SeedSequence([seed, rep]).spawn(3)
        stream = generate_stream(market, seed=seeds[0])
        ctrl_a = _controller(strategy_a, half, make_rng(seeds[1]), clock, exp)
        ctrl_b = _controller(strategy_b, half, make_rng(seeds[2]), clock, exp)
        reports = run_market([(half, ctrl_a), (half, ctrl_b)], stream, clock, market.supply)
        values["A"].append(_metric(reports[0], metric))
        values["B"].append(_metric(reports[1], metric))
    return ArmSamples(values, metric)


RESULTS_HEADER = ("arm", "replica", "metric", "value")


def write_results(path, samples: ArmSamples):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for arm, i, metric, v in samples.rows():
            w.writerow([arm, i, metric, repr(float(v))])


def read_results(path, metric: Optional[str] = None) -> dict:
    """Metric values per arm from a results CSV."""
    out: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames[:4]) != RESULTS_HEADER:
            raise ValueError(f"{path}: expected header {','.join(RESULTS_HEADER)}")
        for row in reader:
            if metric is not None and row["metric"] != metric:
                continue
            out.setdefault(row["arm"], []).append(float(row["value"]))
    return out
