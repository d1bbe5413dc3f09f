"""Seeded marketplace simulator and the controller loop that drives one or
more campaigns through a day of second-price auctions."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .allocation import allocate_targets, interval_target
from .auctions import settle_spa, settle_spa_multi
from .core import (AuctionOpportunity, CampaignConfig, CostCap, GuaranteedDelivery,
                   IntervalTotals, MaxDelivery, PacingClock, SpendLedger, StepSizeSchedule,
                   TargetCPA, make_rng)
from .dogd import (DualState, cost_cap_bid, dogd_costcap_batch, dogd_costcap_step,
                   dogd_md_batch, dogd_md_step)
from .brand import GdState, gd_step
from .evenpacing import IntraPeriodState, even_dogd_step, even_mpc_budget
from .mpc import curve_from_pairs
from .pid import DualPidState, PidChannel, PidGains, dual_pid_step, pid_md_step
from .throttle import ThrottleState, throttle_decide, throttle_update

# Relative request volume per hour, low overnight with an evening peak.
DIURNAL_SUPPLY = (
    0.35, 0.25, 0.20, 0.18, 0.20, 0.30, 0.50, 0.75, 0.95, 1.00, 1.00, 1.05,
    1.10, 1.05, 1.00, 1.00, 1.05, 1.15, 1.30, 1.45, 1.50, 1.35, 1.00, 0.60,
)

TRACE_HEADER = ("interval", "requests", "spend", "target_spend", "bid_per_click",
                "lambda", "mu", "impressions", "conversions")


@dataclass(frozen=True)
class MarketSpec:
    """i.i.d. lognormal pCTR and competing eCPM per impression, with request
    counts per bucket drawn as Poisson around ``auctions`` x NR share.
    Poisson counts keep randomly routed sub-streams independent."""

    pctr_mu: float = math.log(0.02)
    pctr_sigma: float = 0.5
    ecpm_mu: float = math.log(0.02)
    ecpm_sigma: float = 0.6
    supply: tuple = DIURNAL_SUPPLY
    auctions: int = 100_000
    day: float = 86400.0
    slots: Optional[tuple] = None
    seed: int = 0

    def __post_init__(self):
        if self.pctr_sigma < 0 or self.ecpm_sigma < 0:
            raise ValueError("log-scale deviations must be non-negative")
        if self.auctions < 0:
            raise ValueError("auction count must be non-negative")
        if not self.day > 0:
            raise ValueError("day length must be positive")
        sup = tuple(float(v) for v in self.supply)
        if not sup or min(sup) < 0 or not sum(sup) > 0:
            raise ValueError("supply pattern needs non-negative weights with a positive sum")
        object.__setattr__(self, "supply", sup)
        if self.slots is not None:
            object.__setattr__(self, "slots", tuple(float(a) for a in self.slots))

    @property
    def supply_share(self) -> np.ndarray:
        w = np.asarray(self.supply)
        return w / w.sum()


@dataclass
class MarketStream:
    times: np.ndarray
    pctr: np.ndarray
    competing: np.ndarray
    bucket_counts: np.ndarray
    ladder: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.times)

    def opportunities(self) -> Iterator[AuctionOpportunity]:
        for t in range(len(self.times)):
            lad = tuple(self.ladder[t]) if self.ladder is not None else None
            yield AuctionOpportunity(t, float(self.times[t]), float(self.pctr[t]),
                                     float(self.competing[t]), ecpm_ladder=lad)

    def subset(self, mask) -> "MarketStream":
        mask = np.asarray(mask, dtype=bool)
        return MarketStream(self.times[mask], self.pctr[mask], self.competing[mask],
                            self.bucket_counts.copy(), None if self.ladder is None else self.ladder[mask])


def generate_stream(spec: MarketSpec, auctions: Optional[int] = None, seed=None) -> MarketStream:
    """Draw one day of auctions. Fully determined by ``seed`` (default:
    the market's seed)."""
    rng = make_rng(spec.seed if seed is None else seed)
    n = spec.auctions if auctions is None else auctions
    share = spec.supply_share
    counts = rng.poisson(n * share)
    width = spec.day / len(share)
    total = int(counts.sum())
    offsets = np.repeat(np.arange(len(share)) * width, counts)
    times = offsets + np.concatenate(
        [np.sort(rng.uniform(0.0, width, c)) for c in counts]) if total else np.zeros(0)
    pctr = np.minimum(1.0, rng.lognormal(spec.pctr_mu, spec.pctr_sigma, total))
    ladder = None
    if spec.slots:
        k = len(spec.slots)
        ladder = -np.sort(-rng.lognormal(spec.ecpm_mu, spec.ecpm_sigma, (total, k)), axis=1)
        competing = ladder[:, 0].copy()
    else:
        competing = rng.lognormal(spec.ecpm_mu, spec.ecpm_sigma, total)
    return MarketStream(times, pctr, competing, counts, ladder)


# ---------------------------------------------------------------------------
# Controllers
# ---------------------------------------------------------------------------

class Controller:
    """Per-campaign bidding policy. ``bid`` returns the bid per impression
    (None to sit the auction out), ``on_auction`` sees every auction the
    campaign bid in, ``on_interval`` the closed interval's totals."""

    name = "base"
    objectives: tuple = (MaxDelivery,)
    per_auction = False

    def __init__(self, campaign: CampaignConfig, params: dict, rng=None):
        self.campaign = campaign
        self.params = params
        self.rng = rng

    @property
    def B(self) -> float:
        return self.campaign.budget_B

    @property
    def T(self) -> float:
        return float(self.campaign.horizon_T)

    def bid(self, r: float, time: float) -> Optional[float]:
        raise NotImplementedError

    def on_auction(self, r, c, time, won, cost):
        pass

    def on_interval(self, k: int, totals: IntervalTotals, target: float, ledger: SpendLedger):
        pass

    def snapshot(self):
        """(bid per click, lambda, mu)."""
        return math.nan, math.nan, math.nan


def _schedule(params) -> StepSizeSchedule:
    eps0 = float(params.get("eps0", 0.01))
    if params.get("schedule", "constant") == "harmonic":
        return StepSizeSchedule.harmonic(eps0)
    return StepSizeSchedule.constant(eps0)


def _dual(params) -> DualState:
    return DualState(lam=float(params.get("lam0", 1.0)), mu=float(params.get("mu0", 0.0)),
                     schedule=_schedule(params), normalize=bool(params.get("normalize", False)))


def _cap(campaign) -> float:
    return campaign.objective.cap_C


class FixedBid(Controller):
    name = "fixed"
    objectives = (MaxDelivery, CostCap, TargetCPA)

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.b = float(params.get("bid0", 1.0))

    def bid(self, r, time):
        return self.b * r

    def snapshot(self):
        return self.b, math.nan, math.nan


class Throttled(FixedBid):
    name = "throttle"
    objectives = (MaxDelivery,)

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.state = ThrottleState(float(params.get("p0", 1.0)), float(params.get("rate", 0.1)))
        self.rng = rng if rng is not None else make_rng(0)
        self.target_so_far = 0.0

    def bid(self, r, time):
        if throttle_decide(self.state, self.rng.random()):
            return self.b * r
        return None

    def on_interval(self, k, totals, target, ledger):
        # compares spend so far with target spend so far
        self.target_so_far += target
        throttle_update(self.state, ledger.spend, self.target_so_far)

    def snapshot(self):
        return self.b, self.state.p, math.nan


def _gains(params, prefix="") -> PidGains:
    return PidGains(float(params.get(prefix + "kp", 0.0)), float(params.get(prefix + "ki", 0.0)),
                    float(params.get(prefix + "kd", 0.0)), float(params.get(prefix + "u_max", 0.5)))


class Pid(FixedBid):
    name = "pid"
    objectives = (MaxDelivery,)

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.gains = _gains(params)
        self.channel = PidChannel()

    def on_interval(self, k, totals, target, ledger):
        if target > 0:
            self.b = pid_md_step(self.gains, self.channel, totals.spend, target, self.b).bid


class DualPid(Controller):
    name = "dual-pid"
    objectives = (CostCap,)

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.C = _cap(campaign)
        self.state = DualPidState(float(params.get("lam0", 1.0)), float(params.get("mu0", 1.0)),
                                  _gains(params, "lam_"), _gains(params, "mu_"))

    def bid(self, r, time):
        return self.state.bid_per_click(self.C) * r

    def on_interval(self, k, totals, target, ledger):
        dual_pid_step(self.state, totals.spend, totals.conversions, target, self.C, 1.0)

    def snapshot(self):
        return self.state.bid_per_click(self.C), self.state.lam, self.state.mu


class Dogd(Controller):
    name = "dogd"
    per_auction = True

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.state = _dual(params)

    def bid(self, r, time):
        return r / self.state.lam

    def on_auction(self, r, c, time, won, cost):
        dogd_md_step(self.state, r, c, self.B, self.T)

    def snapshot(self):
        return 1.0 / self.state.lam, self.state.lam, self.state.mu


class DogdBatch(Dogd):
    name = "dogd-batch"
    per_auction = False

    def on_auction(self, r, c, time, won, cost):
        pass

    def on_interval(self, k, totals, target, ledger):
        dogd_md_batch(self.state, totals.requests, totals.spend, self.B, self.T)


class DogdCostCap(Dogd):
    name = "dogd-costcap"
    objectives = (CostCap,)

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.C = _cap(campaign)

    def bid(self, r, time):
        return cost_cap_bid(self.state.lam, self.state.mu, self.C, r)

    def on_auction(self, r, c, time, won, cost):
        dogd_costcap_step(self.state, r, c, self.B, self.T, self.C)

    def snapshot(self):
        s = self.state
        return cost_cap_bid(s.lam, s.mu, self.C, 1.0), s.lam, s.mu


class DogdCostCapBatch(DogdCostCap):
    name = "dogd-costcap-batch"
    per_auction = False

    def on_auction(self, r, c, time, won, cost):
        pass

    def on_interval(self, k, totals, target, ledger):
        dogd_costcap_batch(self.state, totals.requests, totals.spend, totals.conversions,
                           self.B, self.T, self.C)


def _periods(params, day: float) -> list:
    n = int(params.get("periods", 4))
    if n < 1:
        raise ValueError("need at least one period")
    return [day * i / n for i in range(n)]


class EvenDogd(Controller):
    name = "even-dogd"
    per_auction = True

    def __init__(self, campaign, params, rng=None, day=86400.0):
        super().__init__(campaign, params, rng)
        self.state = IntraPeriodState(_periods(params, day), day, float(params.get("sigma", 1.0)),
                                      dual=_dual(params))

    def bid(self, r, time):
        return self.state.bid(self.state.period_of(time), r)

    def on_auction(self, r, c, time, won, cost):
        even_dogd_step(self.state, time, r, c, self.B, self.T)

    def snapshot(self):
        return 1.0 / self.state.lam, self.state.lam, max(self.state.period_duals)


class EvenMpc(Controller):
    """Receding-horizon pacing with period caps. Each interval gets the
    effective budget; bidding stops for the rest of the interval once it is
    spent. The bid per click comes from a monotone fit of past bids against
    spend per request."""

    name = "even-mpc"

    def __init__(self, campaign, params, rng=None, day=86400.0, expected=None):
        super().__init__(campaign, params, rng)
        self.starts = _periods(params, day)
        self.day = day
        self.sigma = float(params.get("sigma", 1.0))
        if not 0 < self.sigma <= 1:
            raise ValueError("cap fraction must lie in (0, 1]")
        self.b = float(params.get("bid0", 1.0))
        self.b_l = float(params.get("b_l", 1e-3))
        self.b_u = float(params.get("b_u", 1e3))
        self.window = int(params.get("window", 24))
        self.expected = expected  # expected requests per interval
        self.history: list = []
        self.k = 0
        self.budget_h = math.inf
        self.spent_h = 0.0
        self.bid_count = 0
        self.period_spend = [0.0] * len(self.starts)

    def period_of(self, time: float) -> int:
        return bisect.bisect_right(self.starts, time) - 1

    def start_interval(self, k: int, time: float, ledger: SpendLedger):
        self.k = k
        period = self.period_of(time)
        remaining = float(self.expected[k:].sum())
        weight = float(self.expected[k]) / remaining if remaining > 0 else 1.0
        self.budget_h = even_mpc_budget(max(0.0, self.B - ledger.spend), weight,
                                        self.sigma * self.B, self.period_spend[period])
        self.spent_h = 0.0
        self.bid_count = 0
        target = self.budget_h / self.expected[k] if self.expected[k] > 0 else 0.0
        self.b = self._choose(target)

    def _choose(self, target_per_request: float) -> float:
        pts = self.history[-self.window:]
        bids = [p[0] for p in pts]
        if len(set(bids)) >= 2:
            curve = curve_from_pairs(bids, [p[1] for p in pts], "pava")
            if curve.y[-1] > curve.y[0]:
                b = curve.invert(target_per_request)
                # explore no further than a factor two from the last bid
                b = min(max(b, 0.5 * self.b), 2.0 * self.b)
                return min(max(b, self.b_l), self.b_u)
        if pts and pts[-1][1] > 0:
            ratio = target_per_request / pts[-1][1]
            return min(max(self.b * min(max(ratio, 0.5), 2.0), self.b_l), self.b_u)
        return self.b

    def bid(self, r, time):
        if self.spent_h >= self.budget_h:
            return None
        self.bid_count += 1
        return self.b * r

    def on_auction(self, r, c, time, won, cost):
        if won:
            self.spent_h += cost
            self.period_spend[self.period_of(time)] += cost

    def on_interval(self, k, totals, target, ledger):
        # spend per request while the campaign was still bidding
        if self.bid_count > 0:
            self.history.append((self.b, self.spent_h / self.bid_count))

    def snapshot(self):
        return self.b, math.nan, math.nan


class GuaranteedDeliveryBid(Controller):
    name = "gd"
    objectives = (GuaranteedDelivery,)
    per_auction = True

    def __init__(self, campaign, params, rng=None):
        super().__init__(campaign, params, rng)
        self.state = GdState(campaign.objective.goal_G, campaign.horizon_T, float(params.get("lam0", 0.0)))
        self.schedule = _schedule(params)
        self.t = 0

    def bid(self, r, time):
        return self.state.lam

    def on_auction(self, r, c, time, won, cost):
        self.t += 1
        gd_step(self.state, c, self.schedule.value(self.t))

    def snapshot(self):
        return self.state.lam, self.state.lam, math.nan


CONTROLLERS = {c.name: c for c in (FixedBid, Throttled, Pid, DualPid, Dogd, DogdBatch,
                                   DogdCostCap, DogdCostCapBatch, EvenDogd, EvenMpc,
                                   GuaranteedDeliveryBid)}


class IncompatibleController(ValueError):
    pass


def make_controller(name: str, campaign: CampaignConfig, params: Optional[dict] = None,
                    rng=None, clock: Optional[PacingClock] = None,
                    expected_requests=None) -> Controller:
    params = dict(params or {})
    try:
        cls = CONTROLLERS[name]
    except KeyError:
        raise ValueError(f"unknown controller {name!r}; choose from {sorted(CONTROLLERS)}") from None
    if not isinstance(campaign.objective, cls.objectives):
        raise IncompatibleController(
            f"controller {name!r} cannot run a {type(campaign.objective).__name__} campaign")
    day = clock.end_of_day if clock is not None else 86400.0
    if cls is EvenDogd:
        return cls(campaign, params, rng, day=day)
    if cls is EvenMpc:
        if expected_requests is None:
            raise ValueError("receding-horizon pacing needs the expected requests per interval")
        return cls(campaign, params, rng, day=day, expected=np.asarray(expected_requests, float))
    return cls(campaign, params, rng)


# ---------------------------------------------------------------------------
# Run loop
# ---------------------------------------------------------------------------

class TraceRow(NamedTuple):
    interval: int
    requests: int
    spend: float
    target_spend: float
    bid_per_click: float
    lam: float
    mu: float
    impressions: int
    conversions: float


@dataclass
class RunReport:
    campaign: CampaignConfig
    rows: list
    max_cost: float = 0.0
    exhausted_at: Optional[int] = None
    summary: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.summary:
            self.summary = summarize(self.rows, self.campaign.budget_B)


def summarize(rows, budget: float) -> dict:
    spend = sum(r.spend for r in rows)
    conv = sum(r.conversions for r in rows)
    imps = sum(r.impressions for r in rows)
    reqs = sum(r.requests for r in rows)
    return {
        "requests": reqs,
        "spend": spend,
        "budget": budget,
        "utilization": spend / budget if budget > 0 else 0.0,
        "impressions": imps,
        "conversions": conv,
        "cpc": spend / conv if conv > 0 else math.nan,
        "cpm": 1000 * spend / imps if imps > 0 else math.nan,
    }


def expected_requests(spec_or_counts, clock: PacingClock, total: float) -> np.ndarray:
    """Forecast requests per update interval: the supply shape spread
    evenly over each bucket's intervals, scaled to ``total``."""
    share = spec_or_counts.supply_share if isinstance(spec_or_counts, MarketSpec) else \
        np.asarray(spec_or_counts, float) / np.sum(spec_or_counts)
    if len(share) != clock.n_buckets:
        raise ValueError(f"supply has {len(share)} buckets, the clock {clock.n_buckets}")
    return np.repeat(share * total / clock.updates_per_bucket, clock.updates_per_bucket)


def run_market(entries: Sequence, stream: MarketStream, clock: PacingClock,
               supply: Sequence[float], eligible=None) -> list:
    """Run several (campaign, controller) pairs over one stream.

    ``eligible`` is an optional (n_campaigns, n_auctions) boolean mask of
    the auctions each campaign sees. Campaigns that share an auction compete
    for it in one second-price auction against the outside eCPM. A campaign
    stops bidding once its spend has reached its budget; the check runs
    before each settlement, so spend can pass the budget by at most one
    auction's cost.
    """
    n = len(entries)
    T = len(stream)
    if eligible is None:
        eligible = np.ones((n, T), dtype=bool)
    eligible = np.asarray(eligible, dtype=bool)
    if eligible.shape != (n, T):
        raise ValueError("eligibility mask must be (campaigns, auctions)")
    plans = [allocate_targets(c.budget_B, supply) if c.budget_B > 0 else None for c, _ in entries]
    if any(p is not None and len(p.targets) != clock.n_buckets for p in plans):
        raise ValueError("supply pattern does not match the clock's buckets")
    ledgers = [SpendLedger() for _ in range(n)]
    rows = [[] for _ in range(n)]
    max_cost = [0.0] * n
    exhausted = [None] * n
    budgets = [c.budget_B for c, _ in entries]
    ctrls = [ctrl for _, ctrl in entries]
    mpc = [hasattr(ctrl, "start_interval") for ctrl in ctrls]
    interval_of = np.minimum((stream.times // clock.bid_update_interval).astype(int), clock.n_updates - 1)
    bounds = np.searchsorted(interval_of, np.arange(clock.n_updates + 1))
    times, pctr, comp = stream.times.tolist(), stream.pctr.tolist(), stream.competing.tolist()
    elig = [eligible[i].tolist() for i in range(n)]
    for k in range(clock.n_updates):
        lo, hi = int(bounds[k]), int(bounds[k + 1])
        for i in range(n):
            if mpc[i]:
                ctrls[i].start_interval(k, k * clock.bid_update_interval, ledgers[i])
        for t in range(lo, hi):
            r, c, tm = pctr[t], comp[t], times[t]
            bids = {}
            for i in range(n):
                if not elig[i][t]:
                    continue
                ledgers[i].current.requests += 1
                if exhausted[i] is not None:
                    continue
                if ledgers[i].spend >= budgets[i]:
                    exhausted[i] = k
                    continue
                b = ctrls[i].bid(r, tm)
                if b is not None:
                    bids[i] = b
            if not bids:
                continue
            if len(bids) == 1:
                (i, b), = bids.items()
                won, cost = settle_spa(b, c)
                winner = i if won else None
            else:
                ids = list(bids)
                w, cost = settle_spa_multi([bids[i] for i in ids], c)
                winner = None if w is None else ids[w]
            for i in bids:
                won = i == winner
                if won:
                    ledgers[i].record(cost, r, 1)
                    if cost > max_cost[i]:
                        max_cost[i] = cost
                if ctrls[i].per_auction or mpc[i]:
                    ctrls[i].on_auction(r, c, tm, won, cost if won else 0.0)
        for i in range(n):
            led = ledgers[i]
            totals = led.close_interval()
            target = interval_target(plans[i], clock, k) if plans[i] is not None else 0.0
            if exhausted[i] is None:
                ctrls[i].on_interval(k, totals, target, led)
            bpc, lam, mu = ctrls[i].snapshot()
            rows[i].append(TraceRow(k, int(totals.requests), totals.spend, target, bpc, lam, mu,
                                    int(totals.impressions), totals.conversions))
    return [RunReport(entries[i][0], rows[i], max_cost[i], exhausted[i]) for i in range(n)]


def run_campaign(campaign: CampaignConfig, controller: str, market: MarketSpec,
                 clock: Optional[PacingClock] = None, params: Optional[dict] = None,
                 stream: Optional[MarketStream] = None) -> RunReport:
    """Simulate one campaign for one day on the market's seeded stream."""
    clock = clock or PacingClock(900.0, market.day / len(market.supply), market.day)
    stream = stream if stream is not None else generate_stream(market)
    exp = expected_requests(market, clock, campaign.horizon_T)
    ctrl = make_controller(controller, campaign, params, make_rng([market.seed, 1]), clock, exp)
    return run_market([(campaign, ctrl)], stream, clock, market.supply)[0]


def format_float(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def trace_lines(report: RunReport) -> list:
    out = [",".join(TRACE_HEADER)]
    for row in report.rows:
        out.append(",".join([str(row.interval), str(row.requests), format_float(row.spend),
                             format_float(row.target_spend), format_float(row.bid_per_click),
                             format_float(row.lam), format_float(row.mu), str(row.impressions),
                             format_float(row.conversions)]))
    return out
