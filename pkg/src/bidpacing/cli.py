"""Command-line entry point: simulate, replay, init-bid, shade, experiment."""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .csvio import read_auction_log, read_gsp_log, write_trace
from .dogd import lambda_star, replay_spend
from .experiments import (Strategy, budget_split_run, campaign_split_run, decide, p_value,
                          pooled_t, read_results, SampleSummary, write_results)
from .initbid import (InfeasibleBudget, LognormalParams, auction_replay_bid, init_bid_costcap,
                      init_bid_parametric)
from .shading import WinProbModel, solve_margin_bid, solve_utility_bid, solve_welfare_bid
from .sim import IncompatibleController, run_campaign, trace_lines
from .deepfunnel import replay_gsp
from .mpc import bid_grid

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(x) -> str:
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def _print_summary(summary: dict, out=None):
    out = out or sys.stdout
    for k, v in summary.items():
        print(f"{k}={_fmt(v)}", file=out)


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.seed)
    report = run_campaign(cfg.campaign, cfg.controller, cfg.market, cfg.clock, cfg.params)
    if args.out:
        write_trace(args.out, report)
    else:
        print("\n".join(trace_lines(report)))
    _print_summary(report.summary)
    return EXIT_OK


def cmd_replay(args) -> int:
    if args.gsp:
        log = read_gsp_log(args.gsp)
        slots = [float(v) for v in args.slots.split(",")]
        grid = bid_grid(args.b_min, args.b_max, args.step)
        cost, conv = replay_gsp(log, slots, grid)
        print("bid,cost,conversions")
        for b, c, n in zip(grid, cost, conv):
            print(f"{_fmt(float(b))},{_fmt(float(c))},{_fmt(float(n))}")
        return EXIT_OK
    if not args.log or args.budget is None:
        raise ConfigError("replay needs --gsp, or --log with --budget")
    log = np.asarray(read_auction_log(args.log), dtype=float)
    c, r = log[:, 0], log[:, 1]
    lam = lambda_star(r, c, args.budget)
    won = r > lam * c
    _print_summary({
        "lambda": lam,
        "bid_per_click": 1.0 / lam,
        "spend": replay_spend(r, c, lam),
        "conversions": float(r[won].sum()),
        "impressions": int(won.sum()),
    })
    return EXIT_OK


def cmd_init_bid(args) -> int:
    if args.lognormal:
        try:
            mu, sigma, mu_r, sigma_r = (float(v) for v in args.lognormal.split(","))
        except ValueError:
            raise ConfigError("--lognormal takes mu,sigma,mu_r,sigma_r") from None
        if not args.auctions:
            raise ConfigError("--lognormal needs --auctions")
        bid = init_bid_parametric(LognormalParams(mu, sigma, mu_r, sigma_r), args.budget, args.auctions)
    elif args.log:
        bid = auction_replay_bid(read_auction_log(args.log), args.budget)
    else:
        raise ConfigError("give --log or --lognormal")
    if args.cap is not None:
        bid = init_bid_costcap(bid, args.cap, args.price_ratio)
    print(_fmt(float(bid)))
    return EXIT_OK


def cmd_shade(args) -> int:
    weights = tuple(float(v) for v in args.weights.split(",")) if args.weights else ()
    features = tuple(float(v) for v in args.features.split(",")) if args.features else None
    model = WinProbModel(args.w0, weights, args.beta)
    if args.value is not None:
        bid = solve_utility_bid(model, features, args.value, args.lam or 0.0)
    elif args.lam is None:
        raise ConfigError("shade needs --lam (or --value)")
    elif args.margin is not None:
        bid = solve_margin_bid(model, features, args.lam, args.margin)
    else:
        bid = solve_welfare_bid(model, features, args.lam)
    print(_fmt(float(bid)))
    return EXIT_OK


def _strategies(cfg):
    exp = cfg.experiment
    a = Strategy(cfg.controller, dict(cfg.params))
    if cfg.treatment is not None:
        t = dict(cfg.treatment)
        name = t.pop("name", cfg.controller)
        b = Strategy(name, {**cfg.params, **t}, float(exp.get("multiplier", 1.0)))
    else:
        b = Strategy(cfg.controller, dict(cfg.params), float(exp.get("multiplier", 1.0)))
    return a, b


def cmd_experiment(args) -> int:
    alpha = args.alpha
    if args.config:
        cfg = load_config(args.config)
        exp = cfg.experiment
        design = str(exp.get("design", "budget-split"))
        runner = {"budget-split": budget_split_run, "campaign-split": campaign_split_run}.get(design)
        if runner is None:
            raise ConfigError(f"unknown design {design!r}")
        a, b = _strategies(cfg)
        replicas = int(exp.get("replicas", 10))
        seed = args.seed if args.seed is not None else int(exp.get("seed", 0))
        metric = args.metric or str(exp.get("metric", "spend"))
        if alpha is None:
            alpha = float(exp.get("alpha", 0.05))
        samples = runner(cfg.market, cfg.campaign, a, b, replicas, seed, metric, cfg.clock)
        if args.out:
            write_results(args.out, samples)
        va, vb = samples.values["A"], samples.values["B"]
    elif args.control and args.treatment:
        va = [v for vals in read_results(args.control, args.metric).values() for v in vals]
        vb = [v for vals in read_results(args.treatment, args.metric).values() for v in vals]
    else:
        raise ConfigError("experiment needs --config or both --control and --treatment")
    alpha = 0.05 if alpha is None else alpha
    treated, control = SampleSummary.of(vb), SampleSummary.of(va)
    t, dof = pooled_t(treated, control)
    _print_summary({
        "mean_treatment": treated.mean,
        "mean_control": control.mean,
        "t": t,
        "dof": dof,
        "p_value": p_value(t, dof),
        "reject": decide(t, dof, alpha),
    })
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bidpacing", description="Budget pacing simulator and tools.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one campaign for a day")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="trace CSV path (default: standard output)")
    s.add_argument("--seed", type=int, help="override the market seed")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("replay", help="replay an auction log")
    s.add_argument("--log", help="auction log t,competing_ecpm,pctr")
    s.add_argument("--budget", type=float)
    s.add_argument("--gsp", help="GSP log t,pctr,ecpm_1..ecpm_k; prints bid-cost and bid-conversion curves")
    s.add_argument("--slots", default="1.0", help="comma-separated slot discounts")
    s.add_argument("--b-min", type=float, default=0.1)
    s.add_argument("--b-max", type=float, default=5.0)
    s.add_argument("--step", type=float, default=0.1)
    s.set_defaults(func=cmd_replay)

    s = sub.add_parser("init-bid", help="initial bid per conversion")
    s.add_argument("--log", help="auction log for the replay search")
    s.add_argument("--lognormal", help="mu,sigma,mu_r,sigma_r for the closed form")
    s.add_argument("--auctions", type=int, help="expected auctions (closed form)")
    s.add_argument("--budget", type=float, required=True)
    s.add_argument("--cap", type=float, help="cost cap C")
    s.add_argument("--price-ratio", type=float, default=1.0)
    s.set_defaults(func=cmd_init_bid)

    s = sub.add_parser("shade", help="first-price shaded bid")
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--w0", type=float, default=0.0)
    s.add_argument("--weights")
    s.add_argument("--features")
    s.add_argument("--lam", type=float)
    s.add_argument("--value", type=float)
    s.add_argument("--margin", type=float)
    s.set_defaults(func=cmd_shade)

    s = sub.add_parser("experiment", help="A/B test from a simulation config or two results files")
    s.add_argument("--config")
    s.add_argument("--out", help="results CSV arm,replica,metric,value")
    s.add_argument("--control")
    s.add_argument("--treatment")
    s.add_argument("--metric")
    s.add_argument("--alpha", type=float)
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, IncompatibleController) as exc:
        print(f"{parser.prog}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleBudget as exc:
        print(f"{parser.prog}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, OSError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
