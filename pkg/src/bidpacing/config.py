"""Run configuration from an INI-style file with [market], [campaign],
[controller] and optional [experiment] / [treatment] sections."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from typing import Optional

from .core import (CampaignConfig, CostCap, GuaranteedDelivery, MaxDelivery, PacingClock,
                   TargetCPA)
from .sim import DIURNAL_SUPPLY, MarketSpec


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    market: MarketSpec
    campaign: CampaignConfig
    clock: PacingClock
    controller: str
    params: dict
    experiment: dict = field(default_factory=dict)
    treatment: Optional[dict] = None


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _value(text: str):
    low = text.strip().lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text.strip()


def _objective(sec):
    kind = sec.get("objective", "max-delivery").strip().lower()
    if kind == "max-delivery":
        return MaxDelivery()
    if kind == "cost-cap":
        return CostCap(sec.getfloat("cap"))
    if kind == "target-cpa":
        return TargetCPA(sec.getfloat("cap"), sec.getfloat("tolerance", 0.1))
    if kind == "guaranteed-delivery":
        return GuaranteedDelivery(sec.getfloat("goal"))
    raise ConfigError(f"unknown objective {kind!r}")


def parse_config(text: str, seed: Optional[int] = None) -> RunConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    for name in ("market", "campaign", "controller"):
        if not cp.has_section(name):
            raise ConfigError(f"missing [{name}] section")
    try:
        m = cp["market"]
        market = MarketSpec(
            pctr_mu=m.getfloat("pctr_mu", math.log(0.02)),
            pctr_sigma=m.getfloat("pctr_sigma", 0.5),
            ecpm_mu=m.getfloat("ecpm_mu", math.log(0.02)),
            ecpm_sigma=m.getfloat("ecpm_sigma", 0.6),
            supply=_floats(m["supply"]) if "supply" in m else DIURNAL_SUPPLY,
            auctions=m.getint("auctions", 100_000),
            day=m.getfloat("day", 86400.0),
            slots=_floats(m["slots"]) if "slots" in m else None,
            seed=seed if seed is not None else m.getint("seed", 0),
        )
        clock = PacingClock(m.getfloat("update_interval", 900.0),
                            m.getfloat("bucket_interval", market.day / len(market.supply)),
                            market.day)
        c = cp["campaign"]
        if "budget" not in c:
            raise ConfigError("[campaign] needs a budget")
        campaign = CampaignConfig(
            id=c.get("id", "campaign"),
            budget_B=c.getfloat("budget"),
            horizon_T=c.getint("horizon", market.auctions),
            objective=_objective(c),
        )
        ctrl = dict(cp["controller"])
        name = ctrl.pop("name", None)
        if not name:
            raise ConfigError("[controller] needs a name")
        params = {k: _value(v) for k, v in ctrl.items()}
        experiment = {k: _value(v) for k, v in cp["experiment"].items()} if cp.has_section("experiment") else {}
        treatment = ({k: _value(v) for k, v in cp["treatment"].items()}
                     if cp.has_section("treatment") else None)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from None
    if clock.n_buckets != len(market.supply):
        raise ConfigError(f"supply has {len(market.supply)} buckets but the clock has {clock.n_buckets}")
    return RunConfig(market, campaign, clock, name, params, experiment, treatment)


def load_config(path, seed: Optional[int] = None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, seed)
