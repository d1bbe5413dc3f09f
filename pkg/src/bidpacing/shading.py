"""First-price bid shading with a sigmoid win-probability model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .core import StepSizeSchedule
from .dogd import LAMBDA_FLOOR

DEFAULT_TOL = 1e-8
DEFAULT_ITER = 100


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass(frozen=True)
class WinProbModel:
    """P(b) = sigmoid(w0 + w.x + beta ln b). beta must be positive, which
    makes P increasing and log-concave in b."""

    w0: float = 0.0
    weights: tuple = ()
    beta: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"log-bid coefficient must be positive, got {self.beta}")
        object.__setattr__(self, "weights", tuple(float(v) for v in self.weights))

    def score(self, features: Optional[Sequence[float]], b: float) -> float:
        lin = self.w0
        if self.weights:
            if features is None or len(features) != len(self.weights):
                raise ValueError("feature vector does not match the weights")
            lin += float(np.dot(self.weights, features))
        return lin + self.beta * math.log(b)

    def ratio(self, features, b: float) -> float:
        """P(b)/P'(b) = b / (beta (1 - P(b)))."""
        z = self.score(features, b)
        return b / (self.beta * _sigmoid(-z))


def winprob_eval(model: WinProbModel, features, b: float):
    if not b > 0:
        raise ValueError("bid must be positive")
    p = _sigmoid(model.score(features, b))
    return p, p * (1.0 - p) * model.beta / b


def shading_residual(model: WinProbModel, features, b: float, rhs: float) -> float:
    return b + model.ratio(features, b) - rhs


def default_bracket(rhs: float):
    return 1e-4, max(1e4 * rhs, 2e-4)


def solve_stationary_bid(model: WinProbModel, features, rhs: float, bracket=None,
                         tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_ITER) -> float:
    """Root of b + P(b)/P'(b) = rhs by bisection; the left side is strictly
    increasing for beta > 0. Bracket ends are returned when the root lies
    outside."""
    lo, hi = bracket if bracket is not None else default_bracket(rhs)
    if not 0 < lo < hi:
        raise ValueError("invalid bracket")
    if shading_residual(model, features, lo, rhs) >= 0:
        return lo
    if shading_residual(model, features, hi, rhs) <= 0:
        return hi
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        res = shading_residual(model, features, mid, rhs)
        if abs(res) < tol:
            break
        if res < 0:
            lo = mid
        else:
            hi = mid
    return mid


def solve_welfare_bid(model, features, lam: float, bracket=None, tol=DEFAULT_TOL) -> float:
    if not lam > 0:
        raise ValueError("dual must be positive")
    return solve_stationary_bid(model, features, 1.0 / lam, bracket, tol)


def solve_utility_bid(model, features, value: float, lam: float, bracket=None, tol=DEFAULT_TOL) -> float:
    if not value > 0:
        raise ValueError("value must be positive")
    if lam < 0:
        raise ValueError("dual must be non-negative")
    return solve_stationary_bid(model, features, value / (1.0 + lam), bracket, tol)


def solve_margin_bid(model, features, lam: float, margin: float, bracket=None, tol=DEFAULT_TOL) -> float:
    if not lam > 0:
        raise ValueError("dual must be positive")
    if margin < 0:
        raise ValueError("margin must be non-negative")
    return solve_stationary_bid(model, features, 1.0 / (lam * (1.0 + margin)), bracket, tol)


# ---------------------------------------------------------------------------
# Arbitrary auction formats
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AuctionResponse:
    """Win probability G, expected cost H and their derivatives g, h as
    functions of the bid. ``ratio_inverse`` is the inverse of h/g when known
    in closed form."""

    G: Callable[[float], float]
    H: Callable[[float], float]
    g: Callable[[float], float]
    h: Callable[[float], float]
    ratio_inverse: Optional[Callable[[float], float]] = None

    def ratio(self, b: float) -> float:
        return self.h(b) / self.g(b)


def fpa_response(model: WinProbModel, features=None) -> AuctionResponse:
    def G(b):
        return winprob_eval(model, features, b)[0]

    def g(b):
        return winprob_eval(model, features, b)[1]

    return AuctionResponse(
        G=G,
        H=lambda b: G(b) * b,
        g=g,
        h=lambda b: G(b) + b * g(b),
    )


def dsic_response(cdf: Callable, pdf: Callable, expected_payment: Optional[Callable] = None) -> AuctionResponse:
    """Truthful auction where the price is the competing bid with the given
    distribution. The marginal cost of winning equals the bid, h(b) = b g(b),
    so h/g is the identity."""
    if expected_payment is None:
        def expected_payment(b):
            return quad(lambda z: z * pdf(z), 0.0, b)[0]
    return AuctionResponse(
        G=cdf,
        H=expected_payment,
        g=pdf,
        h=lambda b: b * pdf(b),
        ratio_inverse=lambda y: y,
    )


def solve_general_bid(response: AuctionResponse, r: float, lam: float, bracket=None,
                      tol: float = DEFAULT_TOL, max_iter: int = 200) -> float:
    """Bid at which the marginal cost per marginal win, h/g, equals r/lam."""
    if not (r > 0 and lam > 0):
        raise ValueError("value and dual must be positive")
    target = r / lam
    lo, hi = bracket if bracket is not None else default_bracket(target)
    if not 0 < lo < hi:
        raise ValueError("invalid bracket")
    if response.ratio_inverse is not None:
        return min(max(response.ratio_inverse(target), lo), hi)
    if response.ratio(lo) >= target:
        return lo
    if response.ratio(hi) <= target:
        return hi
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if response.ratio(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fpa_lambda_step(lam: float, schedule: StepSizeSchedule, t: int, B: float, T: float,
                    expected_cost: float, floor: float = LAMBDA_FLOOR) -> float:
    """Projected dual step using the expected cost H(b) of the bid placed."""
    return max(floor, lam - schedule.value(t) * (B / T - expected_cost))
