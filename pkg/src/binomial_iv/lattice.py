"""Binomial lattice pricer for European calls.

Each step moves the stock by ``exp(+sigma*sqrt(dt))`` or ``exp(-sigma*sqrt(dt))``
and values are rolled back with branch weights ``1/2 +/- r*sqrt(dt)/(2*sigma)``
discounted by ``exp(-r*dt)``.  Because up and down factors are reciprocal the
tree recombines, so an ``n``-step lattice has ``n + 1`` terminal nodes.

All pricing functions are written against :mod:`binomial_iv.dual`'s scalar
helpers, so passing a :class:`~binomial_iv.dual.Dual` volatility returns the
price together with its derivative in volatility.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import List, Optional

from .dual import Scalar, exp, max_zero, value_of

__all__ = [
    "DEFAULT_STEPS",
    "InvalidQuote",
    "LatticeSpec",
    "NegativeVolatilityWarning",
    "OptionQuote",
    "PricingError",
    "ProbabilityOutOfRange",
    "ProbabilityPolicy",
    "ProbabilityWarning",
    "ZeroSigmaWithPositiveRate",
    "branch_probabilities",
    "crosses_kink",
    "payoff",
    "price_lattice",
    "price_single_step",
    "probabilities_valid",
    "terminal_prices",
]

DEFAULT_STEPS = 10


class PricingError(ArithmeticError):
    """Base class for pricer failures."""


class ZeroSigmaWithPositiveRate(PricingError):
    """Volatility is exactly zero while the rate is not, so the branch weights divide by zero."""


class ProbabilityOutOfRange(PricingError):
    """A branch probability left [0, 1] under the strict policy."""


class InvalidQuote(ValueError):
    pass


class ProbabilityWarning(UserWarning):
    """Branch probabilities outside [0, 1]; the price was computed anyway."""


class NegativeVolatilityWarning(UserWarning):
    pass


class ProbabilityPolicy(enum.Enum):
    STRICT = "strict"
    FLAG = "flag"


@dataclass(frozen=True)
class LatticeSpec:
    steps: int = DEFAULT_STEPS
    probability_policy: ProbabilityPolicy = ProbabilityPolicy.STRICT

    def __post_init__(self):
        if isinstance(self.steps, bool) or not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError(f"steps must be a positive integer, got {self.steps!r}")
        if not isinstance(self.probability_policy, ProbabilityPolicy):
            raise ValueError(f"unknown probability policy {self.probability_policy!r}")

    def flagging(self) -> "LatticeSpec":
        """Same lattice with the non-raising probability policy."""
        return LatticeSpec(self.steps, ProbabilityPolicy.FLAG)


@dataclass(frozen=True)
class OptionQuote:
    """A European call observation.

    ``maturity`` is in years and ``rate`` is the annualized continuously
    compounded risk-free rate.  ``market_price`` is ``None`` for pure pricing.
    """

    spot: float
    strike: float
    maturity: float
    rate: float = 0.0
    market_price: Optional[float] = None

    def __post_init__(self):
        for name in ("spot", "strike", "maturity"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidQuote(f"{name} must be finite and > 0, got {v!r}")
        if not math.isfinite(self.rate):
            raise InvalidQuote(f"rate must be finite, got {self.rate!r}")
        if self.market_price is not None and not (
            math.isfinite(self.market_price) and self.market_price >= 0
        ):
            raise InvalidQuote(f"market_price must be finite and >= 0, got {self.market_price!r}")

    def with_price(self, market_price: Optional[float]) -> "OptionQuote":
        return OptionQuote(self.spot, self.strike, self.maturity, self.rate, market_price)


def payoff(terminal_price: Scalar, strike: float) -> Scalar:
    """Call payoff ``max(0, S_T - K)``."""
    return max_zero(terminal_price - strike)


def branch_probabilities(rate: float, dt: float, sigma: Scalar):
    """Return ``(p_up, p_down)`` for one step of length ``dt``.

    With a zero rate both are exactly 1/2 regardless of ``sigma``.
    """
    if rate == 0.0:
        return 0.5, 0.5
    if value_of(sigma) == 0.0:
        raise ZeroSigmaWithPositiveRate(
            f"sigma is zero while rate is {rate!r}: branch probabilities are undefined"
        )
    tilt = (rate * math.sqrt(dt)) / (2.0 * sigma)
    return 0.5 + tilt, 0.5 - tilt


def probabilities_valid(rate: float, dt: float, sigma: float) -> bool:
    """True when both branch probabilities lie in [0, 1]."""
    if rate == 0.0:
        return True
    if sigma == 0.0:
        return False
    tilt = (rate * math.sqrt(dt)) / (2.0 * sigma)
    return abs(tilt) <= 0.5


def _check(quote: OptionQuote, sigma: Scalar, dt: float, policy: ProbabilityPolicy):
    s = value_of(sigma)
    if not math.isfinite(s):
        raise PricingError(f"sigma must be finite, got {s!r}")
    if quote.rate != 0.0 and s == 0.0:
        raise ZeroSigmaWithPositiveRate(
            f"sigma is zero while rate is {quote.rate!r}: branch probabilities are undefined"
        )
    if not probabilities_valid(quote.rate, dt, s):
        msg = (
            f"branch probabilities outside [0, 1] for sigma={s!r}, rate={quote.rate!r}, "
            f"dt={dt!r} (need sigma >= rate*sqrt(dt) = {quote.rate * math.sqrt(dt)!r})"
        )
        if policy is ProbabilityPolicy.STRICT:
            raise ProbabilityOutOfRange(msg)
        warnings.warn(msg, ProbabilityWarning, stacklevel=3)
    if s < 0.0:
        warnings.warn(f"negative volatility {s!r}", NegativeVolatilityWarning, stacklevel=3)


def price_single_step(
    quote: OptionQuote,
    sigma: Scalar,
    policy: ProbabilityPolicy = ProbabilityPolicy.STRICT,
) -> Scalar:
    """One-period binomial call value with ``dt = maturity``."""
    dt = quote.maturity
    _check(quote, sigma, dt, policy)
    spread = sigma * math.sqrt(dt)
    c_up = payoff(quote.spot * exp(spread), quote.strike)
    c_down = payoff(quote.spot * exp(-spread), quote.strike)
    p_up, p_down = branch_probabilities(quote.rate, dt, sigma)
    return math.exp(-quote.rate * dt) * (p_up * c_up + p_down * c_down)


def price_lattice(quote: OptionQuote, sigma: Scalar, spec: LatticeSpec = LatticeSpec()) -> Scalar:
    """Price a European call on an ``spec.steps``-layer recombining lattice.

    Raises :class:`ZeroSigmaWithPositiveRate` when ``sigma`` is zero and the
    rate is not, and :class:`ProbabilityOutOfRange` under the strict policy
    when ``sigma < rate*sqrt(maturity/steps)``.  Under the flag policy that
    condition (and a negative ``sigma``) only emits a warning.
    """
    dt = quote.maturity / spec.steps
    _check(quote, sigma, dt, spec.probability_policy)
    return _backward_induction(quote.spot, quote.strike, quote.maturity, quote.rate, sigma, spec.steps)


def _backward_induction(
    spot: float, strike: float, maturity: float, rate: float, sigma: Scalar, steps: int
) -> Scalar:
    # no validation here; callers own it
    dt = maturity / steps
    spread = sigma * math.sqrt(dt)
    p_up, p_down = branch_probabilities(rate, dt, sigma)
    disc = math.exp(-rate * dt)

    values: List[Scalar] = [
        payoff(spot * exp((2 * i - steps) * spread), strike) for i in range(steps + 1)
    ]
    if disc == 1.0:
        for layer in range(steps, 0, -1):
            values = [p_up * values[i + 1] + p_down * values[i] for i in range(layer)]
    else:
        for layer in range(steps, 0, -1):
            values = [disc * (p_up * values[i + 1] + p_down * values[i]) for i in range(layer)]
    return values[0]


def terminal_prices(quote: OptionQuote, sigma: float, steps: int) -> List[float]:
    """Terminal stock prices ``S0 * exp((2i - n) sigma sqrt(dt))`` for ``i = 0..n``."""
    spread = sigma * math.sqrt(quote.maturity / steps)
    return [quote.spot * math.exp((2 * i - steps) * spread) for i in range(steps + 1)]


def crosses_kink(quote: OptionQuote, lo: float, hi: float, steps: int) -> bool:
    """True if some terminal node moves across the strike between two volatilities."""
    a = terminal_prices(quote, lo, steps)
    b = terminal_prices(quote, hi, steps)
    return any((x > quote.strike) != (y > quote.strike) for x, y in zip(a, b))
