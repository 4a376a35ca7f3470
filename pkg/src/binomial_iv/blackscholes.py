"""Closed-form Black-Scholes European call, vega and a safeguarded implied-vol solver.

This is the reference side of the package: it shares no code with the lattice
pricer or the dual-number solver it is used to check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .lattice import OptionQuote

__all__ = [
    "BsInputs",
    "InvalidInputs",
    "PriceOutOfBand",
    "bs_call_price",
    "bs_implied_vol",
    "bs_vega",
    "no_arbitrage_band",
    "norm_cdf",
    "norm_pdf",
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class InvalidInputs(ValueError):
    pass


class PriceOutOfBand(ValueError):
    """Observed price is outside ``(max(0, S - K e^{-rT}), S)``; no implied vol exists."""


@dataclass(frozen=True)
class BsInputs:
    spot: float
    strike: float
    rate: float
    maturity: float
    sigma: float

    def __post_init__(self):
        for name in ("spot", "strike", "maturity", "sigma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise InvalidInputs(f"{name} must be finite and > 0, got {v!r}")
        if not math.isfinite(self.rate):
            raise InvalidInputs(f"rate must be finite, got {self.rate!r}")

    @classmethod
    def from_quote(cls, quote: OptionQuote, sigma: float) -> "BsInputs":
        return cls(quote.spot, quote.strike, quote.rate, quote.maturity, sigma)


def norm_cdf(x: float) -> float:
    """Standard normal CDF through the complementary error function.

    ``erfc`` keeps full relative precision in the lower tail, so deep
    out-of-the-money prices stay resolvable instead of rounding to zero.
    """
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x: float) -> float:
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def _d1_d2(p: BsInputs):
    vol_sqrt_t = p.sigma * math.sqrt(p.maturity)
    d1 = (math.log(p.spot / p.strike) + (p.rate + 0.5 * p.sigma * p.sigma) * p.maturity) / vol_sqrt_t
    return d1, d1 - vol_sqrt_t


def bs_call_price(inputs: BsInputs) -> float:
    """``S N(d1) - K e^{-rT} N(d2)``."""
    d1, d2 = _d1_d2(inputs)
    return inputs.spot * norm_cdf(d1) - inputs.strike * math.exp(-inputs.rate * inputs.maturity) * norm_cdf(d2)


def bs_vega(inputs: BsInputs) -> float:
    d1, _ = _d1_d2(inputs)
    return inputs.spot * norm_pdf(d1) * math.sqrt(inputs.maturity)


def no_arbitrage_band(quote: OptionQuote):
    """Open interval ``(lower, upper)`` a call price must lie in to have an implied vol."""
    lower = max(0.0, quote.spot - quote.strike * math.exp(-quote.rate * quote.maturity))
    return lower, quote.spot


def bs_implied_vol(quote: OptionQuote, max_iterations: int = 200) -> float:
    """Black-Scholes implied volatility of ``quote.market_price``.

    Newton on the analytic vega inside a shrinking bracket.  A Newton step
    that leaves the bracket, or fails to halve the previous step, is replaced
    by bisection, so deep out-of-the-money quotes (where Newton on the price
    crawls) still converge.  Iterates until the volatility stops moving at
    machine precision, which drives the price residual far below 1e-10.
    """
    if quote.market_price is None:
        raise InvalidInputs("quote has no market_price")
    target = quote.market_price
    lower, upper = no_arbitrage_band(quote)
    if not (lower < target < upper):
        raise PriceOutOfBand(
            f"price {target!r} outside no-arbitrage band ({lower!r}, {upper!r})"
        )

    def residual(sigma: float) -> float:
        return bs_call_price(BsInputs.from_quote(quote, sigma)) - target

    # price(0+) is the lower band edge, so lo = 0 always brackets from below
    lo, hi = 0.0, 1.0
    while residual(hi) < 0.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e8:
            raise PriceOutOfBand(f"price {target!r} needs a volatility above {hi:g}")

    sigma = 0.5 * (lo + hi)
    step_old = step = hi - lo
    for _ in range(max_iterations):
        f = residual(sigma)
        if f == 0.0:
            return sigma
        if f > 0.0:
            hi = sigma
        else:
            lo = sigma
        vega = bs_vega(BsInputs.from_quote(quote, sigma))
        newton = sigma - f / vega if vega > 0.0 else math.nan
        # bisect when Newton leaves the bracket or is not at least halving the step
        if not (lo < newton < hi) or abs(2.0 * f) > abs(step_old * vega):
            step_old, step = step, 0.5 * (hi - lo)
            candidate = lo + step
        else:
            step_old, step = step, sigma - newton
            candidate = newton
        if candidate == sigma or abs(candidate - sigma) <= 1e-15 * sigma or hi - lo <= 4.0 * math.ulp(hi):
            return candidate
        sigma = candidate
    return sigma
