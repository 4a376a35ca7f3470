"""Seeded geometric Brownian motion paths and synthetic option quotes.

Random numbers come from numpy's PCG64 bit generator.  Each normal variate
is produced by inverse-CDF from one 64-bit draw: the top 53 bits ``k`` map to
the open-interval uniform ``(k + 0.5) / 2**53`` and then through
:func:`scipy.special.ndtri`.  Given the seed, a path is fully determined by
those two documented steps, independent of numpy's own normal sampler.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.special import ndtri

from .blackscholes import BsInputs, bs_call_price, no_arbitrage_band
from .ingest import DAYS_PER_YEAR, QuoteRecord
from .lattice import LatticeSpec, OptionQuote, price_lattice

__all__ = [
    "DEFAULT_SIGMAS",
    "GbmSpec",
    "PricePath",
    "SyntheticQuote",
    "generate_synthetic_quotes",
    "market_like_records",
    "pcg64_normals",
    "simulate_gbm",
]

# 33 evenly spaced volatilities 0.10, 0.11, ..., 0.42
DEFAULT_SIGMAS: Tuple[float, ...] = tuple(round(0.10 + 0.01 * k, 2) for k in range(33))


@dataclass(frozen=True)
class GbmSpec:
    initial_price: float = 100.0
    drift: float = 0.0
    volatility: float = 0.2
    horizon_days: int = 90
    steps_per_day: int = 1
    seed: int = 42

    def __post_init__(self):
        if not (math.isfinite(self.initial_price) and self.initial_price > 0):
            raise ValueError(f"initial_price must be > 0, got {self.initial_price!r}")
        if not (math.isfinite(self.volatility) and self.volatility >= 0):
            raise ValueError(f"volatility must be >= 0, got {self.volatility!r}")
        if not math.isfinite(self.drift):
            raise ValueError(f"drift must be finite, got {self.drift!r}")
        if int(self.horizon_days) != self.horizon_days or self.horizon_days < 1:
            raise ValueError(f"horizon_days must be an integer >= 1, got {self.horizon_days!r}")
        if int(self.steps_per_day) != self.steps_per_day or self.steps_per_day < 1:
            raise ValueError(f"steps_per_day must be an integer >= 1, got {self.steps_per_day!r}")
        if not (0 <= self.seed < 2**64):
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def step_years(self) -> float:
        return 1.0 / (DAYS_PER_YEAR * self.steps_per_day)


@dataclass(frozen=True)
class PricePath:
    times: Tuple[float, ...]  # year fractions from the start
    prices: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.prices)

    def subsample(self, count: int) -> "PricePath":
        """``count`` points evenly spaced by index, always including the first."""
        n = len(self.prices)
        if not 1 <= count <= n:
            raise ValueError(f"count must be in [1, {n}], got {count}")
        idx = [round(i * (n - 1) / max(count - 1, 1)) for i in range(count)] if count > 1 else [0]
        return PricePath(tuple(self.times[i] for i in idx), tuple(self.prices[i] for i in idx))


def pcg64_normals(seed: int, count: int) -> np.ndarray:
    """Standard normals by inverse-CDF from PCG64 raw output (see module docstring)."""
    raw = np.random.PCG64(seed).random_raw(count) >> np.uint64(11)
    u = (raw.astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def simulate_gbm(spec: GbmSpec) -> PricePath:
    """Exact lognormal stepping of ``dS = mu S dt + sigma S dW``.

    ``S[k+1] = S[k] * exp((mu - sigma^2/2) dt + sigma sqrt(dt) Z[k])``, done as a
    cumulative sum of log increments.
    """
    n = spec.horizon_days * spec.steps_per_day
    dt_ = spec.step_years
    z = pcg64_normals(spec.seed, n)
    return _path_from_normals(spec.initial_price, spec.drift, spec.volatility, dt_, z)


def _path_from_normals(s0: float, mu: float, sigma: float, step: float, z: np.ndarray) -> PricePath:
    log_inc = (mu - 0.5 * sigma * sigma) * step + sigma * math.sqrt(step) * np.asarray(z, dtype=float)
    log_path = np.concatenate(([0.0], np.cumsum(log_inc)))
    prices = s0 * np.exp(log_path)
    times = np.arange(len(prices)) * step
    return PricePath(tuple(times.tolist()), tuple(prices.tolist()))


class SyntheticQuote(NamedTuple):
    quote: OptionQuote
    true_sigma: float


def generate_synthetic_quotes(
    path: PricePath,
    strikes: Sequence[float],
    maturity_days: int = 90,
    sigmas: Sequence[float] = DEFAULT_SIGMAS,
    spec: LatticeSpec = LatticeSpec(),
    rate: float = 0.0,
    fixed_expiry: bool = False,
) -> List[SyntheticQuote]:
    """Price lattice quotes along a path, one per (path point, strike, sigma).

    By default every quote has ``maturity_days`` to expiry.  With
    ``fixed_expiry`` all quotes share one expiry ``maturity_days`` after the
    path start, and points at or past it are skipped.
    """
    if maturity_days < 1:
        raise ValueError(f"maturity_days must be >= 1, got {maturity_days}")
    maturity = maturity_days / DAYS_PER_YEAR
    out: List[SyntheticQuote] = []
    for t, spot in zip(path.times, path.prices):
        tau = maturity - t if fixed_expiry else maturity
        if tau <= 1e-12:
            continue
        for strike in strikes:
            base = OptionQuote(spot, strike, tau, rate)
            for sigma in sigmas:
                price = float(price_lattice(base, sigma, spec))
                out.append(SyntheticQuote(base.with_price(price), sigma))
    return out


def market_like_records(
    count: int = 200,
    seed: int = 20180102,
    start: dt.date = dt.date(2018, 1, 2),
    min_price: float = 0.05,
) -> List[QuoteRecord]:
    """Black-Scholes-priced quotes with market-looking parameters.

    Spots 20-300, strikes within +/-15% of spot, 14-365 days to expiry,
    volatilities 0.15-0.60, rates 0.5%-3%; prices are rounded to cents and
    quotes under ``min_price`` or outside the no-arbitrage band are redrawn.
    ``reference_iv`` is left empty so consumers derive it themselves.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    records: List[QuoteRecord] = []
    while len(records) < count:
        spot = round(float(rng.uniform(20.0, 300.0)), 2)
        strike = round(spot * float(rng.uniform(0.85, 1.15)), 1)
        days = int(rng.integers(14, 366))
        sigma = float(rng.uniform(0.15, 0.60))
        rate = round(float(rng.uniform(0.005, 0.03)), 4)
        quote_date = start + dt.timedelta(days=int(rng.integers(0, 3 * 365)))
        maturity = days / DAYS_PER_YEAR
        price = round(bs_call_price(BsInputs(spot, strike, rate, maturity, sigma)), 2)
        lower, upper = no_arbitrage_band(OptionQuote(spot, strike, maturity, rate))
        if price < min_price or not (lower < price < upper):
            continue
        records.append(
            QuoteRecord(quote_date, quote_date + dt.timedelta(days=days), spot, strike, price, rate)
        )
    return records

