"""Newton-Raphson implied volatility on the binomial lattice.

The objective is ``g(sigma) = lattice_price(sigma) - market_price``.  Its slope
comes from a dual-number pass through the lattice by default, or from finite
differences for comparison.  Iteration stops once successive objective values
differ by less than ``tolerance``; ``SolverResult.final_residual`` reports how
close the last iterate actually is to the market price.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .dual import Dual
from .lattice import (
    LatticeSpec,
    OptionQuote,
    _backward_induction,
    probabilities_valid,
)

__all__ = [
    "DerivativeMode",
    "RESIDUAL_ACCEPT_FACTOR",
    "RETRY_PRESET",
    "SolverConfig",
    "SolverResult",
    "Status",
    "ZERO_DERIVATIVE_THRESHOLD",
    "central_difference",
    "central_difference_derivative",
    "solve_implied_vol",
]

ZERO_DERIVATIVE_THRESHOLD = 1e-12
# a positive stop counts as converged only if |g| <= this many tolerances
RESIDUAL_ACCEPT_FACTOR = 10.0
RETRY_PRESET = (0.1, 0.4, 0.8)


class Status(enum.Enum):
    CONVERGED = "Converged"
    CONVERGED_NEGATIVE = "ConvergedNegative"
    MAX_ITERATIONS = "MaxIterations"
    ZERO_DERIVATIVE = "ZeroDerivative"
    PRICER_ERROR = "PricerError"
    STALLED = "Stalled"

    def __str__(self) -> str:
        return self.value


class DerivativeMode(enum.Enum):
    AUTOMATIC = "automatic"
    CENTRAL_DIFFERENCE = "central"
    FORWARD_DIFFERENCE = "forward"


@dataclass(frozen=True)
class SolverConfig:
    initial_sigma: float = 0.2
    tolerance: float = 1e-5
    max_iterations: int = 100
    derivative_mode: DerivativeMode = DerivativeMode.AUTOMATIC
    fd_step: float = 1e-6
    retry_initials: Tuple[float, ...] = ()
    record_trace: bool = False

    def __post_init__(self):
        if not (self.tolerance > 0):
            raise ValueError(f"tolerance must be > 0, got {self.tolerance!r}")
        if isinstance(self.max_iterations, bool) or int(self.max_iterations) != self.max_iterations \
                or self.max_iterations < 1:
            raise ValueError(f"max_iterations must be an integer >= 1, got {self.max_iterations!r}")
        if not math.isfinite(self.initial_sigma):
            raise ValueError(f"initial_sigma must be finite, got {self.initial_sigma!r}")
        if self.derivative_mode is not DerivativeMode.AUTOMATIC and not (self.fd_step > 0):
            raise ValueError(f"fd_step must be > 0, got {self.fd_step!r}")
        object.__setattr__(self, "retry_initials", tuple(float(x) for x in self.retry_initials))


@dataclass(frozen=True)
class SolverResult:
    implied_vol: Optional[float]
    iterations: int
    status: Status
    final_residual: Optional[float]
    probability_flagged: bool = False
    trace: Optional[List[Tuple[float, float]]] = field(default=None, compare=False)

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    def to_dict(self) -> dict:
        return {
            "implied_vol": self.implied_vol,
            "status": self.status.value,
            "iterations": self.iterations,
            "residual": self.final_residual,
        }


def central_difference(fn: Callable[[float], float], x: float, h: float) -> float:
    """Symmetric difference quotient ``(fn(x+h) - fn(x-h)) / 2h``."""
    if not h > 0:
        raise ValueError(f"step must be > 0, got {h!r}")
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


def central_difference_derivative(
    quote: OptionQuote, spec: LatticeSpec, sigma: float, h: float = 1e-6
) -> float:
    """Finite-difference slope of the lattice price in volatility.

    The pricer runs under ``spec``'s probability policy, so a strict spec
    raises if ``sigma - h`` or ``sigma + h`` is outside the valid region.
    """
    from .lattice import price_lattice

    return central_difference(lambda s: price_lattice(quote, s, spec), sigma, h)


def _objective(quote: OptionQuote, steps: int, config: SolverConfig):
    spot, strike, maturity, rate = quote.spot, quote.strike, quote.maturity, quote.rate
    target = quote.market_price
    mode = config.derivative_mode
    h = config.fd_step

    def price(sigma):
        return _backward_induction(spot, strike, maturity, rate, sigma, steps)

    if mode is DerivativeMode.AUTOMATIC:
        def evaluate(sigma: float):
            p = price(Dual(sigma, 1.0))
            return p[0] - target, p[1]
    elif mode is DerivativeMode.CENTRAL_DIFFERENCE:
        def evaluate(sigma: float):
            return price(sigma) - target, (price(sigma + h) - price(sigma - h)) / (2.0 * h)
    else:
        def evaluate(sigma: float):
            p = price(sigma)
            return p - target, (price(sigma + h) - p) / h
    return evaluate


def _newton(quote: OptionQuote, steps: int, config: SolverConfig, x0: float) -> SolverResult:
    evaluate = _objective(quote, steps, config)
    dt = quote.maturity / steps
    tol = config.tolerance
    trace = [] if config.record_trace else None
    flagged = False

    x = x0
    g_prev = None
    best_x, best_g = None, math.inf
    n = 0
    while True:
        try:
            g, slope = evaluate(x)
        except ArithmeticError:
            return SolverResult(None, n, Status.PRICER_ERROR, None, flagged, trace)
        if not (math.isfinite(g) and math.isfinite(slope)):
            return SolverResult(None, n, Status.PRICER_ERROR, None, flagged, trace)
        if not flagged and (x < 0.0 or not probabilities_valid(quote.rate, dt, x)):
            flagged = True
        if trace is not None:
            trace.append((x, g))
        if abs(g) < best_g:
            best_x, best_g = x, abs(g)

        if g == 0.0 or (g_prev is not None and abs(g - g_prev) < tol):
            if x <= 0.0:
                status = Status.CONVERGED_NEGATIVE
            elif abs(g) <= RESIDUAL_ACCEPT_FACTOR * tol:
                status = Status.CONVERGED
            else:
                # with r = 0 the price is even in sigma, so Newton can settle
                # into a +x/-x two-cycle that satisfies the stopping rule
                status = Status.STALLED
            return SolverResult(x, n, status, abs(g), flagged, trace)
        if n >= config.max_iterations:
            return SolverResult(best_x, n, Status.MAX_ITERATIONS, best_g, flagged, trace)
        if abs(slope) < ZERO_DERIVATIVE_THRESHOLD:
            return SolverResult(None, n, Status.ZERO_DERIVATIVE, abs(g), flagged, trace)

        x = x - g / slope
        g_prev = g
        n += 1


def solve_implied_vol(
    quote: OptionQuote,
    spec: LatticeSpec = LatticeSpec(),
    config: SolverConfig = SolverConfig(),
) -> SolverResult:
    """Invert the lattice price of ``quote`` for volatility.

    Never raises for numerical trouble: failures come back as a
    :class:`Status`.  If the first attempt does not converge, each of
    ``config.retry_initials`` is tried in turn; the first converged attempt
    wins, otherwise the attempt with the smallest residual is returned.
    """
    if quote.market_price is None:
        raise ValueError("quote has no market_price to invert")
    # iterates may leave the valid region; they are evaluated anyway and flagged
    result = _newton(quote, spec.steps, config, config.initial_sigma)
    if result.converged or not config.retry_initials:
        return result
    attempts = [result]
    for x0 in config.retry_initials:
        retry = _newton(quote, spec.steps, config, x0)
        if retry.converged:
            return retry
        attempts.append(retry)
    return min(attempts, key=_residual_key)


def _residual_key(result: SolverResult):
    return math.inf if result.final_residual is None else result.final_residual


def solve_many(
    quotes: Sequence[OptionQuote],
    spec: LatticeSpec = LatticeSpec(),
    config: SolverConfig = SolverConfig(),
) -> List[SolverResult]:
    return [solve_implied_vol(q, spec, config) for q in quotes]
