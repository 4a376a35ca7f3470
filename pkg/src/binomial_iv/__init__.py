"""Implied volatility of European calls by Newton-Raphson on a binomial lattice.

The lattice price's slope in volatility comes from forward-mode dual numbers
pushed through the same backward induction that computes the price.
"""

from .blackscholes import BsInputs, PriceOutOfBand, bs_call_price, bs_implied_vol, bs_vega, norm_cdf
from .dual import Dual
from .lattice import (
    LatticeSpec,
    OptionQuote,
    ProbabilityPolicy,
    payoff,
    price_lattice,
    price_single_step,
)
from .solver import (
    DerivativeMode,
    SolverConfig,
    SolverResult,
    Status,
    central_difference_derivative,
    solve_implied_vol,
)

__version__ = "0.1.0"

__all__ = [
    "BsInputs",
    "DerivativeMode",
    "Dual",
    "LatticeSpec",
    "OptionQuote",
    "PriceOutOfBand",
    "ProbabilityPolicy",
    "SolverConfig",
    "SolverResult",
    "Status",
    "bs_call_price",
    "bs_implied_vol",
    "bs_vega",
    "central_difference_derivative",
    "norm_cdf",
    "payoff",
    "price_lattice",
    "price_single_step",
    "solve_implied_vol",
]
