import itertools
import math

import pytest

from binomial_iv.blackscholes import BsInputs, bs_call_price, bs_vega
from binomial_iv.dual import Dual
from binomial_iv.lattice import LatticeSpec, OptionQuote, ProbabilityOutOfRange, crosses_kink, price_lattice
from binomial_iv.solver import (
    DerivativeMode,
    RETRY_PRESET,
    SolverConfig,
    Status,
    central_difference,
    central_difference_derivative,
    solve_implied_vol,
)

SPEC = LatticeSpec()
ROUND_TRIP_SIGMAS = [round(0.1 + 0.04 * k, 2) for k in range(9)]
GRID = list(itertools.product(ROUND_TRIP_SIGMAS, (0.8, 1.0, 1.2), (0.25, 1.0)))
# the 10-step price is exactly zero for sigma <= ln(1.25)/sqrt(2.5) here
NOT_IDENTIFIABLE = {(0.1, 0.8, 0.25), (0.14, 0.8, 0.25)}


def priced(sigma, moneyness=1.0, maturity=1.0, rate=0.0, steps=10):
    q = OptionQuote(100 * moneyness, 100, maturity, rate)
    return q.with_price(price_lattice(q, sigma, LatticeSpec(steps)))


class TestConfig:
    def test_default_hyperparameters(self):
        c = SolverConfig()
        assert c.initial_sigma == 0.2
        assert c.tolerance == 1e-5
        assert c.max_iterations == 100
        assert c.derivative_mode is DerivativeMode.AUTOMATIC
        assert c.retry_initials == ()

    def test_retry_preset(self):
        assert RETRY_PRESET == (0.1, 0.4, 0.8)

    @pytest.mark.parametrize("bad", [dict(tolerance=0), dict(max_iterations=0), dict(max_iterations=1.5),
                                     dict(derivative_mode=DerivativeMode.CENTRAL_DIFFERENCE, fd_step=0)])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


class TestRoundTrip:
    def test_start_at_root(self):
        r = solve_implied_vol(priced(0.2, maturity=1.0))
        assert r.status is Status.CONVERGED
        assert r.implied_vol == pytest.approx(0.2, abs=1e-6)
        assert r.iterations <= 2

    def test_from_below(self):
        r = solve_implied_vol(priced(0.35))
        assert r.status is Status.CONVERGED
        assert abs(r.implied_vol - 0.35) < 1e-6

    @pytest.mark.parametrize("sigma, m, t", GRID)
    def test_grid(self, sigma, m, t):
        r = solve_implied_vol(priced(sigma, m, t))
        assert r.status is Status.CONVERGED
        assert r.iterations <= 15
        assert r.final_residual <= 10 * SolverConfig().tolerance
        if (sigma, m, t) not in NOT_IDENTIFIABLE:
            assert abs(r.implied_vol - sigma) < 1e-6

    @pytest.mark.parametrize("sigma", [0.1, 0.14])
    def test_non_identifiable_points_are_flat(self, sigma):
        q = priced(sigma, 0.8, 0.25)
        assert q.market_price == 0.0
        assert price_lattice(q, Dual(sigma, 1.0)) == Dual(0.0, 0.0)
        threshold = math.log(1.25) / math.sqrt(2.5)
        assert price_lattice(q, threshold * (1 - 1e-9)) == 0.0
        assert price_lattice(q, threshold * (1 + 1e-6)) > 0.0

    @pytest.mark.parametrize("sigma, m, t", [g for g in GRID if g not in NOT_IDENTIFIABLE])
    def test_derivative_modes_agree(self, sigma, m, t):
        q = priced(sigma, m, t)
        auto = solve_implied_vol(q)
        fd = solve_implied_vol(q, SPEC, SolverConfig(derivative_mode=DerivativeMode.CENTRAL_DIFFERENCE))
        assert fd.status is Status.CONVERGED
        assert abs(fd.implied_vol - auto.implied_vol) < 1e-5

    def test_forward_difference_mode(self):
        r = solve_implied_vol(priced(0.3), SPEC, SolverConfig(derivative_mode=DerivativeMode.FORWARD_DIFFERENCE))
        assert r.status is Status.CONVERGED
        assert abs(r.implied_vol - 0.3) < 1e-5

    def test_positive_rate(self):
        r = solve_implied_vol(priced(0.27, 0.95, 0.5, rate=0.04))
        assert r.status is Status.CONVERGED
        assert abs(r.implied_vol - 0.27) < 1e-6

    def test_other_step_counts(self):
        for steps in (1, 3, 25, 50):
            r = solve_implied_vol(priced(0.3, 1.1, 0.5, steps=steps), LatticeSpec(steps))
            assert r.status is Status.CONVERGED
            assert abs(r.implied_vol - 0.3) < 1e-6

    def test_deterministic(self):
        q = priced(0.33, 0.9, 0.4)
        a = solve_implied_vol(q, SPEC, SolverConfig(record_trace=True))
        b = solve_implied_vol(q, SPEC, SolverConfig(record_trace=True))
        assert a == b and a.trace == b.trace

    def test_trace_records_iterates(self):
        r = solve_implied_vol(priced(0.35), SPEC, SolverConfig(record_trace=True))
        assert r.trace[0][0] == 0.2
        assert len(r.trace) == r.iterations + 1
        assert r.trace[-1][0] == r.implied_vol


class TestFailures:
    @pytest.mark.parametrize("spot", [101, 110, 120, 150])
    def test_zero_price_in_the_money(self, spot):
        r = solve_implied_vol(OptionQuote(spot, 100, 0.25, 0.0, 0.0))
        assert r.status in {Status.MAX_ITERATIONS, Status.CONVERGED_NEGATIVE, Status.ZERO_DERIVATIVE}

    def test_converged_negative(self):
        # price below intrinsic: no positive root; Newton settles at a negative iterate
        r = solve_implied_vol(OptionQuote(105, 100, 0.1, 0.0, 2.5))
        assert r.status is Status.CONVERGED_NEGATIVE
        assert r.implied_vol == pytest.approx(-0.161645798770867, abs=1e-9)
        assert r.iterations == 9
        assert r.probability_flagged

    def test_stalled_two_cycle_is_not_converged(self):
        r = solve_implied_vol(OptionQuote(101, 100, 0.5, 0.0, 0.5), SPEC, SolverConfig(record_trace=True))
        assert r.status is Status.STALLED
        assert r.implied_vol > 0
        assert r.final_residual > 0.5
        (x_prev, g_prev), (x_last, g_last) = r.trace[-2:]
        assert abs(g_last - g_prev) < 1e-5
        assert x_prev < 0 < x_last

    def test_max_iterations(self):
        r = solve_implied_vol(priced(0.9), SPEC, SolverConfig(max_iterations=1))
        assert r.status is Status.MAX_ITERATIONS
        assert r.iterations == 1

    def test_zero_derivative(self):
        # every terminal node is out of the money at sigma = 0.2
        r = solve_implied_vol(OptionQuote(50, 100, 0.1, 0.0, 1.0))
        assert r.status is Status.ZERO_DERIVATIVE
        assert r.implied_vol is None

    def test_pricer_error(self):
        # first Newton step lands on sigma = 0 exactly with a positive rate
        q = OptionQuote(100, 100, 1.0, 0.05, 1.0)
        r = solve_implied_vol(q, SPEC, SolverConfig(initial_sigma=0.0))
        assert r.status is Status.PRICER_ERROR
        assert r.iterations == 0

    def test_retries_rescue(self):
        q = OptionQuote(50, 100, 0.1, 0.0, price_lattice(OptionQuote(50, 100, 0.1, 0.0), 0.8))
        plain = solve_implied_vol(q)
        assert plain.status is Status.ZERO_DERIVATIVE
        r = solve_implied_vol(q, SPEC, SolverConfig(retry_initials=RETRY_PRESET))
        assert r.status is Status.CONVERGED
        assert abs(r.implied_vol - 0.8) < 1e-6

    def test_retries_keep_best_residual(self):
        q = OptionQuote(105, 100, 0.1, 0.0, 2.5)
        r = solve_implied_vol(q, SPEC, SolverConfig(retry_initials=RETRY_PRESET))
        assert r.status is not Status.CONVERGED
        singles = [solve_implied_vol(q, SPEC, SolverConfig(initial_sigma=x)) for x in (0.2,) + RETRY_PRESET]
        assert r.final_residual == min(s.final_residual for s in singles if s.final_residual is not None)

    def test_missing_market_price(self):
        with pytest.raises(ValueError):
            solve_implied_vol(OptionQuote(100, 100, 1.0))


class TestCentralDifference:
    def test_matches_dual(self):
        q = OptionQuote(100, 95, 0.5, 0.03)
        assert not crosses_kink(q, 0.25 - 1e-6, 0.25 + 1e-6, 10)
        ad = price_lattice(q, Dual(0.25, 1.0)).deriv
        assert central_difference_derivative(q, SPEC, 0.25, 1e-6) == pytest.approx(ad, abs=1e-5)

    def test_matches_bs_vega(self):
        q = OptionQuote(90, 100, 0.75, 0.02)
        fn = lambda s: bs_call_price(BsInputs.from_quote(q, s))  # noqa: E731
        assert central_difference(fn, 0.3, 1e-6) == pytest.approx(bs_vega(BsInputs.from_quote(q, 0.3)), abs=1e-5)

    def test_sigma_independent(self):
        assert central_difference(lambda s: 3.0, 0.4, 1e-6) == 0.0
        # deep OTM: flat zero region of the lattice
        assert central_difference_derivative(OptionQuote(50, 100, 0.1), SPEC, 0.2) == 0.0

    def test_propagates_pricer_errors(self):
        with pytest.raises(ProbabilityOutOfRange):
            central_difference_derivative(OptionQuote(100, 100, 1.0, 0.1), SPEC, 0.0316, 1e-3)

    def test_bad_step(self):
        with pytest.raises(ValueError):
            central_difference(lambda s: s, 1.0, 0.0)
