"""End-to-end exit criteria, each checked at its stated tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line.  pytest prints them
in an "acceptance criteria" section at the end of the run, and running this
file directly (``python tests/test_acceptance.py``) prints them as it goes.
"""

import datetime as dt
import io
import itertools
import random
import time
from importlib import resources

import pytest

import conftest
from binomial_iv.batch import histogram, hist_errors, run_batch, scatter_points, write_histogram, write_scatter
from binomial_iv.dual import Dual
from binomial_iv.ingest import QuoteRecord, ResultRow, parse_quotes, read_results, write_results
from binomial_iv.lattice import LatticeSpec, OptionQuote, crosses_kink, price_lattice, probabilities_valid
from binomial_iv.simulate import DEFAULT_SIGMAS, GbmSpec, generate_synthetic_quotes, simulate_gbm
from binomial_iv.solver import SolverConfig, Status, central_difference_derivative, solve_implied_vol

pytestmark = pytest.mark.acceptance

BS_ATM = 7.965567
START = dt.date(2018, 1, 2)


def report(number, ok, detail):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def synthetic_quotes(points, strikes=(100.0,)):
    path = simulate_gbm(GbmSpec(initial_price=100.0, drift=0.0, volatility=0.2, seed=42)).subsample(points)
    return generate_synthetic_quotes(path, strikes, 90, DEFAULT_SIGMAS, LatticeSpec(10), 0.0)


def test_1_generated_data_accuracy():
    t0 = time.perf_counter()
    quotes = synthetic_quotes(10)
    errors = [abs(solve_implied_vol(q.quote).implied_vol - q.true_sigma) for q in quotes]
    elapsed = time.perf_counter() - t0
    coarse = sum(e < 0.01 for e in errors) / len(errors)
    fine = sum(e < 1e-6 for e in errors) / len(errors)
    report(1, len(quotes) == 330 and coarse == 1.0 and fine >= 0.99 and elapsed < 5.0,
           f"{len(quotes)} quotes, within 0.01: {coarse:.2%}, within 1e-6: {fine:.2%}, {elapsed:.2f}s")


def test_2_lattice_converges_to_black_scholes():
    quote = OptionQuote(100.0, 100.0, 1.0, 0.0)
    steps = (10, 50, 100, 500)
    err = {n: abs(price_lattice(quote, 0.2, LatticeSpec(n)) - BS_ATM) for n in steps}
    decreasing = all(err[b] <= 1.05 * err[a] for a, b in zip(steps, steps[1:]))
    detail = ", ".join(f"n={n}: {err[n]:.4f}" for n in steps)
    report(2, decreasing and err[500] < 0.04, f"|lattice(n) - {BS_ATM}| {detail}")


def test_3_dual_slope_matches_central_difference():
    rng = random.Random(3)
    spec, h = LatticeSpec(10), 1e-6
    t0 = time.perf_counter()
    matches = resampled = 0
    for _ in range(1000):
        while True:
            quote = OptionQuote(rng.uniform(50, 150), rng.uniform(50, 150), rng.uniform(0.05, 2.0),
                                rng.uniform(0.0, 0.08))
            sigma = rng.uniform(0.05, 1.0)
            if probabilities_valid(quote.rate, quote.maturity / 10, sigma - h) \
                    and not crosses_kink(quote, sigma - h, sigma + h, 10):
                break
            resampled += 1
        ad = price_lattice(quote, Dual(sigma, 1.0), spec).deriv
        fd = central_difference_derivative(quote, spec, sigma, h)
        matches += abs(ad - fd) <= 1e-5
    elapsed = time.perf_counter() - t0
    report(3, matches >= 995 and elapsed < 10.0,
           f"{matches}/1000 within 1e-5 ({resampled} kink or invalid draws resampled), {elapsed:.2f}s")


def test_4_iterations_and_parallel_determinism():
    worst = 0
    grid = itertools.product([round(0.1 + 0.04 * k, 2) for k in range(9)], (0.8, 1.0, 1.2), (0.25, 1.0))
    all_converged = True
    for sigma, moneyness, maturity in grid:
        q = OptionQuote(100 * moneyness, 100.0, maturity, 0.0)
        r = solve_implied_vol(q.with_price(price_lattice(q, sigma)))
        all_converged &= r.status is Status.CONVERGED
        worst = max(worst, r.iterations)

    records = [
        QuoteRecord(START, START + dt.timedelta(days=90), q.quote.spot, q.quote.strike, q.quote.market_price,
                    0.0, q.true_sigma)
        for q in synthetic_quotes(3, (90.0, 100.0, 110.0))
    ]
    outputs = []
    for jobs in (1, 8):
        buf = io.StringIO()
        write_results(run_batch(records, parallelism=jobs).per_quote, buf)
        outputs.append(buf.getvalue())
    identical = outputs[0] == outputs[1]
    report(4, all_converged and worst <= 15 and identical,
           f"54 grid points, max iterations {worst}; jobs 1 vs 8 identical: {identical} ({len(records)} rows)")


def test_5_failure_taxonomy():
    below_min = solve_implied_vol(OptionQuote(110.0, 100.0, 0.25, 0.0, 0.0))
    negative_quote = OptionQuote(105.0, 100.0, 0.1, 0.0, 2.5)
    negative = solve_implied_vol(negative_quote)
    good = OptionQuote(100.0, 100.0, 0.25, 0.0)
    good = good.with_price(price_lattice(good, 0.3))
    records = [
        QuoteRecord(START, START + dt.timedelta(days=round(q.maturity * 365)), q.spot, q.strike,
                    q.market_price, 0.0, 0.3)
        for q in (good, negative_quote)
    ]
    batch = run_batch(records)
    statuses = [r.status for r in batch.per_quote]
    in_scatter = [p for p in scatter_points(batch.per_quote) if p[1] < 0]
    ok = (
        below_min.status is not Status.CONVERGED
        and negative.status is Status.CONVERGED_NEGATIVE
        and negative.implied_vol < 0
        and statuses == ["Converged", "ConvergedNegative"]
        and not in_scatter
        and batch.summary.count_negative == 1
        and batch.summary.count_total == 2
    )
    report(5, ok, f"zero price ITM -> {below_min.status}; below-intrinsic -> {negative.status} "
                  f"(sigma {negative.implied_vol:.6f}); scatter {len(scatter_points(batch.per_quote))} "
                  f"point(s), summary count_negative {batch.summary.count_negative}")


def test_6_market_like_pipeline():
    text = resources.files("binomial_iv").joinpath("data/market_like.csv").read_text()
    records, diagnostics = parse_quotes(text)
    batch = run_batch(records)
    buf = io.StringIO()
    write_results(batch.per_quote, buf)
    rows, bad_rows = read_results(buf.getvalue())

    scatter, hist = io.StringIO(), io.StringIO()
    write_scatter(scatter_points(rows), scatter)
    write_histogram(histogram(hist_errors(rows), 20), hist)
    scatter_lines = scatter.getvalue().splitlines()
    hist_lines = hist.getvalue().splitlines()
    schema_ok = (
        scatter_lines[0] == "reference_iv,binomial_iv"
        and all(len(line.split(",")) == 2 and all(float(v) > 0 for v in line.split(",")) for line in scatter_lines[1:])
        and hist_lines[0] == "bin_lower,bin_upper,count"
        and sum(int(line.split(",")[2]) for line in hist_lines[1:]) == len(hist_errors(rows))
    )
    s = batch.summary
    share = s.count_converged / s.count_total
    report(6, len(records) == 200 and not diagnostics and not bad_rows and share >= 0.95 and schema_ok,
           f"{s.count_converged}/{s.count_total} Converged, mean signed error {s.mean_error:+.4f}, "
           f"underestimated {s.underestimate_fraction:.0%}")


def test_7_throughput():
    quotes = synthetic_quotes(31, (80.0, 90.0, 95.0, 100.0, 105.0, 110.0, 115.0, 120.0, 130.0, 140.0))[:10_000]
    records = [
        QuoteRecord(START, START + dt.timedelta(days=90), q.quote.spot, q.quote.strike, q.quote.market_price,
                    0.0, q.true_sigma)
        for q in quotes
    ]
    t0 = time.perf_counter()
    batch = run_batch(records)
    elapsed = time.perf_counter() - t0
    report(7, len(records) == 10_000 and elapsed < 10.0,
           f"{len(records)} quotes in {elapsed:.2f}s on one process, {batch.summary.count_converged} Converged")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
