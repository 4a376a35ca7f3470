"""Command line front end.

Exit codes: 0 ok, 1 pricer error, 2 usage error, 3 solver did not converge,
4 I/O error, 5 malformed CSV header.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import List, Optional

from . import batch as batch_mod
from .blackscholes import BsInputs, InvalidInputs, bs_call_price
from .ingest import MalformedHeader, parse_quotes, read_results, write_diagnostics, write_results
from .lattice import DEFAULT_STEPS, InvalidQuote, LatticeSpec, OptionQuote, PricingError, price_lattice
from .simulate import GbmSpec, simulate_gbm
from .solver import RETRY_PRESET, SolverConfig, Status, solve_implied_vol

EXIT_OK = 0
EXIT_PRICER = 1
EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4
EXIT_SCHEMA = 5


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"not finite: {text!r}")
    return v


def _positive(text: str) -> float:
    v = _finite(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {v}")
    return v


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=_positive_int, default=DEFAULT_STEPS, help="lattice layers")
    p.add_argument("--x0", type=_finite, default=0.2, help="initial volatility guess")
    p.add_argument("--tol", type=_positive, default=1e-5,
                   help="stop when successive objective values differ by less than this")
    p.add_argument("--max-iter", type=_positive_int, default=100, help="Newton iteration cap")
    p.add_argument("--retries", type=_finite, nargs="*", default=None, metavar="SIGMA",
                   help="restart from these volatilities if the first attempt fails; "
                        f"with no values uses {' '.join(map(str, RETRY_PRESET))}")


def _solver_config(args) -> SolverConfig:
    if args.retries is None:
        retries = ()
    else:
        retries = tuple(args.retries) or RETRY_PRESET
    return SolverConfig(
        initial_sigma=args.x0, tolerance=args.tol, max_iterations=args.max_iter, retry_initials=retries
    )


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="binomial-iv",
        description="Binomial-lattice implied volatility via Newton-Raphson with dual-number derivatives.",
    )
    sub = parser.add_subparsers(dest="command", metavar="{price,iv,simulate,batch,report}")
    sub.required = True

    p = sub.add_parser("price", help="price a European call", formatter_class=fmt)
    p.add_argument("--spot", type=_finite, required=True)
    p.add_argument("--strike", type=_finite, required=True)
    p.add_argument("--maturity-years", type=_finite, required=True)
    p.add_argument("--rate", type=_finite, default=0.0)
    p.add_argument("--sigma", type=_finite, required=True)
    p.add_argument("--steps", type=_positive_int, default=DEFAULT_STEPS, help="lattice layers")
    p.add_argument("--model", choices=("lattice", "bs"), default="lattice")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("iv", help="implied volatility of one quote (JSON output)", formatter_class=fmt)
    p.add_argument("--spot", type=_finite, required=True)
    p.add_argument("--strike", type=_finite, required=True)
    p.add_argument("--maturity-years", type=_finite, required=True)
    p.add_argument("--rate", type=_finite, default=0.0)
    p.add_argument("--price", type=_finite, required=True, help="observed call price")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_iv)

    p = sub.add_parser("simulate", help="write a GBM price path as CSV", formatter_class=fmt)
    p.add_argument("--s0", type=_positive, default=100.0, help="initial price")
    p.add_argument("--mu", type=_finite, default=0.0, help="annual drift")
    p.add_argument("--sigma", type=_finite, default=0.2, help="annual volatility")
    p.add_argument("--days", type=_positive_int, default=90, help="horizon in days")
    p.add_argument("--steps-per-day", type=_positive_int, default=1)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("batch", help="solve every quote in a CSV", formatter_class=fmt)
    p.add_argument("--in", dest="input", required=True, help="quote CSV")
    p.add_argument("--out", required=True,
                   help="result CSV; OUT.summary.json and OUT.diagnostics.csv are written alongside")
    _add_solver_flags(p)
    p.add_argument("--default-rate", type=_finite, default=0.0,
                   help="rate for rows without one, e.g. the period's 10-year treasury yield")
    p.add_argument("--jobs", type=_positive_int, default=1, help="worker processes")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("report", help="scatter and histogram data from batch results", formatter_class=fmt)
    p.add_argument("--in", dest="input", required=True, help="result CSV from `batch`")
    p.add_argument("--out-prefix", required=True, help="writes PREFIX.scatter.csv and PREFIX.hist.csv")
    p.add_argument("--bins", type=_positive_int, default=20)
    p.set_defaults(func=cmd_report)
    return parser


def _err(msg: str) -> None:
    print(f"binomial-iv: {msg}", file=sys.stderr)


def cmd_price(args) -> int:
    try:
        quote = OptionQuote(args.spot, args.strike, args.maturity_years, args.rate)
        if args.model == "bs":
            price = bs_call_price(BsInputs.from_quote(quote, args.sigma))
        else:
            price = price_lattice(quote, args.sigma, LatticeSpec(args.steps))
    except (PricingError, InvalidQuote, InvalidInputs) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_PRICER
    print(f"{price:#.10g}")
    return EXIT_OK


def cmd_iv(args) -> int:
    try:
        quote = OptionQuote(args.spot, args.strike, args.maturity_years, args.rate, args.price)
    except InvalidQuote as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_PRICER
    result = solve_implied_vol(quote, LatticeSpec(args.steps), _solver_config(args))
    print(json.dumps(result.to_dict()))
    return EXIT_OK if result.status is Status.CONVERGED else EXIT_NOT_CONVERGED


def cmd_simulate(args) -> int:
    try:
        spec = GbmSpec(args.s0, args.mu, args.sigma, args.days, args.steps_per_day, args.seed)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    path = simulate_gbm(spec)
    try:
        with open(args.out, "w", newline="") as fh:
            fh.write("time_years,price\n")
            for t, s in zip(path.times, path.prices):
                fh.write(f"{t!r},{s!r}\n")
    except OSError as exc:
        _err(f"cannot write {args.out}: {exc}")
        return EXIT_IO
    return EXIT_OK


def cmd_batch(args) -> int:
    try:
        with open(args.input, newline="", encoding="utf-8", errors="replace") as fh:
            records, diagnostics = parse_quotes(fh, default_rate=args.default_rate)
    except MalformedHeader as exc:
        _err(f"MalformedHeader: {exc}")
        return EXIT_SCHEMA
    except OSError as exc:
        _err(f"cannot read {args.input}: {exc}")
        return EXIT_IO

    report = batch_mod.run_batch(records, LatticeSpec(args.steps), _solver_config(args), args.jobs)
    try:
        with open(args.out, "w", newline="") as fh:
            write_results(report.per_quote, fh)
        with open(f"{args.out}.summary.json", "w") as fh:
            fh.write(report.summary.to_json())
        with open(f"{args.out}.diagnostics.csv", "w", newline="") as fh:
            write_diagnostics(diagnostics, fh)
    except OSError as exc:
        _err(f"cannot write results: {exc}")
        return EXIT_IO
    for d in diagnostics:
        _err(f"line {d.row}: {d.reason}")
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        with open(args.input, newline="", encoding="utf-8", errors="replace") as fh:
            rows, diagnostics = read_results(fh)
    except MalformedHeader as exc:
        _err(f"MalformedHeader: {exc}")
        return EXIT_SCHEMA
    except OSError as exc:
        _err(f"cannot read {args.input}: {exc}")
        return EXIT_IO
    for d in diagnostics:
        _err(f"line {d.row}: {d.reason}")

    bins = batch_mod.histogram(batch_mod.hist_errors(rows), args.bins)
    try:
        with open(f"{args.out_prefix}.scatter.csv", "w", newline="") as fh:
            batch_mod.write_scatter(batch_mod.scatter_points(rows), fh)
        with open(f"{args.out_prefix}.hist.csv", "w", newline="") as fh:
            batch_mod.write_histogram(bins, fh)
    except OSError as exc:
        _err(f"cannot write report: {exc}")
        return EXIT_IO
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "simulate" and args.seed < 0:
        parser.error("--seed must be a non-negative integer")
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
