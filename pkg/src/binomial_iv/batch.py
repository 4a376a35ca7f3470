"""Dataset-scale implied volatility runs and the summaries behind the plots."""

from __future__ import annotations

import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import partial
from typing import IO, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .blackscholes import PriceOutOfBand, bs_implied_vol
from .ingest import QuoteRecord, ResultRow, to_quote
from .lattice import LatticeSpec
from .solver import SolverConfig, Status, solve_implied_vol

__all__ = [
    "BatchReport",
    "Summary",
    "histogram",
    "hist_errors",
    "run_batch",
    "scatter_points",
    "solve_record",
    "summarize",
]

CONVERGED = Status.CONVERGED.value
NEGATIVE = Status.CONVERGED_NEGATIVE.value


@dataclass(frozen=True)
class Summary:
    count_total: int
    count_converged: int
    count_negative: int
    count_failed: int
    count_compared: int
    mean_error: Optional[float]
    median_error: Optional[float]
    std_error: Optional[float]
    underestimate_fraction: Optional[float]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


@dataclass(frozen=True)
class BatchReport:
    per_quote: List[ResultRow]
    summary: Summary


def _reference_iv(record: QuoteRecord) -> Optional[float]:
    if record.reference_iv is not None:
        return record.reference_iv
    try:
        return bs_implied_vol(to_quote(record))
    except (PriceOutOfBand, ArithmeticError):
        return None


def solve_record(record: QuoteRecord, spec: LatticeSpec, config: SolverConfig) -> ResultRow:
    """Solve one quote; the reference IV is taken from the record or backed out of Black-Scholes."""
    result = solve_implied_vol(to_quote(record), spec, config)
    return ResultRow(
        quote_date=record.quote_date,
        expiry_date=record.expiry_date,
        spot=record.spot,
        strike=record.strike,
        option_price=record.option_price,
        reference_iv=_reference_iv(record),
        binomial_iv=result.implied_vol,
        status=result.status.value,
        iterations=result.iterations,
        residual=result.final_residual,
    )


def run_batch(
    records: Sequence[QuoteRecord],
    spec: LatticeSpec = LatticeSpec(),
    config: SolverConfig = SolverConfig(),
    parallelism: int = 1,
) -> BatchReport:
    """Solve every record and summarize.

    Rows come back in input order.  With ``parallelism > 1`` the quotes are
    spread over worker processes; since each solve is a pure function of its
    record the output does not depend on the worker count.
    """
    if parallelism < 1:
        raise ValueError(f"parallelism must be >= 1, got {parallelism}")
    work = partial(solve_record, spec=spec, config=config)
    if parallelism == 1 or len(records) < 2:
        rows = [work(r) for r in records]
    else:
        chunk = max(1, math.ceil(len(records) / (4 * parallelism)))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            rows = list(pool.map(work, records, chunksize=chunk))
    return BatchReport(rows, summarize(rows))


def _compared(rows: Iterable[ResultRow]) -> List[ResultRow]:
    return [
        r for r in rows
        if r.status in (CONVERGED, NEGATIVE) and r.reference_iv is not None and r.binomial_iv is not None
    ]


def signed_errors(rows: Iterable[ResultRow], include_negative: bool) -> List[float]:
    """``binomial_iv - reference_iv`` over solved rows that have a reference."""
    return [
        r.binomial_iv - r.reference_iv
        for r in _compared(rows)
        if include_negative or r.status == CONVERGED
    ]


def summarize(rows: Sequence[ResultRow]) -> Summary:
    """Counts over all rows; error statistics over Converged rows with a reference IV.

    ``std_error`` is the population standard deviation.  With nothing to
    compare the statistics are ``None``.
    """
    converged = sum(r.status == CONVERGED for r in rows)
    negative = sum(r.status == NEGATIVE for r in rows)
    errors = signed_errors(rows, include_negative=False)
    if errors:
        mean = statistics.fmean(errors)
        median = statistics.median(errors)
        std = statistics.pstdev(errors)
        under = sum(e < 0 for e in errors) / len(errors)
    else:
        mean = median = std = under = None
    return Summary(
        count_total=len(rows),
        count_converged=converged,
        count_negative=negative,
        count_failed=len(rows) - converged - negative,
        count_compared=len(errors),
        mean_error=mean,
        median_error=median,
        std_error=std,
        underestimate_fraction=under,
    )


def scatter_points(rows: Iterable[ResultRow]) -> List[Tuple[float, float]]:
    """``(reference_iv, binomial_iv)`` for converged rows; negative IVs never appear."""
    return [(r.reference_iv, r.binomial_iv) for r in _compared(rows) if r.status == CONVERGED]


def hist_errors(rows: Iterable[ResultRow]) -> List[float]:
    """Signed errors for the histogram, negative-IV rows included."""
    return signed_errors(rows, include_negative=True)


def histogram(values: Sequence[float], bin_count: int) -> List[Tuple[float, float, int]]:
    """Equal-width bins over ``[min, max]`` as ``(lower, upper, count)``.

    Bins are half-open except the last, which is closed.  If every value is
    the same the result is a single unit-width bin centred on it.
    """
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    if len(values) == 0:
        return []
    data = np.asarray(values, dtype=float)
    lo, hi = float(data.min()), float(data.max())
    if lo == hi:
        return [(lo - 0.5, lo + 0.5, len(data))]
    counts, edges = np.histogram(data, bins=bin_count, range=(lo, hi))
    return [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bin_count)]


def write_scatter(points: Iterable[Tuple[float, float]], out: IO[str]) -> None:
    out.write("reference_iv,binomial_iv\n")
    for ref, iv in points:
        out.write(f"{ref!r},{iv!r}\n")


def write_histogram(bins: Iterable[Tuple[float, float, int]], out: IO[str]) -> None:
    out.write("bin_lower,bin_upper,count\n")
    for lower, upper, count in bins:
        out.write(f"{lower!r},{upper!r},{count}\n")
