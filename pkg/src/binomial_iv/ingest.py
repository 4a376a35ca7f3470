"""CSV input/output for option quotes and batch results.

Quote files::

    quote_date,expiry_date,spot,strike,option_price[,rate][,reference_iv]

Dates are ISO ``YYYY-MM-DD``; ``rate`` falls back to a caller-supplied default
when the column or the cell is missing.  Maturities use ACT/365 fixed.

Result files::

    quote_date,expiry_date,spot,strike,option_price,reference_iv,binomial_iv,status,iterations,residual

Missing values are written as empty fields.  Floats are written with
``repr`` so a write/read cycle is exact.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
from dataclasses import dataclass
from typing import IO, Iterable, List, Optional, Sequence, Tuple, Union

from .lattice import OptionQuote

__all__ = [
    "DAYS_PER_YEAR",
    "MalformedHeader",
    "QUOTE_COLUMNS",
    "QuoteRecord",
    "RESULT_COLUMNS",
    "ResultRow",
    "RowDiagnostic",
    "parse_quotes",
    "read_results",
    "to_quote",
    "write_diagnostics",
    "write_quotes",
    "write_results",
]

DAYS_PER_YEAR = 365

REQUIRED_QUOTE_COLUMNS = ("quote_date", "expiry_date", "spot", "strike", "option_price")
OPTIONAL_QUOTE_COLUMNS = ("rate", "reference_iv")
QUOTE_COLUMNS = REQUIRED_QUOTE_COLUMNS + OPTIONAL_QUOTE_COLUMNS
RESULT_COLUMNS = (
    "quote_date",
    "expiry_date",
    "spot",
    "strike",
    "option_price",
    "reference_iv",
    "binomial_iv",
    "status",
    "iterations",
    "residual",
)

TextSource = Union[str, IO[str]]


class MalformedHeader(ValueError):
    """The header row is missing or does not match the expected column set."""


@dataclass(frozen=True)
class QuoteRecord:
    quote_date: dt.date
    expiry_date: dt.date
    spot: float
    strike: float
    option_price: float
    rate: Optional[float] = None
    reference_iv: Optional[float] = None

    def validate(self) -> Optional[str]:
        """Return the first invariant violation as a message, or ``None``."""
        if not self.expiry_date > self.quote_date:
            return f"expiry_date {self.expiry_date} is not after quote_date {self.quote_date}"
        for name in ("spot", "strike"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                return f"{name} must be finite and > 0, got {v!r}"
        if not (math.isfinite(self.option_price) and self.option_price >= 0):
            return f"option_price must be finite and >= 0, got {self.option_price!r}"
        if self.rate is not None and not math.isfinite(self.rate):
            return f"rate must be finite, got {self.rate!r}"
        if self.reference_iv is not None and not math.isfinite(self.reference_iv):
            return f"reference_iv must be finite, got {self.reference_iv!r}"
        return None

    @property
    def maturity(self) -> float:
        return (self.expiry_date - self.quote_date).days / DAYS_PER_YEAR


@dataclass(frozen=True)
class RowDiagnostic:
    row: int  # 1-based physical line number, header is line 1
    reason: str


def to_quote(record: QuoteRecord) -> OptionQuote:
    """Quote with ACT/365 maturity; a missing rate is treated as 0."""
    return OptionQuote(
        spot=record.spot,
        strike=record.strike,
        maturity=record.maturity,
        rate=0.0 if record.rate is None else record.rate,
        market_price=record.option_price,
    )


# -- parsing -----------------------------------------------------------------


def _read_text(source: TextSource) -> str:
    return source if isinstance(source, str) else source.read()


def _split(line: str) -> List[str]:
    # one physical line per record; embedded newlines are not part of the schema
    return next(csv.reader([line]), [])


def _header(lines: List[str], allowed: Sequence[str], required: Sequence[str]):
    """Locate the header (first non-blank line) and map column name -> index."""
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            break
    else:
        raise MalformedHeader("input has no header row")
    try:
        names = [c.strip() for c in _split(line.lstrip("\ufeff"))]
    except csv.Error as exc:
        raise MalformedHeader(f"unreadable header: {exc}") from None
    if len(set(names)) != len(names):
        raise MalformedHeader(f"duplicate columns in header: {names}")
    unknown = [n for n in names if n not in allowed]
    missing = [n for n in required if n not in names]
    if unknown or missing:
        raise MalformedHeader(f"bad header {names}: unknown={unknown} missing={missing}")
    return lineno, {n: i for i, n in enumerate(names)}


def _float(text: str, name: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ValueError(f"{name}: not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"{name}: not finite: {text!r}")
    return v


def _opt_float(text: str, name: str) -> Optional[float]:
    text = text.strip()
    return None if text == "" else _float(text, name)


def _date(text: str, name: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text.strip())
    except ValueError:
        raise ValueError(f"{name}: not an ISO date: {text!r}") from None


def parse_quotes(
    source: TextSource, default_rate: float = 0.0
) -> Tuple[List[QuoteRecord], List[RowDiagnostic]]:
    """Parse a quote CSV into validated records plus per-row diagnostics.

    Only a bad header raises (:class:`MalformedHeader`); every row-level
    problem becomes a :class:`RowDiagnostic` and parsing carries on.
    Blank lines are skipped.
    """
    lines = _read_text(source).splitlines()
    header_line, cols = _header(lines, QUOTE_COLUMNS, REQUIRED_QUOTE_COLUMNS)
    records: List[QuoteRecord] = []
    diagnostics: List[RowDiagnostic] = []
    for lineno, line in enumerate(lines[header_line:], start=header_line + 1):
        if not line.strip():
            continue
        try:
            fields = _split(line)
            if len(fields) != len(cols):
                raise ValueError(f"expected {len(cols)} fields, got {len(fields)}")
            get = lambda name: fields[cols[name]]  # noqa: E731
            rate = _opt_float(get("rate"), "rate") if "rate" in cols else None
            record = QuoteRecord(
                quote_date=_date(get("quote_date"), "quote_date"),
                expiry_date=_date(get("expiry_date"), "expiry_date"),
                spot=_float(get("spot"), "spot"),
                strike=_float(get("strike"), "strike"),
                option_price=_float(get("option_price"), "option_price"),
                rate=default_rate if rate is None else rate,
                reference_iv=(
                    _opt_float(get("reference_iv"), "reference_iv") if "reference_iv" in cols else None
                ),
            )
        except (ValueError, csv.Error) as exc:
            diagnostics.append(RowDiagnostic(lineno, str(exc)))
            continue
        problem = record.validate()
        if problem is not None:
            diagnostics.append(RowDiagnostic(lineno, problem))
            continue
        records.append(record)
    return records, diagnostics


# -- writing -----------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_quotes(records: Iterable[QuoteRecord], out: IO[str]) -> None:
    """Write records with every column; empty cells for missing optionals."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(QUOTE_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.quote_date.isoformat(),
                r.expiry_date.isoformat(),
                _fmt(r.spot),
                _fmt(r.strike),
                _fmt(r.option_price),
                _fmt(r.rate),
                _fmt(r.reference_iv),
            ]
        )


def write_diagnostics(diagnostics: Iterable[RowDiagnostic], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(("row", "reason"))
    for d in diagnostics:
        writer.writerow((d.row, d.reason))


@dataclass(frozen=True)
class ResultRow:
    quote_date: dt.date
    expiry_date: dt.date
    spot: float
    strike: float
    option_price: float
    reference_iv: Optional[float]
    binomial_iv: Optional[float]
    status: str
    iterations: int
    residual: Optional[float]

    def as_fields(self) -> List[str]:
        return [
            self.quote_date.isoformat(),
            self.expiry_date.isoformat(),
            _fmt(self.spot),
            _fmt(self.strike),
            _fmt(self.option_price),
            _fmt(self.reference_iv),
            _fmt(self.binomial_iv),
            self.status,
            str(self.iterations),
            _fmt(self.residual),
        ]


def write_results(rows: Iterable[ResultRow], out: IO[str]) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RESULT_COLUMNS)
    for row in rows:
        writer.writerow(row.as_fields())


def read_results(source: TextSource) -> Tuple[List[ResultRow], List[RowDiagnostic]]:
    """Parse a result CSV written by :func:`write_results`."""
    lines = _read_text(source).splitlines()
    header_line, cols = _header(lines, RESULT_COLUMNS, RESULT_COLUMNS)
    rows: List[ResultRow] = []
    diagnostics: List[RowDiagnostic] = []
    for lineno, line in enumerate(lines[header_line:], start=header_line + 1):
        if not line.strip():
            continue
        try:
            fields = _split(line)
            if len(fields) != len(cols):
                raise ValueError(f"expected {len(cols)} fields, got {len(fields)}")
            get = lambda name: fields[cols[name]]  # noqa: E731
            rows.append(
                ResultRow(
                    quote_date=_date(get("quote_date"), "quote_date"),
                    expiry_date=_date(get("expiry_date"), "expiry_date"),
                    spot=_float(get("spot"), "spot"),
                    strike=_float(get("strike"), "strike"),
                    option_price=_float(get("option_price"), "option_price"),
                    reference_iv=_opt_float(get("reference_iv"), "reference_iv"),
                    binomial_iv=_opt_float(get("binomial_iv"), "binomial_iv"),
                    status=get("status").strip(),
                    iterations=int(get("iterations")),
                    residual=_opt_float(get("residual"), "residual"),
                )
            )
        except (ValueError, csv.Error) as exc:
            diagnostics.append(RowDiagnostic(lineno, str(exc)))
    return rows, diagnostics


def dumps_quotes(records: Iterable[QuoteRecord]) -> str:
    buf = io.StringIO()
    write_quotes(records, buf)
    return buf.getvalue()
