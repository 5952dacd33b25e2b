"""Apply a 0-1 subsampling design to a stream of covariate values."""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator, TextIO

from .design import SubsamplingDesign
from .distributions import DomainError

__all__ = [
    "MalformedRecordError",
    "SubsampleStats",
    "acceptance_probability",
    "subsample_stream",
    "subsample_csv",
]


class MalformedRecordError(ValueError):
    def __init__(self, line: int, text):
        super().__init__(f"line {line}: cannot parse {text!r} as a number")
        self.line = line


@dataclass
class SubsampleStats:
    n_total: int = 0
    n_accepted: int = 0
    n_malformed: int = 0
    expected_rate: float = 0.0
    per_interval_counts: list = field(default_factory=list)
    interval_masses: list = field(default_factory=list)
    empty_input: bool = False

    @property
    def empirical_rate(self) -> float:
        return self.n_accepted / self.n_total if self.n_total else 0.0

    @property
    def ks_note(self) -> float:
        """Largest gap between empirical and design mass over the support intervals."""
        if not self.n_total:
            return 0.0
        return max(
            (abs(c / self.n_total - m) for c, m in zip(self.per_interval_counts, self.interval_masses)),
            default=0.0,
        )

    def merge(self, other: "SubsampleStats") -> "SubsampleStats":
        """Combine counts of two shards processed with the same design."""
        return SubsampleStats(
            self.n_total + other.n_total,
            self.n_accepted + other.n_accepted,
            self.n_malformed + other.n_malformed,
            self.expected_rate,
            [a + b for a, b in zip(self.per_interval_counts, other.per_interval_counts)],
            list(self.interval_masses),
            self.empty_input and other.empty_input,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["empirical_rate"] = self.empirical_rate
        d["ks_note"] = self.ks_note
        return d


def acceptance_probability(design: SubsamplingDesign, x: float) -> float:
    """1.0 when ``x`` lies in the (closed) support, else 0.0."""
    return design.acceptance_probability(x)


class _Locator:
    """Index of the support interval containing ``x``, or -1."""

    def __init__(self, design):
        self.lows = [lo for lo, _ in design.support]
        self.highs = [hi for _, hi in design.support]

    def __call__(self, x):
        i = bisect.bisect_right(self.lows, x) - 1
        if i >= 0 and x <= self.highs[i]:
            return i
        return -1


def subsample_stream(
    records: Iterable,
    design: SubsamplingDesign,
    stats: SubsampleStats | None = None,
    on_error: str = "abort",
    key=None,
    first_line: int = 1,
) -> Iterator:
    """Yield the accepted records in input order.

    ``key`` extracts the covariate text or number from a record (identity by
    default).  ``stats`` is filled in while the generator is consumed.  With
    ``on_error="skip"`` malformed records are counted and dropped; with
    ``"abort"`` a :class:`MalformedRecordError` carrying the record number
    (counted from ``first_line``) is raised.
    """
    if on_error not in ("abort", "skip"):
        raise DomainError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    if stats is None:
        stats = SubsampleStats()
    stats.expected_rate = design.alpha
    stats.interval_masses = design.interval_masses()
    stats.per_interval_counts = [0] * len(design.support)
    locate = _Locator(design)
    counts = stats.per_interval_counts
    for lineno, rec in enumerate(records, start=first_line):
        raw = key(rec) if key is not None else rec
        try:
            x = float(raw)
            if math.isnan(x):
                raise ValueError
        except (TypeError, ValueError):
            if on_error == "abort":
                raise MalformedRecordError(lineno, raw) from None
            stats.n_malformed += 1
            continue
        stats.n_total += 1
        i = locate(x)
        if i >= 0:
            counts[i] += 1
            stats.n_accepted += 1
            yield rec
    stats.empty_input = stats.n_total == 0


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def subsample_csv(
    src: TextIO,
    dst: TextIO,
    design: SubsamplingDesign,
    column: str | int = 0,
    on_error: str = "abort",
) -> SubsampleStats:
    """Stream a CSV file through the design, writing accepted rows to ``dst``.

    A header is assumed when the selected field of the first row is not
    numeric; it is copied to the output.  ``column`` is a header name or a
    0-based index.
    """
    reader = csv.reader(src)
    writer = csv.writer(dst, lineterminator="\n")
    stats = SubsampleStats()
    first = next(reader, None)
    if first is None:
        for _ in subsample_stream([], design, stats, on_error):
            pass
        return stats

    idx = None
    if isinstance(column, int) or (isinstance(column, str) and column.lstrip("-").isdigit()):
        idx = int(column)
    header = None
    probe = first[idx] if idx is not None and -len(first) <= idx < len(first) else None
    if idx is None or (probe is not None and not _is_number(probe.strip())):
        header = first
        if idx is None:
            try:
                idx = [h.strip() for h in header].index(column)
            except ValueError:
                raise DomainError(f"column {column!r} not found in header {header}") from None
    if header is not None:
        writer.writerow(header)
        rows, first_line = reader, 2
    else:
        rows, first_line = _chain_first(first, reader), 1

    def field_of(row):
        try:
            return row[idx].strip()
        except IndexError:
            return None

    for row in subsample_stream(rows, design, stats, on_error, key=field_of, first_line=first_line):
        writer.writerow(row)
    return stats


def _chain_first(first, rest):
    yield first
    yield from rest
