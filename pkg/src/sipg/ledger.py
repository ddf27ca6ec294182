"""Flow ledger: every quantity the platform records, keyed and auditable.

Keys are (year, iteration, node, series) where series is either a
published attribute key (see fom.flow_key) or a sector-internal key.
Values are finite; only the currency series may go negative.  Writing
the same key twice is an error, which catches double-recording bugs and
keeps merged federated slices honest.
"""

from __future__ import annotations

import math
from typing import Iterator, Mapping

from sipg import fom

Key = tuple[int, int, str, str]


class LedgerError(ValueError):
    pass


_SIGNED = tuple(k for k in fom.ALL_KEYS if k.endswith("currency_flow"))


class FlowLedger:
    def __init__(self, iterations_per_year: int):
        if iterations_per_year < 1:
            raise LedgerError("iterations_per_year must be at least 1")
        self.iterations_per_year = iterations_per_year
        self._data: dict[Key, float] = {}

    def __len__(self) -> int:
        return len(self._data)

    def record(self, year: int, iteration: int, node: str, series: str,
               value: float) -> None:
        if series not in fom.ALL_KEYS:
            raise LedgerError(f"unknown series {series!r}")
        if not (1 <= iteration <= self.iterations_per_year):
            raise LedgerError(f"iteration {iteration} outside 1..{self.iterations_per_year}")
        v = float(value)
        if not math.isfinite(v):
            raise LedgerError(f"non-finite value for {series} at {year}/{node}")
        if v < 0.0 and series not in _SIGNED:
            if v > -1e-9:  # solver noise on a zero flow
                v = 0.0
            else:
                raise LedgerError(f"negative quantity {v} for {series} at {year}/{node}")
        key = (year, iteration, node, series)
        if key in self._data:
            raise LedgerError(f"duplicate record for {key}")
        self._data[key] = v

    def get(self, year: int, iteration: int, node: str, series: str,
            default: float = 0.0) -> float:
        return self._data.get((year, iteration, node, series), default)

    def annual(self, year: int, node: str, series: str, default: float = 0.0) -> float:
        """Final-iteration value: the committed figure for the year."""
        return self.get(year, self.iterations_per_year, node, series, default)

    def items(self) -> Iterator[tuple[Key, float]]:
        return iter(sorted(self._data.items()))

    def merge(self, other: "FlowLedger") -> None:
        """Union with another slice; conflicting values are an error."""
        if other.iterations_per_year != self.iterations_per_year:
            raise LedgerError("iteration counts differ between slices")
        for key, value in other._data.items():
            if key in self._data:
                if self._data[key] != value:
                    raise LedgerError(f"conflicting values for {key}")
                continue
            self._data[key] = value

    def equals(self, other: "FlowLedger") -> bool:
        return self.iterations_per_year == other.iterations_per_year \
            and self._data == other._data

    def copy(self) -> "FlowLedger":
        out = FlowLedger(self.iterations_per_year)
        out._data = dict(self._data)
        return out

    def to_rows(self) -> list[tuple[int, int, str, str, float]]:
        return [(y, k, n, s, v) for (y, k, n, s), v in self.items()]


def capital_by_year(ledger: FlowLedger, node_ids, year: int) -> float:
    """Total capital charged across all sectors in one year, $."""
    total = 0.0
    for node in node_ids:
        for series in ("agriculture.capital_expenses", "water.capital_expenses",
                       "petroleum.capital_expenses", "electrical.capital_expenses"):
            total += ledger.annual(year, node, series)
    return total


def budget_violation_years(ledger: FlowLedger, node_ids, budget_limit: float,
                           years) -> tuple[int, ...]:
    """Years whose total capital exceeds the annual budget (soft constraint)."""
    return tuple(y for y in years
                 if capital_by_year(ledger, node_ids, y) > budget_limit)


def currency_trace(ledger: FlowLedger, node_ids, years) -> dict[int, float]:
    """Cumulative national currency stock after each year (all sectors)."""
    out = {}
    total = 0.0
    for y in years:
        for node in node_ids:
            for series in ("agriculture.currency_flow", "water.currency_flow",
                           "petroleum.currency_flow", "electrical.currency_flow"):
                total += ledger.annual(y, node, series)
        out[y] = total
    return out
