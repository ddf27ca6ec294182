"""Static flow-file exchange for decoupled (asynchronous) sessions.

A flow document is plain text: a first line tagging the format version
and the exporting role, a header row, then one CSV row per (year,
className, objectName, attribute, value, units) with annual values from
the final iteration.  Importing the counterpart roles' documents builds
boundary overrides for a local run: the exporter's classes become
static series while everything else stays live.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from sipg import fom
from sipg.engine import BoundaryOverrides
from sipg.ledger import FlowLedger
from sipg.scenario import Scenario

FORMAT_NAME = "sipg-flows"
FORMAT_VERSION = 1
HEADER = ("year", "className", "objectName", "attribute", "value", "units")

ERR_MALFORMED = "malformed"
ERR_VERSION_MISMATCH = "version_mismatch"


class ExchangeError(ValueError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class FlowsDocument:
    role: str
    version: int
    # (className, attribute, objectName) -> year -> value
    series: Mapping[tuple[str, str, str], Mapping[int, float]]


def export_flows_text(ledger: FlowLedger, scenario: Scenario, role: str) -> str:
    """Render every published attribute series over the whole horizon."""
    if role not in fom.SECTOR_ROLES:
        raise ValueError(f"unknown exporting role {role!r}")
    out = io.StringIO()
    out.write(f"{FORMAT_NAME} {FORMAT_VERSION} {role}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(HEADER)
    for (cls, attr) in sorted(fom.ATTRIBUTES):
        units = fom.ATTRIBUTES[(cls, attr)]
        key = fom.flow_key(cls, attr)
        for node in scenario.node_ids:
            for year in scenario.horizon.years:
                value = ledger.annual(year, node, key)
                writer.writerow((year, cls, node, attr, repr(value), units))
    return out.getvalue()


def write_flows(path, ledger: FlowLedger, scenario: Scenario, role: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(export_flows_text(ledger, scenario, role))


def parse_flows_text(text: str) -> FlowsDocument:
    lines = text.splitlines()
    if not lines:
        raise ExchangeError(ERR_MALFORMED, "empty flow document")
    tag = lines[0].split()
    if len(tag) != 3 or tag[0] != FORMAT_NAME:
        raise ExchangeError(ERR_MALFORMED,
                            f"first line must be '{FORMAT_NAME} <version> "
                            f"<role>', got {lines[0]!r}")
    try:
        version = int(tag[1])
    except ValueError:
        raise ExchangeError(ERR_MALFORMED, f"unreadable version {tag[1]!r}")
    if version != FORMAT_VERSION:
        raise ExchangeError(ERR_VERSION_MISMATCH,
                            f"flow format version {version} not supported "
                            f"(expected {FORMAT_VERSION})")
    role = tag[2]
    if role not in fom.SECTOR_ROLES:
        raise ExchangeError(ERR_MALFORMED, f"unknown exporting role {role!r}")
    rows = list(csv.reader(lines[1:]))
    if not rows or tuple(rows[0]) != HEADER:
        raise ExchangeError(ERR_MALFORMED,
                            f"header row must be {','.join(HEADER)!r}")
    series: dict[tuple[str, str, str], dict[int, float]] = {}
    for index, row in enumerate(rows[1:], start=3):
        if len(row) != len(HEADER):
            raise ExchangeError(ERR_MALFORMED,
                                f"line {index}: expected {len(HEADER)} fields")
        year_text, cls, node, attr, value_text, units = row
        if (cls, attr) not in fom.ATTRIBUTES:
            raise ExchangeError(ERR_MALFORMED,
                                f"line {index}: unknown attribute {attr!r} "
                                f"on {cls!r}")
        if units != fom.ATTRIBUTES[(cls, attr)]:
            raise ExchangeError(ERR_MALFORMED,
                                f"line {index}: units {units!r} do not match "
                                f"{fom.ATTRIBUTES[(cls, attr)]!r}")
        try:
            year = int(year_text)
            value = float(value_text)
        except ValueError:
            raise ExchangeError(ERR_MALFORMED,
                                f"line {index}: unreadable year or value")
        if not math.isfinite(value):
            raise ExchangeError(ERR_MALFORMED,
                                f"line {index}: value must be finite")
        bucket = series.setdefault((cls, attr, node), {})
        if year in bucket:
            raise ExchangeError(ERR_MALFORMED,
                                f"line {index}: duplicate row for {attr!r} "
                                f"{node!r} year {year}")
        bucket[year] = value
    return FlowsDocument(role=role, version=version, series=series)


def read_flows(path) -> FlowsDocument:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_flows_text(handle.read())


def boundary_overrides(documents: Sequence[FlowsDocument],
                       scenario: Scenario) -> BoundaryOverrides:
    """Combine counterpart flow documents into engine boundary overrides.

    Each document contributes only the classes its exporting role owns,
    and must cover every node and horizon year for those classes.
    """
    seen_roles: set[str] = set()
    classes: set[str] = set()
    values: dict[tuple[str, str, str], dict[int, float]] = {}
    for doc in documents:
        if doc.role in seen_roles:
            raise ExchangeError(ERR_MALFORMED,
                                f"two flow documents claim role {doc.role!r}")
        seen_roles.add(doc.role)
        for cls in fom.ROLE_CLASSES[doc.role]:
            classes.add(cls)
            for (c, attr) in sorted(fom.ATTRIBUTES):
                if c != cls:
                    continue
                for node in scenario.node_ids:
                    bucket = doc.series.get((cls, attr, node))
                    for year in scenario.horizon.years:
                        if bucket is None or year not in bucket:
                            raise ExchangeError(
                                ERR_MALFORMED,
                                f"missing {attr!r} series for {node!r} "
                                f"year {year} in {doc.role!r} flows")
                    values[(cls, attr, node)] = dict(bucket)
    return BoundaryOverrides(classes=frozenset(classes), values=values)
