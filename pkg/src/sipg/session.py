"""Session lifecycle: decision logging, process metrics, persistence, replay.

A session log is an append-only record of every design decision made
during a planning session: elements added, edited or removed, the
initialize and execute requests, and file exchanges in decoupled mode.
Each execution event stores the final objective snapshot it produced,
so a closed log plus the scenario document is enough to re-run the
whole session and audit every number in it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
import zipfile
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from sipg import fom
from sipg.engine import NO_OVERRIDES, SimulationResult, run_simulation
from sipg.ledger import FlowLedger
from sipg.objectives import ObjectiveReport
from sipg.scenario import Scenario, ScenarioError, build_scenario, parse_plan
from sipg.federation.coordinator import VARIANTS
from sipg.federation.exchange import boundary_overrides, parse_flows_text
from sipg.federation.federate import MODEL_CLASSES
from sipg.federation.protocol import canonical_json

FORMAT_VERSION = 1

EVENT_ELEMENT_ADDED = "element_added"
EVENT_ELEMENT_EDITED = "element_edited"
EVENT_ELEMENT_REMOVED = "element_removed"
EVENT_INITIALIZE = "initialize"
EVENT_EXECUTE = "execute"
EVENT_EXPORT_FLOWS = "export_flows"
EVENT_IMPORT_FLOWS = "import_flows"

EVENT_KINDS = frozenset({
    EVENT_ELEMENT_ADDED, EVENT_ELEMENT_EDITED, EVENT_ELEMENT_REMOVED,
    EVENT_INITIALIZE, EVENT_EXECUTE, EVENT_EXPORT_FLOWS, EVENT_IMPORT_FLOWS,
})

MODE_JOINT = "joint"
MODE_LOCAL = "local"


class SessionError(RuntimeError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def scenario_digest(document: Mapping) -> str:
    """Content hash binding a log to the scenario it was played on."""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


def report_doc(report: ObjectiveReport) -> dict:
    return {
        "year": report.year,
        "foodSecurity": report.food_security,
        "aquiferSecurity": report.aquifer_security,
        "reservoirSecurity": report.reservoir_security,
        "financialSecurity": dict(report.financial_security),
        "politicalPower": dict(report.political_power),
        "jointObjective": report.joint_objective,
        "budgetViolations": list(report.budget_violations),
    }


def report_from_doc(doc: Mapping) -> ObjectiveReport:
    return ObjectiveReport(
        year=int(doc["year"]),
        food_security=float(doc["foodSecurity"]),
        aquifer_security=float(doc["aquiferSecurity"]),
        reservoir_security=float(doc["reservoirSecurity"]),
        financial_security=dict(doc["financialSecurity"]),
        political_power=dict(doc["politicalPower"]),
        joint_objective=float(doc["jointObjective"]),
        budget_violations=tuple(int(y) for y in doc["budgetViolations"]))


class SessionLog:
    """Append-only, strictly timestamp-ordered event record."""

    def __init__(self, session_id: str, variant: str, document: Mapping,
                 clock: Callable[[], float] = time.time):
        if variant not in VARIANTS:
            raise SessionError("malformed", f"unknown variant {variant!r}")
        self.session_id = session_id
        self.variant = variant
        self.scenario_digest = scenario_digest(document)
        self.events: list[dict] = []
        self.closed = False
        self._clock = clock

    # --- writing -----------------------------------------------------

    def record(self, kind: str, timestamp: float | None = None,
               **payload: Any) -> dict:
        """Append one event; auto timestamps are nudged forward on ties,
        explicit ones must strictly increase."""
        if self.closed:
            raise SessionError("closed", "session log is closed")
        if kind not in EVENT_KINDS:
            raise SessionError("malformed", f"unknown event kind {kind!r}")
        last = self.events[-1]["timestamp"] if self.events else -math.inf
        if timestamp is None:
            timestamp = self._clock()
            if timestamp <= last:
                timestamp = math.nextafter(last, math.inf)
        elif timestamp <= last:
            raise SessionError(
                "time_regression",
                f"timestamp {timestamp!r} does not advance past {last!r}")
        event = {"seq": len(self.events), "timestamp": float(timestamp),
                 "kind": kind, **payload}
        self.events.append(event)
        return event

    def record_execute(self, report: ObjectiveReport, mode: str = MODE_JOINT,
                       role: str | None = None,
                       timestamp: float | None = None) -> dict:
        """Every execution event carries the snapshot it produced."""
        if mode not in (MODE_JOINT, MODE_LOCAL):
            raise SessionError("malformed", f"unknown execution mode {mode!r}")
        if mode == MODE_LOCAL and role not in fom.SECTOR_ROLES:
            raise SessionError("malformed",
                               "local executions must name a sector role")
        return self.record(EVENT_EXECUTE, timestamp=timestamp, mode=mode,
                           role=role, report=report_doc(report))

    def close(self) -> None:
        self.closed = True

    # --- reading -------------------------------------------------------

    @property
    def executions(self) -> list[dict]:
        return [e for e in self.events if e["kind"] == EVENT_EXECUTE]

    def final_plan(self, scenario: Scenario) -> tuple:
        """Plan elements in force after the last event, insertion ordered."""
        state, _imports = _walk(self.events, scenario, upto=len(self.events))
        return tuple(state.values())

    # --- persistence ----------------------------------------------------

    def to_text(self) -> str:
        header = {"kind": "session", "formatVersion": FORMAT_VERSION,
                  "sessionId": self.session_id, "variant": self.variant,
                  "scenarioDigest": self.scenario_digest}
        lines = [canonical_json(header)]
        lines.extend(canonical_json(e) for e in self.events)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "SessionLog":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise SessionError("malformed", "empty session log")
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise SessionError("malformed", f"unreadable header: {exc}")
        if not isinstance(header, dict) or header.get("kind") != "session":
            raise SessionError("malformed", "first line must be the session "
                                            "header")
        if header.get("formatVersion") != FORMAT_VERSION:
            raise SessionError("version_mismatch",
                               f"log format {header.get('formatVersion')!r} "
                               f"not supported")
        variant = header.get("variant")
        if variant not in VARIANTS:
            raise SessionError("malformed", f"unknown variant {variant!r}")
        log = cls.__new__(cls)
        log.session_id = str(header.get("sessionId", ""))
        log.variant = variant
        log.scenario_digest = str(header.get("scenarioDigest", ""))
        log.events = []
        log.closed = False
        log._clock = time.time
        last = -math.inf
        for index, line in enumerate(lines[1:], start=2):
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SessionError("malformed", f"line {index}: {exc}")
            if not isinstance(event, dict) or "kind" not in event \
                    or "timestamp" not in event:
                raise SessionError("malformed",
                                   f"line {index}: not an event record")
            if event["kind"] not in EVENT_KINDS:
                raise SessionError("malformed",
                                   f"line {index}: unknown event kind "
                                   f"{event['kind']!r}")
            if event["timestamp"] <= last:
                raise SessionError("time_regression",
                                   f"line {index}: timestamps must strictly "
                                   f"increase")
            if event["kind"] == EVENT_EXECUTE and "report" not in event:
                raise SessionError("malformed",
                                   f"line {index}: execution events must "
                                   f"carry their objective snapshot")
            last = event["timestamp"]
            log.events.append(event)
        return log

    @classmethod
    def read(cls, path) -> "SessionLog":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())


# --- process metrics -------------------------------------------------------

@dataclass(frozen=True)
class ProcessMetrics:
    num_exchanges: int
    simulations: Mapping[str, int]           # per sector role
    budget_violation_years: tuple[int, ...]
    final_report: ObjectiveReport | None


def compute_process_metrics(log: SessionLog) -> ProcessMetrics:
    """Variant-aware exchange and simulation counts.

    Synchronized variants count one exchange per joint execution; the
    decoupled variant counts a round only once every role has exported
    a fresh flow file.
    """
    executions = log.executions
    if log.variant == "2":
        exports = {role: 0 for role in fom.SECTOR_ROLES}
        for event in log.events:
            if event["kind"] == EVENT_EXPORT_FLOWS:
                role = event.get("role")
                if role in exports:
                    exports[role] += 1
        num_exchanges = min(exports.values())
    else:
        num_exchanges = len(executions)
    simulations = {
        role: sum(1 for e in executions
                  if e.get("mode", MODE_JOINT) == MODE_JOINT
                  or e.get("role") == role)
        for role in fom.SECTOR_ROLES}
    final = report_from_doc(executions[-1]["report"]) if executions else None
    violations = final.budget_violations if final else ()
    return ProcessMetrics(num_exchanges=num_exchanges, simulations=simulations,
                          budget_violation_years=violations,
                          final_report=final)


# --- replay ------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayResult:
    ledger: FlowLedger
    reports: tuple[ObjectiveReport, ...]


def _parse_element(scenario: Scenario, doc: Mapping, label: str):
    try:
        (element,) = parse_plan({"formatVersion": 1, "elements": [doc]},
                                scenario)
    except ScenarioError as exc:
        raise SessionError("malformed", f"{label}: {exc}")
    return element


def _field(event: Mapping, key: str, label: str):
    if key not in event:
        raise SessionError("malformed", f"{label}: missing field {key!r}")
    return event[key]


def _walk(events: Sequence[Mapping], scenario: Scenario, upto: int):
    """Plan state and per-role latest imports after `upto` events.

    Imports are keyed (importer, exporter): in decoupled sessions each
    role holds its own copy of the counterpart files it has loaded.
    """
    state: dict[str, Any] = {}
    imports: dict[tuple[str, str], Any] = {}
    for event in events[:upto]:
        kind = event["kind"]
        label = f"event {event.get('seq', '?')}"
        if kind == EVENT_ELEMENT_ADDED:
            element = _parse_element(scenario, _field(event, "element", label),
                                     label)
            if element.id in state:
                raise SessionError("malformed",
                                   f"{label}: element {element.id!r} "
                                   f"already present")
            state[element.id] = element
        elif kind == EVENT_ELEMENT_EDITED:
            element = _parse_element(scenario, _field(event, "element", label),
                                     label)
            if element.id not in state:
                raise SessionError("malformed",
                                   f"{label}: element {element.id!r} "
                                   f"not present")
            state[element.id] = element
        elif kind == EVENT_ELEMENT_REMOVED:
            element_id = _field(event, "elementId", label)
            if element_id not in state:
                raise SessionError("malformed",
                                   f"{label}: element {element_id!r} "
                                   f"not present")
            del state[element_id]
        elif kind == EVENT_IMPORT_FLOWS:
            importer = _field(event, "role", label)
            doc = parse_flows_text(_field(event, "flows", label))
            imports[(importer, doc.role)] = doc
    return state, imports


def _local_plan(state: Mapping, scenario: Scenario, role: str) -> tuple:
    sectors = MODEL_CLASSES[role].sectors
    return tuple(e for e in state.values()
                 if scenario.templates[e.template].sector in sectors)


def replay(log: SessionLog, document: Mapping) -> ReplayResult:
    """Re-run every execution in a log and verify its stored snapshot.

    Raises on a scenario that does not hash to the log's digest and on
    any snapshot the re-execution fails to reproduce exactly.
    """
    digest = scenario_digest(document)
    if digest != log.scenario_digest:
        raise SessionError("version_mismatch",
                           "scenario does not match the one this log was "
                           "recorded against")
    scenario = build_scenario(document)
    reports: list[ObjectiveReport] = []
    last: SimulationResult | None = None
    for index, event in enumerate(log.events):
        if event["kind"] != EVENT_EXECUTE:
            continue
        state, imports = _walk(log.events, scenario, upto=index)
        mode = event.get("mode", MODE_JOINT)
        if mode == MODE_LOCAL:
            role = event["role"]
            plan = _local_plan(state, scenario, role)
            docs = [imports[(role, r)] for r in fom.SECTOR_ROLES
                    if r != role and (role, r) in imports]
            overrides = boundary_overrides(docs, scenario)
        else:
            plan = tuple(state.values())
            overrides = NO_OVERRIDES
        result = run_simulation(scenario, plan, overrides)
        stored = report_from_doc(event["report"])
        if result.final_report != stored:
            raise SessionError(
                "replay_divergence",
                f"execution {len(reports)} does not reproduce its stored "
                f"snapshot")
        reports.append(result.final_report)
        last = result
    if last is None:
        last = run_simulation(scenario)
        reports.append(last.final_report)
    return ReplayResult(ledger=last.ledger, reports=tuple(reports))


# --- archive export ---------------------------------------------------------

OBJECTIVE_COLUMNS = (
    "execIndex", "timestamp", "foodSecurity", "aquiferSecurity",
    "reservoirSecurity", "financialSecurityAgriculture",
    "financialSecurityWater", "financialSecurityEnergy",
    "financialSecurityJoint", "politicalPowerAgriculture",
    "politicalPowerWater", "politicalPowerEnergy", "jointObjective",
    "budgetViolationYears",
)


def objectives_csv(log: SessionLog) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(OBJECTIVE_COLUMNS)
    for index, event in enumerate(log.executions):
        r = event["report"]
        writer.writerow((
            index, repr(event["timestamp"]),
            repr(r["foodSecurity"]), repr(r["aquiferSecurity"]),
            repr(r["reservoirSecurity"]),
            repr(r["financialSecurity"]["agriculture"]),
            repr(r["financialSecurity"]["water"]),
            repr(r["financialSecurity"]["energy"]),
            repr(r["financialSecurity"]["joint"]),
            repr(r["politicalPower"]["agriculture"]),
            repr(r["politicalPower"]["water"]),
            repr(r["politicalPower"]["energy"]),
            repr(r["jointObjective"]),
            ";".join(str(y) for y in r["budgetViolations"]),
        ))
    return out.getvalue()


def export_archive(log: SessionLog, document: Mapping, path) -> None:
    """Zip holding everything needed to audit the session: the scenario,
    the event log, and one objective row per execution."""
    with zipfile.ZipFile(path, "w", zipfile.ZIP_DEFLATED) as archive:
        archive.writestr("scenario.json", canonical_json(document))
        archive.writestr("events.ndjson", log.to_text())
        archive.writestr("objectives.csv", objectives_csv(log))
