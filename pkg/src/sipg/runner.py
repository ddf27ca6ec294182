"""Live synchronized session: coordinator, three in-process federates,
and a session log tied together behind role-keyed controls.

The runner owns the sector federates (the models run server side); a
caller such as the web gateway or the command line acts for a role:
edit that role's plan elements, initialize, request execution.  When
all three roles have requested execution the joint run proceeds, the
per-role ledgers merge with the coordinator's, and the execution event
lands in the log with its final objective snapshot.
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass
from typing import Callable, Mapping

from sipg import fom
from sipg.engine import compute_reports
from sipg.ledger import FlowLedger
from sipg.objectives import ObjectiveReport
from sipg.scenario import ElementInstance
from sipg.federation import FederationCoordinator, SectorFederate
from sipg.federation.federate import MODEL_CLASSES
from sipg.session import (EVENT_ELEMENT_ADDED, EVENT_ELEMENT_EDITED,
                          EVENT_ELEMENT_REMOVED, EVENT_EXPORT_FLOWS,
                          EVENT_INITIALIZE, SessionError, SessionLog,
                          _parse_element)
from sipg.federation.exchange import export_flows_text


def element_doc(element: ElementInstance) -> dict:
    return {"id": element.id, "template": element.template,
            "origin": element.origin, "destination": element.destination,
            "commissionStart": element.commission_start}


@dataclass(frozen=True)
class ExecutionOutcome:
    index: int
    ledger: FlowLedger                       # merged full record
    reports: tuple[ObjectiveReport, ...]
    final_report: ObjectiveReport


class SessionRunner:
    def __init__(self, document: Mapping, variant: str = "1A",
                 session_id: str = "session",
                 clock: Callable[[], float] = time.time,
                 on_event: Callable[[dict], None] | None = None):
        self.document = document
        self.coordinator = FederationCoordinator(document, variant=variant,
                                                 on_event=on_event)
        self.scenario = self.coordinator.scenario
        self.log = SessionLog(session_id, variant, document, clock=clock)
        self.plan: dict[str, ElementInstance] = {}
        self.executions: list[ExecutionOutcome] = []
        self._federates: dict[str, SectorFederate] = {}
        for role in fom.SECTOR_ROLES:
            mine, theirs = socket.socketpair()
            self.coordinator.attach(theirs)
            self._federates[role] = SectorFederate(mine, role, f"{role}-1")
        self._stop = threading.Event()
        self._serve: threading.Thread | None = None
        self._lock = threading.Lock()
        self._armed: set[str] = set()    # roles initialized this round
        self._round: dict[str, FlowLedger] = {}
        self._round_threads: dict[str, threading.Thread] = {}
        self._round_errors: list[Exception] = []

    # --- lifecycle -----------------------------------------------------

    def make_channel(self) -> socket.socket:
        """Extra coordinator connection (e.g. an observer); pre-start only."""
        if self._serve is not None:
            raise SessionError("closed",
                               "channels must be created before start")
        mine, theirs = socket.socketpair()
        self.coordinator.attach(theirs)
        return mine

    def start(self) -> None:
        if self._serve is not None:
            return
        self._serve = threading.Thread(target=self.coordinator.serve,
                                       args=(self._stop,), daemon=True)
        self._serve.start()
        for federate in self._federates.values():
            federate.join()

    def close(self) -> None:
        self._stop.set()
        if self._serve is not None:
            self._serve.join(timeout=10)
        self.coordinator.close()
        for federate in self._federates.values():
            federate.client.close()
        self.log.close()

    @property
    def busy(self) -> bool:
        return any(t.is_alive() for t in self._round_threads.values())

    def _require_idle(self) -> None:
        if self._serve is None:
            raise SessionError("closed", "session not started")
        if self.busy:
            raise SessionError("busy", "an execution is in progress")

    # --- plan editing -----------------------------------------------------

    def _own_sectors(self, role: str) -> tuple[str, ...]:
        if role not in MODEL_CLASSES:
            raise SessionError("malformed", f"unknown sector role {role!r}")
        return MODEL_CLASSES[role].sectors

    def _check_ownership(self, role: str, template: str) -> None:
        sector = self.scenario.templates[template].sector
        if sector not in self._own_sectors(role):
            raise SessionError("forbidden",
                               f"role {role!r} does not own {template!r}")

    def _push_plan(self) -> None:
        elements = list(self.plan.values())
        for federate in self._federates.values():
            federate.plan = list(elements)

    def _check_window(self, element: ElementInstance) -> None:
        # baseline scenario elements may predate the horizon; player
        # additions are confined to the planning window
        plan_start = self.scenario.horizon.plan_start
        if element.commission_start < plan_start:
            raise SessionError(
                "malformed",
                f"element {element.id!r}: commissionStart "
                f"{element.commission_start} is before the plan window "
                f"({plan_start})")

    def add_element(self, role: str, doc: Mapping) -> ElementInstance:
        self._require_idle()
        element = _parse_element(self.scenario, doc, "element")
        self._check_window(element)
        self._check_ownership(role, element.template)
        if element.id in self.plan:
            raise SessionError("malformed",
                               f"element {element.id!r} already present")
        self.plan[element.id] = element
        self._push_plan()
        self.log.record(EVENT_ELEMENT_ADDED, role=role,
                        element=element_doc(element))
        return element

    def edit_element(self, role: str, doc: Mapping) -> ElementInstance:
        self._require_idle()
        element = _parse_element(self.scenario, doc, "element")
        self._check_window(element)
        current = self.plan.get(element.id)
        if current is None:
            raise SessionError("malformed",
                               f"element {element.id!r} not present")
        self._check_ownership(role, current.template)
        self._check_ownership(role, element.template)
        self.plan[element.id] = element
        self._push_plan()
        self.log.record(EVENT_ELEMENT_EDITED, role=role,
                        element=element_doc(element))
        return element

    def remove_element(self, role: str, element_id: str) -> None:
        self._require_idle()
        current = self.plan.get(element_id)
        if current is None:
            raise SessionError("malformed",
                               f"element {element_id!r} not present")
        self._check_ownership(role, current.template)
        del self.plan[element_id]
        self._push_plan()
        self.log.record(EVENT_ELEMENT_REMOVED, role=role,
                        elementId=element_id)

    # --- execution ---------------------------------------------------------

    def initialize(self, role: str) -> None:
        """Allowed while other roles' execute requests are pending; the
        joint run cannot start until this role requests too."""
        if self._serve is None:
            raise SessionError("closed", "session not started")
        if role not in self._federates:
            raise SessionError("malformed", f"unknown sector role {role!r}")
        thread = self._round_threads.get(role)
        if thread is not None and thread.is_alive():
            raise SessionError("busy", f"{role!r} already has a run pending")
        self._federates[role].initialize()
        self._armed.add(role)
        self.log.record(EVENT_INITIALIZE, role=role)

    def request_execute(self, role: str) -> None:
        """Spawn this role's run; the joint run proceeds once all three
        roles have requested it."""
        if self._serve is None:
            raise SessionError("closed", "session not started")
        if role not in self._federates:
            raise SessionError("malformed", f"unknown sector role {role!r}")
        if role not in self._armed:
            raise SessionError("gate_closed",
                               f"{role!r} must initialize before executing")
        if role in self._round_threads and self._round_threads[role].is_alive():
            raise SessionError("busy", f"{role!r} already has a run pending")
        thread = threading.Thread(target=self._collect,
                                  args=(role, self._federates[role]),
                                  daemon=True)
        self._round_threads[role] = thread
        thread.start()

    def _collect(self, role: str, federate: SectorFederate) -> None:
        try:
            # the execute request is only valid once every role has
            # initialized, so hold it until the gate opens
            federate.wait_gate(gate_open=True)
            federate.execute()
            ledger = federate.run()
        except Exception as exc:
            with self._lock:
                self._round_errors.append(exc)
            return
        with self._lock:
            self._round[role] = ledger
            if len(self._round) < len(fom.SECTOR_ROLES):
                return
            merged = self.coordinator.completed_ledgers[-1].copy()
            for slice_ in self._round.values():
                merged.merge(slice_)
            self._round.clear()
            reports = compute_reports(merged, self.scenario)
            outcome = ExecutionOutcome(index=len(self.executions),
                                       ledger=merged, reports=reports,
                                       final_report=reports[-1])
            self.executions.append(outcome)
            self._armed.clear()          # every role re-initializes per run
            self.log.record_execute(reports[-1])

    def wait_round(self, timeout: float = 120.0) -> ExecutionOutcome:
        """Block until the in-flight round completes; raises its errors."""
        for thread in list(self._round_threads.values()):
            thread.join(timeout=timeout)
        if self._round_errors:
            error = self._round_errors[0]
            self._round_errors.clear()
            self._round.clear()
            self._round_threads = {role: t
                                   for role, t in self._round_threads.items()
                                   if t.is_alive()}
            raise error
        if any(t.is_alive() for t in self._round_threads.values()):
            raise SessionError("busy", "execution did not finish in time")
        self._round_threads.clear()
        return self.executions[-1]

    def execute_all(self, timeout: float = 120.0) -> ExecutionOutcome:
        """Initialize and execute for every role, then wait."""
        for role in fom.SECTOR_ROLES:
            self.initialize(role)
        for role in fom.SECTOR_ROLES:
            self.request_execute(role)
        return self.wait_round(timeout)

    # --- flow export -----------------------------------------------------

    def export_flows(self, role: str) -> str:
        self._require_idle()
        if not self.executions:
            raise SessionError("malformed", "no completed execution to export")
        text = export_flows_text(self.executions[-1].ledger, self.scenario,
                                 role)
        self.log.record(EVENT_EXPORT_FLOWS, role=role)
        return text
