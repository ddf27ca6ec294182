"""Federate-side client: join handshake and the per-run participation loop.

A sector federate drives exactly the model class the in-process engine
uses, so a synchronous federation reproduces the monolithic run bit for
bit.  Within each granted step the three roles clear sequentially by
construction: agriculture needs only the societal demands, water also
waits for agriculture's irrigation demand, and energy waits for the
water system's electricity demand, each publishing before requesting
the next step.
"""

from __future__ import annotations

import socket
from typing import Iterable, Mapping, Sequence

from sipg import fom
from sipg.engine import (AgricultureModel, EnergyModel, Published,
                         WaterModel, record_step_output)
from sipg.ledger import FlowLedger
from sipg.scenario import ElementInstance, Scenario, build_scenario
from sipg.federation import protocol as wire
from sipg.federation.protocol import ProtocolError


class FederationError(RuntimeError):
    """An error frame received from the coordinator."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


MODEL_CLASSES = {
    fom.ROLE_AGRICULTURE: AgricultureModel,
    fom.ROLE_WATER: WaterModel,
    fom.ROLE_ENERGY: EnergyModel,
}

# (class, attribute) pairs each role needs before it can clear a step.
ROLE_INPUTS: dict[str, tuple[tuple[str, str], ...]] = {
    fom.ROLE_AGRICULTURE: (
        (fom.CLASS_SOCIETAL, "Food In"),
    ),
    fom.ROLE_WATER: (
        (fom.CLASS_SOCIETAL, "Water In"),
        (fom.CLASS_AGRICULTURE, "Water In"),
    ),
    fom.ROLE_ENERGY: (
        (fom.CLASS_SOCIETAL, "Oil In"),
        (fom.CLASS_SOCIETAL, "Electricity In"),
        (fom.CLASS_WATER, "Electricity In"),
    ),
}


class FederateClient:
    """Blocking frame transport over a connected stream socket."""

    def __init__(self, sock: socket.socket):
        sock.setblocking(True)
        self._sock = sock
        self._decoder = wire.FrameDecoder()
        self._pending: list[dict] = []

    @classmethod
    def connect(cls, host: str, port: int) -> "FederateClient":
        return cls(socket.create_connection((host, port)))

    def send(self, message: dict) -> None:
        self._sock.sendall(wire.encode_frame(message))

    def recv(self) -> dict:
        """Next frame; raises ConnectionError on end of stream."""
        while not self._pending:
            data = self._sock.recv(1 << 16)
            if not data:
                raise ConnectionError("coordinator closed the connection")
            self._pending.extend(self._decoder.feed(data))
        return self._pending.pop(0)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class SectorFederate:
    """One role's scripted participant.

    Keeps a flow ledger per completed run holding this role's published
    and internal series; merging it with the coordinator's ledger (and
    the other roles') reconstructs the full record.
    """

    def __init__(self, sock: socket.socket, role: str, federate_id: str,
                 plan: Sequence[ElementInstance] = ()):
        if role not in MODEL_CLASSES:
            raise ValueError(f"no sector model for role {role!r}")
        self.client = FederateClient(sock)
        self.role = role
        self.federate_id = federate_id
        self.plan: list[ElementInstance] = list(plan)
        self.scenario: Scenario | None = None
        self.variant: str | None = None
        self.gate: dict | None = None        # last gate state seen
        self.ledgers: list[FlowLedger] = []

    # --- handshake -----------------------------------------------------

    def join(self) -> Scenario:
        self.client.send(wire.join_frame(
            self.federate_id, self.role,
            publishes=fom.role_publications(self.role),
            subscribes=ROLE_INPUTS[self.role]))
        ack = self._recv()
        if ack["kind"] != wire.KIND_JOIN_ACK:
            raise ProtocolError(wire.ERR_MALFORMED,
                                f"expected join_ack, got {ack['kind']}")
        self.scenario = build_scenario(ack["scenario"])
        self.variant = ack["variant"]
        return self.scenario

    def initialize(self) -> None:
        self.client.send(wire.init_frame(self.federate_id))

    def execute(self) -> None:
        self.client.send(wire.execute_frame(self.federate_id))

    def resign(self) -> None:
        self.client.send(wire.resign_frame(self.federate_id))
        self.client.close()

    # --- frame helpers ---------------------------------------------------

    def _recv(self) -> dict:
        message = self.client.recv()
        if message["kind"] == wire.KIND_ERROR:
            raise FederationError(message["code"], message["message"])
        if message["kind"] == wire.KIND_GATE_STATE:
            self.gate = message
        return message

    def wait_gate(self, *, gate_open: bool | None = None,
                  running: bool | None = None,
                  complete: bool | None = None) -> dict:
        """Swallow frames until a gate state matches the given fields."""
        everyone = set(fom.SECTOR_ROLES)
        while True:
            message = self._recv()
            if message["kind"] != wire.KIND_GATE_STATE:
                continue
            if gate_open is not None and message["gateOpen"] != gate_open:
                continue
            if running is not None and message["running"] != running:
                continue
            if complete is not None and \
                    everyone.issubset(message["rolesPresent"]) != complete:
                continue
            return message

    # --- the run loop ------------------------------------------------------

    def run(self) -> FlowLedger:
        """Participate in one granted run; returns this role's ledger."""
        if self.scenario is None:
            raise RuntimeError("join before running")
        scenario = self.scenario
        self.wait_gate(running=True)
        model = MODEL_CLASSES[self.role](scenario, tuple(self.plan))
        ledger = FlowLedger(scenario.iterations_per_year)
        needed = {(cls, attr, node) for (cls, attr) in ROLE_INPUTS[self.role]
                  for node in scenario.node_ids}
        for year in scenario.horizon.years:
            for iteration in range(1, scenario.iterations_per_year + 1):
                self.client.send(wire.time_request_frame(
                    self.federate_id, year, iteration))
                self._await_grant(year, iteration)
                inputs = self._gather_inputs(needed, year, iteration)
                out = model.step(year, iteration, inputs)
                record_step_output(ledger, year, iteration, out)
                for (cls, attr, node), value in sorted(out.published.items()):
                    self.client.send(wire.attr_update_frame(
                        self.federate_id, cls, node, attr, value,
                        fom.ATTRIBUTES[(cls, attr)], year, iteration))
            model.commit_year(year)
        self.client.send(wire.time_request_frame(
            self.federate_id, scenario.horizon.end + 1, 1))
        self.wait_gate(running=False)
        self.ledgers.append(ledger)
        return ledger

    def participate_once(self) -> FlowLedger:
        """Initialize, wait for the gate, execute, and run to completion.

        Initialization is only valid once all three roles have joined.
        Wait for a complete roster unless the last gate state already
        showed one (no further broadcast comes while everyone idles).
        """
        if self.gate is None or \
                not set(fom.SECTOR_ROLES).issubset(self.gate["rolesPresent"]):
            self.wait_gate(complete=True)
        self.initialize()
        self.wait_gate(gate_open=True)
        self.execute()
        return self.run()

    def _await_grant(self, year: int, iteration: int) -> None:
        while True:
            message = self._recv()
            if message["kind"] == wire.KIND_GATE_STATE and not message["running"]:
                raise FederationError(wire.ERR_GATE_CLOSED,
                                      "run aborted by coordinator")
            if message["kind"] != wire.KIND_TIME_GRANT:
                continue
            granted = (message["year"], message["iteration"])
            if granted != (year, iteration):
                raise ProtocolError(
                    wire.ERR_OUT_OF_ORDER,
                    f"granted year {granted[0]} iteration {granted[1]} while "
                    f"waiting for year {year} iteration {iteration}")
            return

    def _gather_inputs(self, needed: Iterable[tuple[str, str, str]],
                       year: int, iteration: int) -> Published:
        outstanding = set(needed)
        inputs: Published = {}
        while outstanding:
            message = self._recv()
            if message["kind"] == wire.KIND_GATE_STATE and not message["running"]:
                raise FederationError(wire.ERR_GATE_CLOSED,
                                      "run aborted by coordinator")
            if message["kind"] != wire.KIND_ATTR_UPDATE:
                continue
            if (message["year"], message["iteration"]) != (year, iteration):
                continue
            key = (message["className"], message["attribute"],
                   message["objectName"])
            if key in outstanding:
                outstanding.discard(key)
                inputs[key] = float(message["value"])
        return inputs
