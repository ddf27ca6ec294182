"""Federation coordinator: membership, gating, time grants, routing.

A single thread owns all state.  Sockets stay in blocking mode; a
selector watches readability and `poll` services whatever arrived, in
connection-registration order so scripted sessions always produce the
same byte streams.  The coordinator owns the societal model (publishing
its demands right after every grant), records every publication in its
own flow ledger, and counts one exchange per completed joint run.

Sector internals never cross the wire.  The coordinator ledger
therefore holds the societal series plus everything published; callers
who also hold the per-role ledgers can merge them into the full record.
"""

from __future__ import annotations

import selectors
import socket
import threading
from dataclasses import dataclass, field
from typing import Callable, Mapping

from sipg import fom
from sipg.engine import SocietalModel, record_step_output
from sipg.ledger import FlowLedger
from sipg.scenario import Scenario, ScenarioError, build_scenario, validate_document
from sipg.federation import protocol as wire
from sipg.federation.protocol import ProtocolError

VARIANTS = ("1A", "1B", "2")


@dataclass
class _Connection:
    sock: socket.socket
    seq: int
    decoder: wire.FrameDecoder = field(default_factory=wire.FrameDecoder)
    federate_id: str | None = None


@dataclass
class FederateSession:
    federate_id: str
    role: str
    publishes: frozenset[tuple[str, str]]
    subscribes: frozenset[tuple[str, str]]
    conn: _Connection


class FederationCoordinator:
    def __init__(self, document: Mapping, variant: str = "1A",
                 on_event: Callable[[dict], None] | None = None):
        findings = validate_document(document)
        if findings:
            raise ScenarioError(findings)
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        self.document = document
        self.scenario: Scenario = build_scenario(document)
        self.variant = variant
        self.on_event = on_event or (lambda event: None)

        self._selector = selectors.DefaultSelector()
        self._listener: socket.socket | None = None
        self._next_seq = 0
        self._connections: list[_Connection] = []
        self._federates: dict[str, FederateSession] = {}
        self._roles: dict[str, str] = {}  # sector role -> federate id

        self._initialized: set[str] = set()
        self._execute_requested: set[str] = set()
        self._running = False
        self._granted: tuple[int, int] | None = None
        self._requested: set[str] = set()
        self._published: dict[str, set[tuple[str, str, str]]] = {}
        self._societal: SocietalModel | None = None
        self.ledger: FlowLedger | None = None

        self.exchanges = 0
        self.completed_ledgers: list[FlowLedger] = []

    # --- wiring -------------------------------------------------------

    def attach(self, sock: socket.socket) -> None:
        """Adopt a connected socket as a federate connection."""
        sock.setblocking(True)
        conn = _Connection(sock=sock, seq=self._next_seq)
        self._next_seq += 1
        self._connections.append(conn)
        self._selector.register(sock, selectors.EVENT_READ, conn)

    def listen(self, listener: socket.socket) -> None:
        self._listener = listener
        listener.setblocking(True)
        self._selector.register(listener, selectors.EVENT_READ, None)

    def poll(self, timeout: float | None = 0.0) -> bool:
        """Service every readable connection once; True if anything happened."""
        events = self._selector.select(timeout)
        ready = sorted((key.data for key, _ in events if key.data is not None),
                       key=lambda conn: conn.seq)
        for key, _ in events:
            if key.data is None and self._listener is not None:
                client, _addr = self._listener.accept()
                self.attach(client)
        for conn in ready:
            if conn.sock.fileno() >= 0:
                self._service(conn)
        return bool(events)

    def serve(self, stop: threading.Event, timeout: float = 0.05) -> None:
        while not stop.is_set():
            self.poll(timeout)

    def close(self) -> None:
        for conn in list(self._connections):
            self._drop(conn)
        if self._listener is not None:
            self._selector.unregister(self._listener)
            self._listener.close()
            self._listener = None
        self._selector.close()

    @property
    def sector_roles_present(self) -> tuple[str, ...]:
        return tuple(sorted(self._roles))

    # --- connection servicing ------------------------------------------

    def _service(self, conn: _Connection) -> None:
        try:
            data = conn.sock.recv(1 << 16)
        except (ConnectionError, OSError):
            data = b""
        if not data:
            self._drop(conn)
            return
        try:
            messages = conn.decoder.feed(data)
        except ProtocolError as exc:
            self._send(conn, wire.error_frame(exc.code, str(exc)))
            self._drop(conn)
            return
        for message in messages:
            self._dispatch(conn, message)
            if conn.sock.fileno() < 0:
                break

    def _send(self, conn: _Connection, message: dict) -> None:
        try:
            conn.sock.sendall(wire.encode_frame(message))
        except (ConnectionError, OSError):
            self._drop(conn)

    def _reject(self, conn: _Connection, code: str, message: str) -> None:
        self.on_event({"event": "error", "code": code, "message": message,
                       "federateId": conn.federate_id})
        self._send(conn, wire.error_frame(code, message))

    def _drop(self, conn: _Connection) -> None:
        if conn in self._connections:
            self._connections.remove(conn)
            try:
                self._selector.unregister(conn.sock)
            except (KeyError, ValueError):
                pass
            conn.sock.close()
        fid = conn.federate_id
        conn.federate_id = None
        if fid is None or fid not in self._federates:
            return
        session = self._federates.pop(fid)
        role = session.role
        if self._roles.get(role) == fid:
            del self._roles[role]
            self._initialized.discard(role)
            self._execute_requested.discard(role)
            if self._running:
                # a sector leaving mid-run kills the run without counting
                # it, and everyone must initialize again
                self._running = False
                self._granted = None
                self._requested.clear()
                self._initialized.clear()
                self._execute_requested.clear()
                self.ledger = None
                self._societal = None
                self.on_event({"event": "run_aborted", "role": role})
        self.on_event({"event": "resign", "federateId": fid, "role": role})
        self._broadcast_gate()

    # --- message dispatch ----------------------------------------------

    def _dispatch(self, conn: _Connection, message: dict) -> None:
        if message["protocolVersion"] != wire.PROTOCOL_VERSION:
            self._reject(conn, wire.ERR_VERSION_MISMATCH,
                         f"protocol version {wire.PROTOCOL_VERSION} required, "
                         f"got {message['protocolVersion']}")
            return
        kind = message["kind"]
        if kind == wire.KIND_JOIN:
            self._on_join(conn, message)
            return
        if conn.federate_id is None:
            self._reject(conn, wire.ERR_MALFORMED,
                         f"{kind} before join on this connection")
            return
        session = self._federates[conn.federate_id]
        if kind == wire.KIND_INIT:
            self._on_init(conn, session)
        elif kind == wire.KIND_EXECUTE:
            self._on_execute(conn, session)
        elif kind == wire.KIND_ATTR_UPDATE:
            self._on_attr_update(conn, session, message)
        elif kind == wire.KIND_TIME_REQUEST:
            self._on_time_request(conn, session, message)
        elif kind == wire.KIND_RESIGN:
            self._drop(conn)
        else:
            self._reject(conn, wire.ERR_MALFORMED,
                         f"{kind} is not accepted by the coordinator")

    def _on_join(self, conn: _Connection, message: dict) -> None:
        if conn.federate_id is not None:
            self._reject(conn, wire.ERR_DUPLICATE_FEDERATE,
                         "connection already joined")
            return
        fid = message["federateId"]
        role = message["role"]
        if role not in fom.SECTOR_ROLES and role != fom.ROLE_OBSERVER:
            self._reject(conn, wire.ERR_MALFORMED, f"unknown role {role!r}")
            return
        if fid == wire.COORDINATOR_ID or fid in self._federates:
            self._reject(conn, wire.ERR_DUPLICATE_FEDERATE,
                         f"federate id {fid!r} already in use")
            return
        if role in self._roles:
            self._reject(conn, wire.ERR_ROLE_CLAIMED,
                         f"role {role!r} already claimed by "
                         f"{self._roles[role]!r}")
            return
        allowed = set(fom.role_publications(role))
        publishes = {tuple(p) for p in message["publishes"]}
        for pair in sorted(publishes - allowed):
            self._reject(conn, wire.ERR_UNDECLARED_ATTRIBUTE,
                         f"role {role!r} may not publish "
                         f"{pair[1]!r} on {pair[0]!r}")
            return
        subscribes = {tuple(p) for p in message["subscribes"]}
        for pair in sorted(subscribes - set(fom.ATTRIBUTES)):
            self._reject(conn, wire.ERR_UNDECLARED_ATTRIBUTE,
                         f"unknown attribute {pair[1]!r} on {pair[0]!r}")
            return
        conn.federate_id = fid
        self._federates[fid] = FederateSession(
            federate_id=fid, role=role, publishes=frozenset(publishes),
            subscribes=frozenset(subscribes), conn=conn)
        if role in fom.SECTOR_ROLES:
            self._roles[role] = fid
        self._send(conn, wire.join_ack_frame(
            fid, role, self.variant, self.scenario.iterations_per_year,
            self.document))
        self.on_event({"event": "join", "federateId": fid, "role": role})
        self._broadcast_gate()

    def _on_init(self, conn: _Connection, session: FederateSession) -> None:
        if session.role == fom.ROLE_OBSERVER:
            self._reject(conn, wire.ERR_MALFORMED, "observers do not initialize")
            return
        if len(self._roles) < len(fom.SECTOR_ROLES):
            self._reject(conn, wire.ERR_GATE_CLOSED,
                         "federation incomplete: all three roles must join "
                         "before initialization")
            return
        if self._running:
            self._reject(conn, wire.ERR_GATE_CLOSED, "run in progress")
            return
        if session.role in self._initialized:
            return
        self._initialized.add(session.role)
        self.on_event({"event": "initialize", "role": session.role})
        self._broadcast_gate()

    def _on_execute(self, conn: _Connection, session: FederateSession) -> None:
        if session.role == fom.ROLE_OBSERVER:
            self._reject(conn, wire.ERR_MALFORMED, "observers do not execute")
            return
        if self._running:
            self._reject(conn, wire.ERR_GATE_CLOSED, "run in progress")
            return
        if self._initialized != set(fom.SECTOR_ROLES):
            self._reject(conn, wire.ERR_GATE_CLOSED,
                         "execute gate closed: waiting for initialization")
            self._send(conn, self._gate_frame())
            return
        if session.role in self._execute_requested:
            return
        self._execute_requested.add(session.role)
        self.on_event({"event": "execute_requested", "role": session.role})
        if self._execute_requested == set(fom.SECTOR_ROLES):
            self._start_run()
        else:
            self._broadcast_gate()

    def _on_attr_update(self, conn: _Connection, session: FederateSession,
                        message: dict) -> None:
        pair = (message["className"], message["attribute"])
        if pair not in session.publishes:
            self._reject(conn, wire.ERR_UNDECLARED_ATTRIBUTE,
                         f"{session.federate_id!r} did not declare "
                         f"{pair[1]!r} on {pair[0]!r}")
            return
        if not self._running or self._granted is None:
            self._reject(conn, wire.ERR_STALE_UPDATE,
                         "update outside any granted step")
            return
        stamp = (message["year"], message["iteration"])
        if stamp != self._granted:
            self._reject(conn, wire.ERR_STALE_UPDATE,
                         f"update for year {stamp[0]} iteration {stamp[1]}; "
                         f"current step is year {self._granted[0]} iteration "
                         f"{self._granted[1]}")
            return
        node = message["objectName"]
        if node not in self.scenario.node_ids:
            self._reject(conn, wire.ERR_MALFORMED,
                         f"unknown object {node!r}")
            return
        if message["units"] != fom.ATTRIBUTES[pair]:
            self._reject(conn, wire.ERR_MALFORMED,
                         f"units {message['units']!r} do not match "
                         f"{fom.ATTRIBUTES[pair]!r} for {pair[1]!r}")
            return
        key = (pair[0], pair[1], node)
        seen = self._published[session.federate_id]
        if key in seen:
            self._reject(conn, wire.ERR_MALFORMED,
                         f"duplicate publication of {pair[1]!r} for {node!r}")
            return
        seen.add(key)
        assert self.ledger is not None
        self.ledger.record(stamp[0], stamp[1], node,
                           fom.flow_key(pair[0], pair[1]),
                           float(message["value"]))
        self._route(message, sender=session.federate_id)

    def _on_time_request(self, conn: _Connection, session: FederateSession,
                         message: dict) -> None:
        if session.role == fom.ROLE_OBSERVER:
            self._reject(conn, wire.ERR_MALFORMED,
                         "observers do not advance time")
            return
        if not self._running:
            self._reject(conn, wire.ERR_OUT_OF_ORDER, "no run in progress")
            return
        expected = self._next_step()
        requested = (message["year"], message["iteration"])
        if requested != expected:
            self._reject(conn, wire.ERR_OUT_OF_ORDER,
                         f"expected request for year {expected[0]} iteration "
                         f"{expected[1]}, got year {requested[0]} iteration "
                         f"{requested[1]}")
            return
        fid = session.federate_id
        if fid in self._requested:
            self._reject(conn, wire.ERR_OUT_OF_ORDER,
                         f"{fid!r} already requested this step")
            return
        if self._granted is not None:
            missing = self._required_publications(session) - self._published[fid]
            if missing:
                cls, attr, node = sorted(missing)[0]
                self._reject(conn, wire.ERR_INCOMPLETE_PUBLICATION,
                             f"{fid!r} advanced without publishing "
                             f"{attr!r} on {cls!r} for {node!r}")
                return
        self._requested.add(fid)
        if self._requested == set(self._roles.values()):
            if expected[0] > self.scenario.horizon.end:
                self._complete_run()
            else:
                self._grant(expected)

    # --- time management -------------------------------------------------

    def _required_publications(self, session: FederateSession):
        return {(cls, attr, node) for (cls, attr) in session.publishes
                for node in self.scenario.node_ids}

    def _next_step(self) -> tuple[int, int]:
        if self._granted is None:
            return (self.scenario.horizon.start, 1)
        year, iteration = self._granted
        if iteration < self.scenario.iterations_per_year:
            return (year, iteration + 1)
        return (year + 1, 1)

    def _start_run(self) -> None:
        self._running = True
        self._granted = None
        self._requested.clear()
        self._published = {fid: set() for fid in self._roles.values()}
        self._societal = SocietalModel(self.scenario)
        self.ledger = FlowLedger(self.scenario.iterations_per_year)
        self.on_event({"event": "run_started", "exchanges": self.exchanges})
        self._broadcast_gate()

    def _grant(self, step: tuple[int, int]) -> None:
        year, iteration = step
        self._granted = step
        self._requested.clear()
        self._published = {fid: set() for fid in self._roles.values()}
        grant = wire.time_grant_frame(year, iteration)
        for session in self._sessions():
            self._send(session.conn, grant)
        if not self._running or self._societal is None or self.ledger is None:
            return  # a failed send dropped a sector and aborted the run
        out = self._societal.step(year)
        record_step_output(self.ledger, year, iteration, out)
        for (cls, attr, node), value in sorted(out.published.items()):
            update = wire.attr_update_frame(
                wire.COORDINATOR_ID, cls, node, attr, value,
                fom.ATTRIBUTES[(cls, attr)], year, iteration)
            self._route(update, sender=None)
            if not self._running:
                return

    def _complete_run(self) -> None:
        self._running = False
        self._granted = None
        self._requested.clear()
        self.exchanges += 1
        assert self.ledger is not None
        self.completed_ledgers.append(self.ledger)
        self._initialized.clear()
        self._execute_requested.clear()
        self.on_event({"event": "run_completed", "exchanges": self.exchanges})
        self._broadcast_gate()

    # --- delivery ---------------------------------------------------------

    def _sessions(self) -> list[FederateSession]:
        """Snapshot in federate-id order; sends may drop members mid-loop."""
        return [self._federates[fid] for fid in sorted(self._federates)]

    def _route(self, update: dict, sender: str | None) -> None:
        pair = (update["className"], update["attribute"])
        for session in self._sessions():
            if session.federate_id == sender:
                continue
            if pair in session.subscribes:
                self._send(session.conn, update)

    def _gate_frame(self) -> dict:
        return wire.gate_state_frame(
            roles_present=self._roles,
            initialized=self._initialized,
            execute_requested=self._execute_requested,
            gate_open=self._initialized == set(fom.SECTOR_ROLES),
            running=self._running,
            exchanges_completed=self.exchanges)

    def _broadcast_gate(self) -> None:
        frame = self._gate_frame()
        for session in self._sessions():
            self._send(session.conn, frame)
