"""Browser bridge for live sessions.

Wraps a synchronized session behind per-role message feeds so web
clients can play a role without ever touching the wire protocol
directly.  The gateway joins the coordinator as an observer, relays
gate states verbatim, and translates session log events into browser
messages: plan edits are broadcast to everyone, flow series are
filtered per role, and objective snapshots carry only the fields the
receiving role is entitled to see.

Visibility rules:
  - published boundary flows (everything that crosses the wire) plus
    all societal series are common to every role;
  - a sector's internal series (stocks, production breakdowns) go to
    the owning role and the observer only;
  - the numeric joint objective is sent to players only when the
    session runs with quantitative visibility; otherwise it degrades
    to a coarse low/medium/high level.

A client of role R receives, in order: a join_ack carrying the
scenario document, the full filtered feed so far (so a reconnect
reproduces the identical view), and then live updates.  Client
messages use the same kinds: element_added/element_edited/
element_removed, init, execute.  Rejected requests come back as
error messages on that client only.
"""

import collections
import socket
import threading
import time
from typing import Callable, Mapping

from sipg import fom
from sipg.federation import protocol as wire
from sipg.runner import SessionRunner
from sipg.session import (EVENT_ELEMENT_ADDED, EVENT_ELEMENT_EDITED,
                          EVENT_ELEMENT_REMOVED, EVENT_EXECUTE,
                          EVENT_EXPORT_FLOWS, SessionError, report_doc)

VISIBILITY_QUANTITATIVE = "quantitative"
VISIBILITY_QUALITATIVE = "qualitative"

FEED_ROLES = fom.SECTOR_ROLES + (fom.ROLE_OBSERVER,)

_CLASS_BY_PREFIX = {
    "agriculture": fom.CLASS_AGRICULTURE,
    "water": fom.CLASS_WATER,
    "petroleum": fom.CLASS_PETROLEUM,
    "electrical": fom.CLASS_ELECTRICAL,
    "societal": fom.CLASS_SOCIETAL,
}

# role -> (sector security attribute, financial security key)
_ROLE_SECURITY = {
    fom.ROLE_AGRICULTURE: "food_security",
    fom.ROLE_WATER: "aquifer_security",
    fom.ROLE_ENERGY: "reservoir_security",
}


def series_visible(role: str, series: str) -> bool:
    """May `role` receive ledger series `series`?"""
    if role == fom.ROLE_OBSERVER:
        return True
    if fom.published_attribute(series) is not None:
        return True
    owner = fom.role_of_key(series)
    return owner is None or owner == role


def qualitative_level(score: float) -> str:
    if score < 1000.0 / 3.0:
        return "low"
    if score < 2000.0 / 3.0:
        return "medium"
    return "high"


def objective_snapshot(role: str, exec_index: int, reports,
                       visibility: str) -> dict:
    """Per-role view of one execution's objective trace."""
    final = reports[-1]
    body = {"kind": "objective_snapshot", "execIndex": exec_index,
            "year": final.year, "role": role,
            "budgetViolationYears": list(final.budget_violations)}
    if role == fom.ROLE_OBSERVER:
        body["reports"] = [report_doc(r) for r in reports]
        body["jointObjective"] = final.joint_objective
        return body
    attr = _ROLE_SECURITY[role]
    body["series"] = [{"year": r.year,
                       "securityScore": getattr(r, attr),
                       "financialSecurity": r.financial_security[role],
                       "politicalPower": r.political_power[role]}
                      for r in reports]
    body["securityScore"] = getattr(final, attr)
    body["financialSecurity"] = final.financial_security[role]
    body["politicalPower"] = final.political_power[role]
    if visibility == VISIBILITY_QUANTITATIVE:
        body["jointObjective"] = final.joint_objective
    else:
        body["jointObjectiveLevel"] = qualitative_level(final.joint_objective)
    return body


class GatewayClient:
    """One connected browser; messages pop in feed order."""

    def __init__(self, gateway: "SessionGateway", role: str):
        self.gateway = gateway
        self.role = role
        self.closed = False
        self._items: collections.deque[dict] = collections.deque()

    def next(self, timeout: float | None = None) -> dict | None:
        """Blocking pop; None once closed and drained, or on timeout."""
        cond = self.gateway._cond
        deadline = None if timeout is None else time.monotonic() + timeout
        with cond:
            while not self._items:
                if self.closed or self.gateway.closed:
                    return None
                remaining = None if deadline is None \
                    else deadline - time.monotonic()
                if remaining is not None and remaining <= 0:
                    return None
                cond.wait(remaining)
            return self._items.popleft()

    def drain(self, timeout: float = 0.0) -> list[dict]:
        """Every message available within the window."""
        out = []
        message = self.next(timeout)
        while message is not None:
            out.append(message)
            message = self.next(0.0)
        return out


class SessionGateway:
    def __init__(self, document: Mapping, variant: str = "1A",
                 session_id: str = "session",
                 clock: Callable[[], float] = time.time):
        if variant not in ("1A", "1B"):
            raise SessionError("malformed",
                               f"live sessions support variants 1A and 1B, "
                               f"not {variant!r}")
        self.visibility = (VISIBILITY_QUALITATIVE if variant == "1B"
                           else VISIBILITY_QUANTITATIVE)
        self.runner = SessionRunner(document, variant=variant,
                                    session_id=session_id, clock=clock)
        self._channel = self.runner.make_channel()
        self.closed = False
        self.gate: dict | None = None
        self._cond = threading.Condition()
        self._feeds: dict[str, list[dict]] = {r: [] for r in FEED_ROLES}
        self._clients: list[GatewayClient] = []
        self._scanned = 0        # log events translated so far
        self._exec_count = 0
        self._stop = threading.Event()
        self._pump: threading.Thread | None = None
        self._ops = threading.Lock()     # serializes client requests

    @property
    def session_id(self) -> str:
        return self.runner.log.session_id

    @property
    def variant(self) -> str:
        return self.runner.log.variant

    # --- lifecycle ------------------------------------------------------

    def start(self) -> None:
        if self._pump is not None:
            return
        self.runner.start()
        self._channel.sendall(wire.encode_frame(wire.join_frame(
            "gateway", fom.ROLE_OBSERVER, publishes=(), subscribes=())))
        self._pump = threading.Thread(target=self._pump_loop, daemon=True)
        self._pump.start()

    def close(self) -> None:
        self._stop.set()
        if self._pump is not None:
            self._pump.join(timeout=10)
        self._channel.close()
        self.runner.close()
        with self._cond:
            self.closed = True
            self._cond.notify_all()

    # --- clients ----------------------------------------------------------

    def connect(self, role: str) -> GatewayClient:
        if role not in FEED_ROLES:
            raise SessionError("malformed", f"unknown role {role!r}")
        client = GatewayClient(self, role)
        with self._cond:
            if self.closed:
                raise SessionError("closed", "gateway is closed")
            self._translate_locked()
            client._items.append({
                "kind": "join_ack", "federateId": f"{role}-ui",
                "role": role, "sessionId": self.session_id,
                "variant": self.variant,
                "jointObjectiveVisibility": self.visibility,
                "iterationsPerYear": self.runner.scenario.iterations_per_year,
                "scenario": self.runner.document})
            client._items.extend(self._feeds[role])
            self._clients.append(client)
            self._cond.notify_all()
        return client

    def disconnect(self, client: GatewayClient) -> None:
        with self._cond:
            client.closed = True
            if client in self._clients:
                self._clients.remove(client)
            self._cond.notify_all()

    def handle(self, client: GatewayClient, message: Mapping) -> None:
        """One client request; failures answer that client only."""
        kind = message.get("kind") if isinstance(message, Mapping) else None
        role = client.role
        try:
            if role == fom.ROLE_OBSERVER:
                raise SessionError("forbidden", "observers only watch")
            with self._ops:
                if kind == EVENT_ELEMENT_ADDED:
                    self.runner.add_element(role,
                                            message.get("element") or {})
                elif kind == EVENT_ELEMENT_EDITED:
                    self.runner.edit_element(role,
                                             message.get("element") or {})
                elif kind == EVENT_ELEMENT_REMOVED:
                    element_id = message.get("elementId")
                    if not isinstance(element_id, str):
                        raise SessionError("malformed", "elementId required")
                    self.runner.remove_element(role, element_id)
                elif kind == wire.KIND_INIT:
                    self.runner.initialize(role)
                elif kind == wire.KIND_EXECUTE:
                    self.runner.request_execute(role)
                else:
                    raise SessionError("malformed",
                                       f"unknown message kind {kind!r}")
        except SessionError as exc:
            with self._cond:
                client._items.append({"kind": "error", "code": exc.code,
                                      "message": str(exc),
                                      "federateId": wire.COORDINATOR_ID})
                self._cond.notify_all()
            return
        with self._cond:
            self._translate_locked()
            self._cond.notify_all()

    # --- translation ------------------------------------------------------

    def _pump_loop(self) -> None:
        decoder = wire.FrameDecoder()
        self._channel.settimeout(0.05)
        while not self._stop.is_set():
            frames = []
            try:
                data = self._channel.recv(65536)
                if not data:
                    break
                frames = decoder.feed(data)
            except socket.timeout:
                pass
            except OSError:
                break
            failures = self._take_round_errors()
            with self._cond:
                for frame in frames:
                    if frame["kind"] == wire.KIND_GATE_STATE:
                        self.gate = frame
                        self._broadcast({r: frame for r in FEED_ROLES})
                for exc in failures:
                    code = getattr(exc, "code", "internal")
                    self._broadcast({r: {"kind": "error", "code": code,
                                         "message": str(exc),
                                         "federateId": wire.COORDINATOR_ID}
                                     for r in FEED_ROLES})
                self._translate_locked()
                self._cond.notify_all()

    def _take_round_errors(self) -> list[Exception]:
        """A collapsed run never produces an execute event; the error
        itself is the only signal, so relay it to every client."""
        runner = self.runner
        if not runner._round_errors:
            return []
        with runner._lock:
            errors = list(runner._round_errors)
            runner._round_errors.clear()
        return errors

    def _broadcast(self, per_role: Mapping[str, dict]) -> None:
        for role, message in per_role.items():
            self._feeds[role].append(message)
        for client in self._clients:
            message = per_role.get(client.role)
            if message is not None:
                client._items.append(message)

    def _translate_locked(self) -> None:
        events = self.runner.log.events
        while self._scanned < len(events):
            event = events[self._scanned]
            kind = event["kind"]
            if kind in (EVENT_ELEMENT_ADDED, EVENT_ELEMENT_EDITED,
                        EVENT_ELEMENT_REMOVED, EVENT_EXPORT_FLOWS):
                shared = dict(event)
                self._broadcast({r: shared for r in FEED_ROLES})
            elif kind == EVENT_EXECUTE:
                index = self._exec_count
                if index >= len(self.runner.executions):
                    return          # merge still in flight; retry next tick
                self._exec_count += 1
                self._broadcast_execution(index)
            self._scanned += 1

    def _broadcast_execution(self, index: int) -> None:
        outcome = self.runner.executions[index]
        traces: dict[tuple[str, str], list] = collections.defaultdict(list)
        for year, iteration, node, series, value in outcome.ledger.to_rows():
            traces[(node, series)].append([year, iteration, value])
        updates = []
        for (node, series), values in sorted(traces.items()):
            prefix = series.partition(".")[0]
            updates.append({
                "kind": "attr_update", "federateId": wire.COORDINATOR_ID,
                "execIndex": index, "objectName": node, "series": series,
                "className": _CLASS_BY_PREFIX[prefix],
                "units": fom.key_units(series),
                "values": sorted(values)})
        for role in FEED_ROLES:
            for update in updates:
                if series_visible(role, update["series"]):
                    self._broadcast({role: update})
            self._broadcast({role: objective_snapshot(
                role, index, outcome.reports, self.visibility)})


def create_app(gateway: SessionGateway):
    """FastAPI application exposing the gateway over web sockets."""
    import asyncio

    from fastapi import FastAPI, WebSocket
    from starlette.concurrency import run_in_threadpool
    from starlette.websockets import WebSocketDisconnect, WebSocketState

    app = FastAPI(title="sipg session gateway")
    app.state.gateway = gateway

    @app.websocket("/session/{session_id}/role/{role}")
    async def bridge(websocket: WebSocket, session_id: str, role: str):
        if session_id != gateway.session_id or role not in FEED_ROLES:
            await websocket.close(code=4404)
            return
        await websocket.accept()
        client = gateway.connect(role)

        async def outbound():
            while not client.closed:
                message = await run_in_threadpool(client.next, 0.2)
                if message is not None:
                    await websocket.send_json(message)

        task = asyncio.create_task(outbound())
        try:
            while True:
                gateway.handle(client, await websocket.receive_json())
        except WebSocketDisconnect:
            pass
        finally:
            gateway.disconnect(client)
            task.cancel()
            if websocket.client_state == WebSocketState.CONNECTED:
                await websocket.close()

    return app


def main(argv=None) -> int:
    """Development server: one live session behind a web socket."""
    import argparse
    import json

    import uvicorn

    from sipg.scenario import default_document

    parser = argparse.ArgumentParser(
        description="serve one live session for browser clients")
    parser.add_argument("--scenario", help="scenario JSON (default built in)")
    parser.add_argument("--variant", choices=("1A", "1B"), default="1A")
    parser.add_argument("--session-id", default="session")
    parser.add_argument("--port", type=int, default=7441)
    args = parser.parse_args(argv)
    if args.scenario:
        with open(args.scenario) as handle:
            document = json.load(handle)
    else:
        document = default_document()
    gateway = SessionGateway(document, variant=args.variant,
                             session_id=args.session_id)
    gateway.start()
    try:
        uvicorn.run(create_app(gateway), host="127.0.0.1", port=args.port)
    finally:
        gateway.close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
