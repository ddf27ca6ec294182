"""Wire protocol: length-prefixed canonical-JSON frames.

Each frame is a 4-byte big-endian length followed by one UTF-8 JSON
object serialized canonically (sorted keys, no whitespace), so a given
message always produces the same bytes.  Every message carries
`protocolVersion` and `federateId`; time-bearing kinds add `year` and
`iteration`.
"""

from __future__ import annotations

import json
import math
import struct
from typing import Iterable, Mapping

PROTOCOL_VERSION = 1
COORDINATOR_ID = "coordinator"

KIND_JOIN = "join"
KIND_JOIN_ACK = "join_ack"
KIND_INIT = "init"
KIND_EXECUTE = "execute"
KIND_GATE_STATE = "gate_state"
KIND_ATTR_UPDATE = "attr_update"
KIND_TIME_REQUEST = "time_request"
KIND_TIME_GRANT = "time_grant"
KIND_RESIGN = "resign"
KIND_ERROR = "error"

KINDS = frozenset({
    KIND_JOIN, KIND_JOIN_ACK, KIND_INIT, KIND_EXECUTE, KIND_GATE_STATE,
    KIND_ATTR_UPDATE, KIND_TIME_REQUEST, KIND_TIME_GRANT, KIND_RESIGN,
    KIND_ERROR,
})

# Rejection codes carried by error frames.
ERR_VERSION_MISMATCH = "version_mismatch"
ERR_ROLE_CLAIMED = "role_claimed"
ERR_DUPLICATE_FEDERATE = "duplicate_federate"
ERR_UNDECLARED_ATTRIBUTE = "undeclared_attribute"
ERR_GATE_CLOSED = "gate_closed"
ERR_STALE_UPDATE = "stale_update"
ERR_OUT_OF_ORDER = "out_of_order"
ERR_INCOMPLETE_PUBLICATION = "incomplete_publication"
ERR_MALFORMED = "malformed"

_LENGTH = struct.Struct(">I")
MAX_FRAME_BYTES = 1 << 24


class ProtocolError(ValueError):
    """A frame that cannot be decoded or fails structural validation."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def canonical_json(message: Mapping) -> str:
    return json.dumps(message, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def encode_frame(message: Mapping) -> bytes:
    body = canonical_json(message).encode("utf-8")
    if len(body) > MAX_FRAME_BYTES:
        raise ProtocolError(ERR_MALFORMED, "frame exceeds size limit")
    return _LENGTH.pack(len(body)) + body


def _need(message: dict, key: str, kinds, label: str):
    if key not in message:
        raise ProtocolError(ERR_MALFORMED, f"missing field {key!r}")
    value = message[key]
    # bool passes isinstance(int) but is never a valid count or number here
    if isinstance(value, bool) and kinds is not bool:
        raise ProtocolError(ERR_MALFORMED, f"field {key!r} must be {label}")
    if not isinstance(value, kinds):
        raise ProtocolError(ERR_MALFORMED, f"field {key!r} must be {label}")
    return value


_TIME_FIELDS = (("year", int, "an integer"), ("iteration", int, "an integer"))

_KIND_FIELDS: dict[str, tuple] = {
    KIND_JOIN: (("role", str, "a string"), ("publishes", list, "a list"),
                ("subscribes", list, "a list")),
    KIND_JOIN_ACK: (("role", str, "a string"), ("variant", str, "a string"),
                    ("iterationsPerYear", int, "an integer"),
                    ("scenario", dict, "an object")),
    KIND_INIT: (),
    KIND_EXECUTE: (),
    KIND_GATE_STATE: (("rolesPresent", list, "a list"),
                      ("initialized", list, "a list"),
                      ("executeRequested", list, "a list"),
                      ("gateOpen", bool, "a boolean"),
                      ("running", bool, "a boolean"),
                      ("exchangesCompleted", int, "an integer")),
    KIND_ATTR_UPDATE: (("className", str, "a string"),
                       ("objectName", str, "a string"),
                       ("attribute", str, "a string"),
                       ("value", (int, float), "a number"),
                       ("units", str, "a string")) + _TIME_FIELDS,
    KIND_TIME_REQUEST: _TIME_FIELDS,
    KIND_TIME_GRANT: _TIME_FIELDS,
    KIND_RESIGN: (),
    KIND_ERROR: (("code", str, "a string"), ("message", str, "a string")),
}


def validate_message(message) -> str:
    """Structural check; returns the message kind or raises ProtocolError."""
    if not isinstance(message, dict):
        raise ProtocolError(ERR_MALFORMED, "frame body must be a JSON object")
    kind = _need(message, "kind", str, "a string")
    if kind not in KINDS:
        raise ProtocolError(ERR_MALFORMED, f"unknown message kind {kind!r}")
    _need(message, "protocolVersion", int, "an integer")
    fid = _need(message, "federateId", str, "a string")
    if not fid:
        raise ProtocolError(ERR_MALFORMED, "federateId must be non-empty")
    for key, kinds, label in _KIND_FIELDS[kind]:
        _need(message, key, kinds, label)
    if kind == KIND_ATTR_UPDATE and not math.isfinite(message["value"]):
        raise ProtocolError(ERR_MALFORMED, "attribute value must be finite")
    if kind == KIND_JOIN:
        for field in ("publishes", "subscribes"):
            for pair in message[field]:
                if (not isinstance(pair, list) or len(pair) != 2
                        or not all(isinstance(p, str) for p in pair)):
                    raise ProtocolError(
                        ERR_MALFORMED,
                        f"{field} entries must be [className, attribute] pairs")
    return kind


class FrameDecoder:
    """Incremental frame parser for one connection."""

    def __init__(self):
        self._buffer = bytearray()

    def feed(self, data: bytes) -> list[dict]:
        """Absorb bytes, return every complete validated message."""
        self._buffer.extend(data)
        messages = []
        while True:
            if len(self._buffer) < _LENGTH.size:
                return messages
            (length,) = _LENGTH.unpack_from(self._buffer)
            if length > MAX_FRAME_BYTES:
                raise ProtocolError(ERR_MALFORMED, "frame exceeds size limit")
            end = _LENGTH.size + length
            if len(self._buffer) < end:
                return messages
            body = bytes(self._buffer[_LENGTH.size:end])
            del self._buffer[:end]
            try:
                message = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ProtocolError(ERR_MALFORMED, f"undecodable frame: {exc}")
            validate_message(message)
            messages.append(message)


# --- frame builders --------------------------------------------------------
# Pairs are serialized as sorted [className, attribute] lists so that a
# given declaration always produces the same bytes.

def _pairs(pairs: Iterable[tuple[str, str]]) -> list[list[str]]:
    return [list(p) for p in sorted(pairs)]


def join_frame(federate_id: str, role: str,
               publishes: Iterable[tuple[str, str]],
               subscribes: Iterable[tuple[str, str]]) -> dict:
    return {"kind": KIND_JOIN, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id, "role": role,
            "publishes": _pairs(publishes), "subscribes": _pairs(subscribes)}


def join_ack_frame(federate_id: str, role: str, variant: str,
                   iterations_per_year: int, scenario: Mapping) -> dict:
    return {"kind": KIND_JOIN_ACK, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id, "role": role, "variant": variant,
            "iterationsPerYear": iterations_per_year,
            "scenario": scenario}


def init_frame(federate_id: str) -> dict:
    return {"kind": KIND_INIT, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id}


def execute_frame(federate_id: str) -> dict:
    return {"kind": KIND_EXECUTE, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id}


def gate_state_frame(roles_present, initialized, execute_requested,
                     gate_open: bool, running: bool,
                     exchanges_completed: int) -> dict:
    return {"kind": KIND_GATE_STATE, "protocolVersion": PROTOCOL_VERSION,
            "federateId": COORDINATOR_ID,
            "rolesPresent": sorted(roles_present),
            "initialized": sorted(initialized),
            "executeRequested": sorted(execute_requested),
            "gateOpen": gate_open, "running": running,
            "exchangesCompleted": exchanges_completed}


def attr_update_frame(federate_id: str, class_name: str, object_name: str,
                      attribute: str, value: float, units: str,
                      year: int, iteration: int) -> dict:
    return {"kind": KIND_ATTR_UPDATE, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id, "className": class_name,
            "objectName": object_name, "attribute": attribute,
            "value": value, "units": units, "year": year,
            "iteration": iteration}


def time_request_frame(federate_id: str, year: int, iteration: int) -> dict:
    return {"kind": KIND_TIME_REQUEST, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id, "year": year, "iteration": iteration}


def time_grant_frame(year: int, iteration: int) -> dict:
    return {"kind": KIND_TIME_GRANT, "protocolVersion": PROTOCOL_VERSION,
            "federateId": COORDINATOR_ID, "year": year, "iteration": iteration}


def resign_frame(federate_id: str) -> dict:
    return {"kind": KIND_RESIGN, "protocolVersion": PROTOCOL_VERSION,
            "federateId": federate_id}


def error_frame(code: str, message: str) -> dict:
    return {"kind": KIND_ERROR, "protocolVersion": PROTOCOL_VERSION,
            "federateId": COORDINATOR_ID, "code": code, "message": message}
