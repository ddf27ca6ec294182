"""Frame codec and message validation."""

import pytest

from sipg.federation import protocol as wire
from sipg.federation.protocol import FrameDecoder, ProtocolError, encode_frame


def test_round_trip():
    frame = wire.attr_update_frame("water-1", "WaterSystem", "urban",
                                   "Electricity In", 0.675, "TWh", 1950, 2)
    decoder = FrameDecoder()
    (message,) = decoder.feed(encode_frame(frame))
    assert message == frame


def test_canonical_bytes_ignore_key_order():
    a = {"kind": "init", "protocolVersion": 1, "federateId": "x"}
    b = {"federateId": "x", "kind": "init", "protocolVersion": 1}
    assert encode_frame(a) == encode_frame(b)


def test_byte_at_a_time_reassembly():
    frames = [wire.init_frame("a"), wire.time_request_frame("a", 1950, 1),
              wire.resign_frame("a")]
    blob = b"".join(encode_frame(f) for f in frames)
    decoder = FrameDecoder()
    seen = []
    for i in range(len(blob)):
        seen.extend(decoder.feed(blob[i:i + 1]))
    assert seen == frames


def test_multiple_frames_in_one_read():
    frames = [wire.execute_frame("a"), wire.time_grant_frame(1950, 4)]
    decoder = FrameDecoder()
    assert decoder.feed(b"".join(encode_frame(f) for f in frames)) == frames


def test_unknown_kind_rejected():
    bad = {"kind": "warp", "protocolVersion": 1, "federateId": "a"}
    with pytest.raises(ProtocolError) as err:
        FrameDecoder().feed(encode_frame(bad))
    assert err.value.code == wire.ERR_MALFORMED


def test_missing_field_rejected():
    bad = {"kind": "time_request", "protocolVersion": 1, "federateId": "a",
           "year": 1950}  # no iteration
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(encode_frame(bad))


def test_non_object_body_rejected():
    body = b"[1,2,3]"
    blob = len(body).to_bytes(4, "big") + body
    with pytest.raises(ProtocolError) as err:
        FrameDecoder().feed(blob)
    assert err.value.code == wire.ERR_MALFORMED


def test_undecodable_json_rejected():
    body = b"{nope"
    blob = len(body).to_bytes(4, "big") + body
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(blob)


def test_nonfinite_value_rejected():
    # crafted by hand because the encoder itself refuses NaN
    body = (b'{"attribute":"Water In","className":"AgricultureSystem",'
            b'"federateId":"a","iteration":1,"kind":"attr_update",'
            b'"objectName":"urban","protocolVersion":1,"units":"MCM",'
            b'"value":Infinity,"year":1950}')
    blob = len(body).to_bytes(4, "big") + body
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(blob)


def test_boolean_is_not_a_number():
    frame = wire.time_request_frame("a", 1950, 1)
    frame["year"] = True
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(encode_frame(frame))


def test_oversized_frame_rejected():
    blob = (wire.MAX_FRAME_BYTES + 1).to_bytes(4, "big")
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(blob)


def test_empty_federate_id_rejected():
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(encode_frame(wire.init_frame("")))


def test_join_pairs_sorted_and_checked():
    frame = wire.join_frame("a", "water",
                            publishes=[("WaterSystem", "Water Out (Societal)"),
                                       ("WaterSystem", "Electricity In")],
                            subscribes=[])
    assert frame["publishes"] == [["WaterSystem", "Electricity In"],
                                  ["WaterSystem", "Water Out (Societal)"]]
    bad = dict(frame, publishes=[["WaterSystem"]])
    with pytest.raises(ProtocolError):
        FrameDecoder().feed(encode_frame(bad))


def test_gate_state_sorts_role_lists():
    frame = wire.gate_state_frame(
        roles_present=("water", "agriculture"), initialized=("water",),
        execute_requested=(), gate_open=False, running=False,
        exchanges_completed=0)
    assert frame["rolesPresent"] == ["agriculture", "water"]
    assert frame["federateId"] == "coordinator"
