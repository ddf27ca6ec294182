"""Live session runner: role-keyed controls around a real federation."""

import pytest

from sipg import fom
from sipg.engine import run_simulation
from sipg.federation.exchange import parse_flows_text
from sipg.runner import SessionRunner
from sipg.scenario import default_document, parse_plan
from sipg.session import (SessionError, compute_process_metrics, replay)

HORIZON = {"start": 1950, "planStart": 1955, "end": 1970}

FIELD = {"id": "f1", "template": "largeField", "origin": "rural",
         "destination": "rural", "commissionStart": 1958}
DESAL = {"id": "d1", "template": "largeDesalination", "origin": "urban",
         "destination": "urban", "commissionStart": 1960}
WELL = {"id": "w1", "template": "largeWell", "origin": "industrial",
        "destination": "industrial", "commissionStart": 1960}
SOLAR = {"id": "s1", "template": "largeSolar", "origin": "industrial",
         "destination": "industrial", "commissionStart": 1962}


def make_document():
    document = default_document()
    document["horizon"] = dict(HORIZON)
    return document


@pytest.fixture
def runner():
    live = SessionRunner(make_document(), session_id="live-test")
    live.start()
    yield live
    live.close()


def test_round_matches_monolithic_run(runner):
    runner.add_element("agriculture", FIELD)
    runner.add_element("water", DESAL)
    runner.add_element("energy", SOLAR)
    outcome = runner.execute_all()

    plan = parse_plan({"formatVersion": 1, "elements": [FIELD, DESAL, SOLAR]},
                      runner.scenario)
    mono = run_simulation(runner.scenario, plan)
    assert outcome.ledger.equals(mono.ledger)
    assert outcome.final_report == mono.final_report
    assert outcome.reports == mono.reports

    kinds = [e["kind"] for e in runner.log.events]
    assert kinds == ["element_added"] * 3 + ["initialize"] * 3 + ["execute"]
    assert runner.log.executions[-1]["mode"] == "joint"


def test_two_rounds_with_an_edit_between(runner):
    runner.add_element("agriculture", FIELD)
    first = runner.execute_all()
    runner.edit_element("agriculture", dict(FIELD, commissionStart=1963))
    second = runner.execute_all()
    assert first.final_report != second.final_report
    assert [o.index for o in runner.executions] == [0, 1]

    metrics = compute_process_metrics(runner.log)
    assert metrics.num_exchanges == 2
    assert metrics.simulations == {"agriculture": 2, "water": 2, "energy": 2}

    # the log alone is enough to audit both rounds
    out = replay(runner.log, runner.document)
    assert out.reports == (first.final_report, second.final_report)
    assert out.ledger.equals(second.ledger)


def test_plan_ownership_is_enforced(runner):
    with pytest.raises(SessionError) as err:
        runner.add_element("water", FIELD)
    assert err.value.code == "forbidden"

    runner.add_element("agriculture", FIELD)
    with pytest.raises(SessionError) as err:
        runner.edit_element("energy", dict(FIELD, commissionStart=1960))
    assert err.value.code == "forbidden"
    with pytest.raises(SessionError) as err:
        runner.remove_element("water", "f1")
    assert err.value.code == "forbidden"

    # energy holds both fuel and power infrastructure
    runner.add_element("energy", WELL)
    runner.add_element("energy", SOLAR)
    runner.remove_element("energy", "s1")
    with pytest.raises(SessionError) as err:
        runner.add_element("water", dict(WELL, id="w2"))
    assert err.value.code == "forbidden"

    with pytest.raises(SessionError) as err:
        runner.add_element("banker", DESAL)
    assert err.value.code == "malformed"
    with pytest.raises(SessionError) as err:
        runner.add_element("agriculture", FIELD)       # duplicate id
    assert err.value.code == "malformed"
    with pytest.raises(SessionError) as err:
        runner.edit_element("water", DESAL)            # never added
    assert err.value.code == "malformed"


def test_plan_edits_confined_to_plan_window(runner):
    with pytest.raises(SessionError, match="plan window"):
        runner.add_element("agriculture", dict(FIELD, commissionStart=1954))
    runner.add_element("agriculture", FIELD)
    with pytest.raises(SessionError, match="plan window"):
        runner.edit_element("agriculture", dict(FIELD, commissionStart=1940))
    # the window opens at planStart itself
    runner.edit_element("agriculture", dict(FIELD, commissionStart=1955))
    with pytest.raises(SessionError) as err:
        runner.remove_element("water", "d1")
    assert err.value.code == "malformed"


def test_edits_freeze_while_a_round_is_pending(runner):
    with pytest.raises(SessionError) as err:
        runner.request_execute("agriculture")
    assert err.value.code == "gate_closed"

    for role in fom.SECTOR_ROLES:
        runner.initialize(role)
    runner.request_execute("agriculture")
    assert runner.busy

    with pytest.raises(SessionError) as err:
        runner.add_element("agriculture", FIELD)
    assert err.value.code == "busy"
    with pytest.raises(SessionError) as err:
        runner.request_execute("agriculture")
    assert err.value.code == "busy"
    with pytest.raises(SessionError) as err:
        runner.initialize("agriculture")
    assert err.value.code == "busy"
    # roles without a pending request may still initialize
    runner.initialize("water")

    runner.request_execute("water")
    runner.request_execute("energy")
    outcome = runner.wait_round()
    assert outcome.index == 0
    assert not runner.busy
    runner.add_element("agriculture", FIELD)


def test_flows_export_from_the_last_round(runner):
    with pytest.raises(SessionError) as err:
        runner.export_flows("agriculture")
    assert err.value.code == "malformed"

    runner.execute_all()
    text = runner.export_flows("agriculture")
    doc = parse_flows_text(text)
    assert doc.role == "agriculture"
    assert runner.log.events[-1]["kind"] == "export_flows"
    assert runner.log.events[-1]["role"] == "agriculture"


def test_runner_requires_start():
    live = SessionRunner(make_document())
    try:
        for call in (lambda: live.add_element("agriculture", FIELD),
                     lambda: live.initialize("water"),
                     lambda: live.request_execute("water")):
            with pytest.raises(SessionError) as err:
                call()
            assert err.value.code == "closed"
        channel = live.make_channel()    # observers attach before start
        channel.close()
        live.start()
        with pytest.raises(SessionError) as err:
            live.make_channel()
        assert err.value.code == "closed"
    finally:
        live.close()
