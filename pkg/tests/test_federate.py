"""Threaded federation runs reproduce the in-process engine exactly.

Barrier interleaving makes the byte streams timing-dependent here, so
these tests compare merged ledgers and reports, which are delivery-order
independent; byte-level checks live with the scripted sessions.
"""

from __future__ import annotations

import socket
import threading

import pytest

from sipg import fom
from sipg.engine import compute_reports, run_simulation
from sipg.scenario import build_scenario, default_document, parse_plan
from sipg.federation import (FederationCoordinator, FederationError,
                             SectorFederate, protocol as wire)

HORIZON = {"start": 1950, "planStart": 1955, "end": 1975}

PLAN_DOC = {"formatVersion": 1, "elements": [
    {"id": "plan-field", "template": "largeField", "origin": "rural",
     "destination": "rural", "commissionStart": 1958},
    {"id": "plan-desal", "template": "largeDesalination", "origin": "urban",
     "destination": "urban", "commissionStart": 1960},
    {"id": "plan-pipe", "template": "smallPipeline", "origin": "industrial",
     "destination": "rural", "commissionStart": 1959},
    {"id": "plan-solar", "template": "largeSolar", "origin": "industrial",
     "destination": "industrial", "commissionStart": 1962},
]}


def make_document():
    doc = default_document()
    doc["horizon"] = dict(HORIZON)
    return doc


class Federation:
    """Coordinator on a serve thread, one socketpair client per role."""

    def __init__(self, document, plan=(), variant="1A"):
        self.coordinator = FederationCoordinator(document, variant=variant)
        self.stop = threading.Event()
        self.federates: dict[str, SectorFederate] = {}
        for role in fom.SECTOR_ROLES:
            mine, theirs = socket.socketpair()
            self.coordinator.attach(theirs)
            self.federates[role] = SectorFederate(mine, role, f"{role}-1", plan)
        self.thread = threading.Thread(target=self.coordinator.serve,
                                       args=(self.stop,), daemon=True)
        self.thread.start()

    def join_all(self):
        for fed in self.federates.values():
            fed.join()

    def run_once(self):
        errors: list[Exception] = []

        def go(fed):
            try:
                fed.participate_once()
            except Exception as exc:
                errors.append(exc)

        threads = [threading.Thread(target=go, args=(f,), daemon=True)
                   for f in self.federates.values()]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=60)
        assert not any(t.is_alive() for t in threads), "federate thread hung"
        if errors:
            raise errors[0]

    def merged(self, index=0):
        merged = self.coordinator.completed_ledgers[index].copy()
        for fed in self.federates.values():
            merged.merge(fed.ledgers[index])
        return merged

    def close(self):
        self.stop.set()
        self.thread.join(timeout=10)
        self.coordinator.close()
        for fed in self.federates.values():
            fed.client.close()


def test_federated_run_matches_monolithic():
    doc = make_document()
    scenario = build_scenario(doc)
    plan = parse_plan(PLAN_DOC, scenario)
    federation = Federation(doc, plan)
    try:
        federation.join_all()
        assert federation.federates["water"].scenario == scenario
        federation.run_once()
        merged = federation.merged()
        result = run_simulation(scenario, plan)
        assert merged.equals(result.ledger)
        assert compute_reports(merged, scenario) == result.reports
    finally:
        federation.close()


def test_internals_never_reach_the_coordinator():
    federation = Federation(make_document())
    try:
        federation.join_all()
        federation.run_once()
        # the coordinator holds published series plus its own societal
        # internals; sector internals stay with their owners
        for (_, _, _, series), _v in federation.coordinator.completed_ledgers[0].items():
            assert (fom.published_attribute(series) is not None
                    or series.startswith("societal.")), series
        ag = federation.federates["agriculture"].ledgers[0]
        assert any(series in fom.INTERNAL_KEYS
                   for (_, _, _, series), _v in ag.items())
        for (_, _, _, series), _v in ag.items():
            assert series.startswith("agriculture.")
    finally:
        federation.close()


def test_repeated_executions_each_need_initialization():
    doc = make_document()
    federation = Federation(doc)
    try:
        federation.join_all()
        for _ in range(3):
            federation.run_once()
        assert federation.coordinator.exchanges == 3
        baseline = run_simulation(build_scenario(doc))
        for index in range(3):
            assert federation.merged(index).equals(baseline.ledger)
    finally:
        federation.close()


def test_execute_without_initialize_is_rejected():
    federation = Federation(make_document())
    try:
        federation.join_all()
        fed = federation.federates["energy"]
        fed.execute()
        with pytest.raises(FederationError) as err:
            fed.wait_gate(running=True)
        assert err.value.code == wire.ERR_GATE_CLOSED
    finally:
        federation.close()


def test_disconnect_mid_run_aborts_for_everyone():
    federation = Federation(make_document())
    try:
        federation.join_all()
        water = federation.federates["water"]
        survivors = [federation.federates["agriculture"],
                     federation.federates["energy"]]
        errors: list[Exception] = []

        def quit_after_first_request():
            water.initialize()
            water.wait_gate(gate_open=True)
            water.execute()
            water.wait_gate(running=True)
            water.client.send(wire.time_request_frame("water-1", 1950, 1))
            water.client.close()

        def survive(fed):
            try:
                fed.participate_once()
            except FederationError as exc:
                errors.append(exc)

        threads = [threading.Thread(target=quit_after_first_request,
                                    daemon=True)]
        threads += [threading.Thread(target=survive, args=(f,), daemon=True)
                    for f in survivors]
        for t in threads:
            t.start()
        for t in threads:
            t.join(timeout=30)
        assert not any(t.is_alive() for t in threads), "a thread hung"
        assert len(errors) == 2  # both survivors saw the abort
        assert federation.coordinator.exchanges == 0
        assert federation.coordinator.completed_ledgers == []
    finally:
        federation.close()


def test_run_before_join_fails():
    mine, theirs = socket.socketpair()
    fed = SectorFederate(mine, "water", "water-1")
    with pytest.raises(RuntimeError):
        fed.run()
    mine.close()
    theirs.close()
