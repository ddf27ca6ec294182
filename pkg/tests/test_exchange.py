"""Flow-file export, parsing, and decoupled boundary overrides."""

from __future__ import annotations

import pytest

from sipg import fom
from sipg.engine import run_simulation
from sipg.scenario import build_scenario, default_document, parse_plan
from sipg.federation.exchange import (ExchangeError, FlowsDocument,
                                      boundary_overrides, export_flows_text,
                                      parse_flows_text)
from sipg.federation.federate import MODEL_CLASSES


def small_scenario():
    doc = default_document()
    doc["horizon"] = {"start": 1950, "planStart": 1955, "end": 1970}
    return build_scenario(doc)


PLAN_DOC = {"formatVersion": 1, "elements": [
    {"id": "plan-field", "template": "largeField", "origin": "rural",
     "destination": "rural", "commissionStart": 1958},
    {"id": "plan-desal", "template": "largeDesalination", "origin": "urban",
     "destination": "urban", "commissionStart": 1960},
    {"id": "plan-well", "template": "smallWell", "origin": "industrial",
     "destination": "industrial", "commissionStart": 1957},
    {"id": "plan-solar", "template": "largeSolar", "origin": "industrial",
     "destination": "industrial", "commissionStart": 1962},
]}


@pytest.fixture(scope="module")
def synchronized():
    scenario = small_scenario()
    plan = parse_plan(PLAN_DOC, scenario)
    return scenario, plan, run_simulation(scenario, plan)


def counterpart_docs(scenario, ledger, role):
    return [parse_flows_text(export_flows_text(ledger, scenario, other))
            for other in fom.SECTOR_ROLES if other != role]


def own_plan(scenario, plan, role):
    sectors = MODEL_CLASSES[role].sectors
    return tuple(e for e in plan
                 if scenario.templates[e.template].sector in sectors)


# --- format ------------------------------------------------------------------

def test_export_parses_back_exactly(synchronized):
    scenario, _plan, result = synchronized
    for role in fom.SECTOR_ROLES:
        text = export_flows_text(result.ledger, scenario, role)
        assert text.startswith(f"sipg-flows 1 {role}\n")
        doc = parse_flows_text(text)
        assert doc.role == role and doc.version == 1
        for (cls, attr), units in fom.ATTRIBUTES.items():
            key = fom.flow_key(cls, attr)
            for node in scenario.node_ids:
                series = doc.series[(cls, attr, node)]
                for year in scenario.horizon.years:
                    assert series[year] == result.ledger.annual(year, node, key)


def test_export_is_byte_stable(synchronized):
    scenario, _plan, result = synchronized
    a = export_flows_text(result.ledger, scenario, "water")
    b = export_flows_text(result.ledger, scenario, "water")
    assert a == b


def test_unknown_export_role(synchronized):
    scenario, _plan, result = synchronized
    with pytest.raises(ValueError):
        export_flows_text(result.ledger, scenario, "observer")


def test_version_mismatch():
    with pytest.raises(ExchangeError) as err:
        parse_flows_text("sipg-flows 2 water\nyear,className,objectName,"
                         "attribute,value,units\n")
    assert err.value.code == "version_mismatch"


@pytest.mark.parametrize("text,needle", [
    ("", "empty"),
    ("sipg-flows 1\n", "first line"),
    ("other-format 1 water\n", "first line"),
    ("sipg-flows one water\n", "version"),
    ("sipg-flows 1 banker\n", "role"),
    ("sipg-flows 1 water\nyear,class,object\n", "header"),
    ("sipg-flows 1 water\nyear,className,objectName,attribute,value,units\n"
     "1950,WaterSystem,urban,Cloud Seeding,1.0,MCM\n", "unknown attribute"),
    ("sipg-flows 1 water\nyear,className,objectName,attribute,value,units\n"
     "1950,WaterSystem,urban,Water Out (Societal),1.0,GJ\n", "units"),
    ("sipg-flows 1 water\nyear,className,objectName,attribute,value,units\n"
     "soon,WaterSystem,urban,Water Out (Societal),1.0,MCM\n", "unreadable"),
    ("sipg-flows 1 water\nyear,className,objectName,attribute,value,units\n"
     "1950,WaterSystem,urban,Water Out (Societal),much,MCM\n", "unreadable"),
    ("sipg-flows 1 water\nyear,className,objectName,attribute,value,units\n"
     "1950,WaterSystem,urban,Water Out (Societal),inf,MCM\n", "finite"),
    ("sipg-flows 1 water\nyear,className,objectName,attribute,value,units\n"
     "1950,WaterSystem,urban,Water Out (Societal),1.0,MCM\n"
     "1950,WaterSystem,urban,Water Out (Societal),2.0,MCM\n", "duplicate"),
])
def test_malformed_documents(text, needle):
    with pytest.raises(ExchangeError) as err:
        parse_flows_text(text)
    assert err.value.code == "malformed"
    assert needle in str(err.value)


# --- boundary overrides ---------------------------------------------------

def test_overrides_require_complete_coverage(synchronized):
    scenario, _plan, result = synchronized
    doc = parse_flows_text(export_flows_text(result.ledger, scenario,
                                             "agriculture"))
    series = {k: dict(v) for k, v in doc.series.items()}
    del series[("AgricultureSystem", "Water In", "urban")][1961]
    gappy = FlowsDocument(role="agriculture", version=1, series=series)
    with pytest.raises(ExchangeError) as err:
        boundary_overrides([gappy], scenario)
    assert err.value.code == "malformed"
    assert "'Water In'" in str(err.value)
    assert "1961" in str(err.value) and "urban" in str(err.value)


def test_two_documents_for_one_role_rejected(synchronized):
    scenario, _plan, result = synchronized
    doc = parse_flows_text(export_flows_text(result.ledger, scenario, "water"))
    with pytest.raises(ExchangeError) as err:
        boundary_overrides([doc, doc], scenario)
    assert "water" in str(err.value)


def test_overrides_cover_only_exporting_roles_classes(synchronized):
    scenario, _plan, result = synchronized
    doc = parse_flows_text(export_flows_text(result.ledger, scenario,
                                             "energy"))
    ov = boundary_overrides([doc], scenario)
    assert ov.classes == {"PetroleumSystem", "ElectricalSystem"}


# --- decoupled local runs ---------------------------------------------------

def test_imported_flows_reproduce_synchronized_run(synchronized):
    """With counterpart flows from a synchronized run of the same plans,
    each role's local run reproduces every published annual series and
    its own sector's full record exactly."""
    scenario, plan, sync = synchronized
    for role in fom.SECTOR_ROLES:
        docs = counterpart_docs(scenario, sync.ledger, role)
        local = run_simulation(scenario, own_plan(scenario, plan, role),
                               boundary_overrides(docs, scenario))
        for (cls, attr) in fom.ATTRIBUTES:
            key = fom.flow_key(cls, attr)
            for node in scenario.node_ids:
                for year in scenario.horizon.years:
                    assert local.ledger.annual(year, node, key) == \
                        sync.ledger.annual(year, node, key), (role, key, year)
        for (year, it, node, series), value in sync.ledger.items():
            if fom.role_of_key(series) == role:
                assert local.ledger.get(year, it, node, series) == value


def test_full_plan_with_imports_reproduces_reports(synchronized):
    scenario, plan, sync = synchronized
    docs = counterpart_docs(scenario, sync.ledger, "agriculture")
    local = run_simulation(scenario, plan, boundary_overrides(docs, scenario))
    assert local.reports == sync.reports
    assert local.budget_violations == sync.budget_violations


def test_counterpart_changes_show_up(synchronized):
    """Importing flows from a different counterpart plan changes the
    local picture; the water role sees agriculture's no-plan demand."""
    scenario, plan, sync = synchronized
    bare = run_simulation(scenario)
    docs = [parse_flows_text(export_flows_text(bare.ledger, scenario, other))
            for other in ("agriculture", "energy")]
    local = run_simulation(scenario, own_plan(scenario, plan, "water"),
                           boundary_overrides(docs, scenario))
    key = fom.flow_key("AgricultureSystem", "Water In")
    year = scenario.horizon.end
    differs = any(
        local.ledger.annual(year, n, key) != sync.ledger.annual(year, n, key)
        for n in scenario.node_ids)
    assert differs
