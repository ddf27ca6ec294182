"""Agriculture dispatch: hand-worked cases, constraints, oracle sweep."""

import numpy as np
import pytest

from oracles import (active, field_template, make_node, oracle_minimum,
                     random_agriculture_instance, road_template)
from sipg import agriculture


def _field(cap=100.0, variable=10.0, yield_tj=2.0, water=0.5, labor=3.0):
    return field_template(variable=variable, yield_tj_per_km2=yield_tj,
                          cap_km2=cap, water_mcm_per_km2=water,
                          labor_per_km2=labor)


def test_partial_field_meets_demand():
    # field: 10 $/km2 plus 0.5 MCM/km2 at 0.05 $/m3 -> 25010 $/km2,
    # 2000 GJ/km2 yield; cheaper than importing at 70 $/GJ
    node = make_node("n0", food_export=1.0)
    el = active(_field(), "n0")
    dec = agriculture.dispatch([el], {"n0": 100000.0}, [node], {"n0": 1.0})
    assert dec.land_use[el.id] == pytest.approx(50.0, rel=1e-12)
    assert dec.imports["n0"] == pytest.approx(0.0, abs=1e-9)
    assert dec.exports["n0"] == pytest.approx(0.0, abs=1e-9)
    assert dec.objective_value == pytest.approx(50.0 * 25010.0, rel=1e-12)


def test_profitable_exports_fill_capacity():
    # marginal growing cost is 12.505 $/GJ; exporting at 20 pays
    node = make_node("n0", food_export=20.0)
    el = active(_field(), "n0")
    dec = agriculture.dispatch([el], {"n0": 100000.0}, [node], {"n0": 1.0})
    assert dec.land_use[el.id] == pytest.approx(100.0, rel=1e-12)
    assert dec.exports["n0"] == pytest.approx(100000.0, rel=1e-12)
    assert dec.objective_value == pytest.approx(
        100.0 * 25010.0 - 20.0 * 100000.0, rel=1e-12)


def test_labor_constraint_binds():
    # 3 workers/km2 against 30 available caps land at 10 km2
    node = make_node("n0", labor_fraction=3.0e-5, food_export=1.0)
    el = active(_field(), "n0")
    dec = agriculture.dispatch([el], {"n0": 100000.0}, [node], {"n0": 1.0})
    assert dec.land_use[el.id] == pytest.approx(10.0, rel=1e-9)
    assert dec.imports["n0"] == pytest.approx(80000.0, rel=1e-9)
    assert dec.objective_value == pytest.approx(
        10.0 * 25010.0 + 80000.0 * 70.0, rel=1e-9)


def test_arable_land_binds_across_fields():
    node = make_node("n0", arable_km2=30.0, food_export=1.0)
    a = active(_field(), "n0")
    b = active(_field(variable=12.0), "n0")
    dec = agriculture.dispatch([a, b], {"n0": 100000.0}, [node], {"n0": 1.0})
    used = dec.land_use[a.id] + dec.land_use[b.id]
    assert used == pytest.approx(30.0, rel=1e-9)
    # cheaper field carries all of it
    assert dec.land_use[a.id] == pytest.approx(30.0, rel=1e-9)
    assert dec.imports["n0"] == pytest.approx(40000.0, rel=1e-9)


def test_road_ships_cheap_production():
    origin = make_node("n0", food_export=0.001)
    dest = make_node("n1", food_export=0.001)
    f = active(_field(variable=10.0, water=0.0, labor=0.0), "n0")
    r = active(road_template(variable=0.5, cap_gj=1.0e6, efficiency=0.8), "n0", "n1")
    dec = agriculture.dispatch([f, r], {"n0": 0.0, "n1": 80000.0},
                               [origin, dest], {"n0": 1.0, "n1": 1.0})
    assert dec.transport[r.id] == pytest.approx(100000.0, rel=1e-9)
    assert dec.land_use[f.id] == pytest.approx(50.0, rel=1e-9)
    assert dec.objective_value == pytest.approx(50.0 * 10.0 + 100000.0 * 0.5,
                                                rel=1e-9)
    supplied = agriculture.food_supplied(dec, [f, r], [origin, dest])
    assert supplied["n1"] == pytest.approx(80000.0, rel=1e-9)
    assert supplied["n0"] == pytest.approx(0.0, abs=1e-7)


def test_import_only_when_nothing_is_built():
    node = make_node("n0")
    dec = agriculture.dispatch([], {"n0": 5000.0}, [node], {"n0": 1.0})
    assert dec.imports["n0"] == pytest.approx(5000.0, rel=1e-12)
    assert dec.objective_value == pytest.approx(350000.0, rel=1e-12)


def test_irrigation_demand_tracks_land_use():
    node = make_node("n0", food_export=1.0)
    el = active(_field(), "n0")
    dec = agriculture.dispatch([el], {"n0": 100000.0}, [node], {"n0": 1.0})
    water = agriculture.irrigation_demand(dec, [el])
    assert water["n0"] == pytest.approx(0.5 * 50.0, rel=1e-12)


def test_revenue_local_sales_minus_costs():
    node = make_node("n0", food_export=1.0)
    el = active(_field(), "n0")
    demand = {"n0": 100000.0}
    dec = agriculture.dispatch([el], demand, [node], {"n0": 1.0})
    rev = agriculture.revenue(dec, demand, [el], [], [node])
    assert rev["n0"] == pytest.approx(60.0 * 100000.0 - 25010.0 * 50.0, rel=1e-12)


def test_revenue_road_settles_between_nodes():
    origin = make_node("n0", food_export=0.001)
    dest = make_node("n1", food_export=0.001)
    f = active(_field(variable=10.0, water=0.0, labor=0.0), "n0")
    r = active(road_template(variable=0.5, cap_gj=1.0e6, efficiency=0.8), "n0", "n1")
    demand = {"n0": 0.0, "n1": 80000.0}
    dec = agriculture.dispatch([f, r], demand, [origin, dest],
                               {"n0": 1.0, "n1": 1.0})
    rev = agriculture.revenue(dec, demand, [f, r], [], [origin, dest])
    settle = 60.0 * 0.8 * 100000.0
    assert rev["n0"] == pytest.approx(settle - 10.0 * 50.0 - 0.5 * 100000.0, rel=1e-9)
    assert rev["n1"] == pytest.approx(60.0 * 80000.0 - settle, abs=1e-6)


def test_commissioning_elements_only_cost_capital():
    node = make_node("n0")
    tpl = field_template(cap_km2=100.0)
    building = active(tpl, "n0")
    building = type(building)(building.instance,
                              tpl.__class__(**{**tpl.__dict__,
                                               "capital_millions": 7.0}))
    rev = agriculture.revenue(
        agriculture.dispatch([], {"n0": 0.0}, [node], {"n0": 1.0}),
        {"n0": 0.0}, [], [building], [node])
    assert rev["n0"] == pytest.approx(-7.0e6, rel=1e-12)


def test_oracle_sweep():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        elements, demand, nodes, ovars, onodes = random_agriculture_instance(rng)
        dec = agriculture.dispatch(elements, demand, nodes,
                                   {n.id: 1.0 for n in nodes})
        oracle = oracle_minimum(ovars, onodes)
        assert dec.objective_value == pytest.approx(oracle, rel=1e-6, abs=1e-6)
