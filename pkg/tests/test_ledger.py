"""Ledger recording rules, merge semantics, and derived traces."""

import pytest

from sipg.ledger import (FlowLedger, LedgerError, budget_violation_years,
                         capital_by_year, currency_trace)


def test_unknown_series_rejected():
    led = FlowLedger(4)
    with pytest.raises(LedgerError):
        led.record(2000, 1, "n0", "agriculture.moon_output", 1.0)


def test_iteration_range_enforced():
    led = FlowLedger(4)
    with pytest.raises(LedgerError):
        led.record(2000, 5, "n0", "agriculture.food_production", 1.0)
    with pytest.raises(LedgerError):
        led.record(2000, 0, "n0", "agriculture.food_production", 1.0)


def test_duplicate_record_is_an_error():
    led = FlowLedger(4)
    led.record(2000, 1, "n0", "agriculture.food_production", 1.0)
    with pytest.raises(LedgerError):
        led.record(2000, 1, "n0", "agriculture.food_production", 1.0)


def test_solver_noise_clamps_but_real_negatives_raise():
    led = FlowLedger(4)
    led.record(2000, 1, "n0", "water.water_lift", -1e-12)
    assert led.get(2000, 1, "n0", "water.water_lift") == 0.0
    with pytest.raises(LedgerError):
        led.record(2000, 2, "n0", "water.water_lift", -0.5)


def test_currency_may_be_negative():
    led = FlowLedger(4)
    led.record(2000, 1, "n0", "agriculture.currency_flow", -5.0e6)
    assert led.get(2000, 1, "n0", "agriculture.currency_flow") == -5.0e6


def test_non_finite_rejected():
    led = FlowLedger(4)
    with pytest.raises(LedgerError):
        led.record(2000, 1, "n0", "water.water_lift", float("nan"))


def test_annual_reads_final_iteration():
    led = FlowLedger(3)
    led.record(2000, 1, "n0", "water.water_lift", 1.0)
    led.record(2000, 3, "n0", "water.water_lift", 9.0)
    assert led.annual(2000, "n0", "water.water_lift") == 9.0


def test_merge_disjoint_and_conflicting():
    a = FlowLedger(4)
    b = FlowLedger(4)
    a.record(2000, 1, "n0", "water.water_lift", 1.0)
    b.record(2000, 1, "n0", "agriculture.food_production", 2.0)
    a.merge(b)
    assert len(a) == 2

    c = FlowLedger(4)
    c.record(2000, 1, "n0", "water.water_lift", 3.0)
    with pytest.raises(LedgerError):
        a.merge(c)
    # identical overlapping values merge cleanly
    d = FlowLedger(4)
    d.record(2000, 1, "n0", "water.water_lift", 1.0)
    a.merge(d)


def test_merge_requires_same_cadence():
    a, b = FlowLedger(4), FlowLedger(2)
    with pytest.raises(LedgerError):
        a.merge(b)


def test_equals_and_copy():
    a = FlowLedger(4)
    a.record(2000, 4, "n0", "water.water_lift", 1.5)
    b = a.copy()
    assert a.equals(b)
    b.record(2001, 4, "n0", "water.water_lift", 1.5)
    assert not a.equals(b)


def test_capital_and_budget_years():
    led = FlowLedger(4)
    led.record(1985, 4, "n0", "agriculture.capital_expenses", 6.0e9)
    led.record(1985, 4, "n0", "electrical.capital_expenses", 5.0e9)
    led.record(1986, 4, "n0", "water.capital_expenses", 10.0e9)
    assert capital_by_year(led, ("n0",), 1985) == pytest.approx(11.0e9)
    # strict comparison: exactly at the limit is allowed
    assert budget_violation_years(led, ("n0",), 10.0e9, range(1984, 1988)) == (1985,)


def test_currency_trace_accumulates():
    led = FlowLedger(4)
    led.record(2000, 4, "n0", "agriculture.currency_flow", 5.0)
    led.record(2001, 4, "n0", "water.currency_flow", -2.0)
    trace = currency_trace(led, ("n0",), range(2000, 2003))
    assert trace == {2000: 5.0, 2001: 3.0, 2002: 3.0}
