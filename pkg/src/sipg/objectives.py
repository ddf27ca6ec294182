"""Objective metrics: pure functions of the flow ledger.

All five metrics score on [0, 1000].  The resource-security metrics
average a per-year fraction over the plan years seen so far (plan start
through the scored year, inclusive, divided by the term count).  The
stock-backed metrics rate start-of-year volume against that year's
withdrawal, with zero withdrawal counting as fully secure.  Financial
security and political power compare cumulative totals against bounds
interpolated between the base year and the anchor-year values by
compound growth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from sipg import units
from sipg.ledger import FlowLedger, budget_violation_years
from sipg.scenario import Scenario

SECTOR_FLOW_SERIES = {
    "agriculture": ("agriculture.currency_flow",),
    "water": ("water.currency_flow",),
    "energy": ("petroleum.currency_flow", "electrical.currency_flow"),
}
SECTOR_CAPITAL_SERIES = {
    "agriculture": ("agriculture.capital_expenses",),
    "water": ("water.capital_expenses",),
    "energy": ("petroleum.capital_expenses", "electrical.capital_expenses"),
}


@dataclass(frozen=True)
class ObjectiveReport:
    year: int
    food_security: float
    aquifer_security: float
    reservoir_security: float
    financial_security: Mapping[str, float]  # agriculture/water/energy/joint
    political_power: Mapping[str, float]     # agriculture/water/energy
    joint_objective: float
    budget_violations: tuple[int, ...]


def _plan_years(scenario: Scenario, year: int) -> range:
    h = scenario.horizon
    if year <= h.plan_start:
        raise ValueError(f"objectives are defined only after the plan start "
                         f"year {h.plan_start}, got {year}")
    if year > h.end:
        raise ValueError(f"year {year} beyond horizon end {h.end}")
    return range(h.plan_start, year + 1)


def food_security(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    """Average produced-to-demanded food ratio, scored against the target."""
    target = scenario.objectives.food_target_ratio
    total = 0.0
    years = _plan_years(scenario, year)
    for i in years:
        supplied = demanded = 0.0
        for n in scenario.node_ids:
            supplied += ledger.annual(i, n, "agriculture.food_production")
            demanded += ledger.annual(i, n, "societal.food_in")
        if demanded <= 0.0:
            score = 1.0
        else:
            ratio = supplied / demanded
            if ratio >= target:
                score = 1.0
            elif ratio < 0.0:
                score = 0.0
            else:
                score = ratio / target
        total += score
    return 1000.0 * total / len(years)


def _stock_security(ledger: FlowLedger, scenario: Scenario, year: int,
                    stock_series: str, withdrawal_km3_or_btoe, low: float,
                    high: float) -> float:
    total = 0.0
    years = _plan_years(scenario, year)
    for i in years:
        volume = sum(ledger.annual(i, n, stock_series) for n in scenario.node_ids)
        withdrawal = withdrawal_km3_or_btoe(ledger, scenario, i)
        if withdrawal <= 0.0:
            score = 1.0
        else:
            ratio = volume / withdrawal
            if ratio >= high:
                score = 1.0
            elif ratio < low:
                score = 0.0
            else:
                score = (ratio - low) / (high - low)
        total += score
    return 1000.0 * total / len(years)


def _aquifer_withdrawal_km3(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    total = 0.0
    for node in scenario.nodes:
        lift = ledger.annual(year, node.id, "water.water_lift")
        total += node.water.lift_aquifer_m3_per_m3 * lift / units.MCM_PER_KM3
    return total


def _reservoir_withdrawal_btoe(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    total = 0.0
    for n in scenario.node_ids:
        total += ledger.annual(year, n, "petroleum.reservoir_withdrawal") \
            / units.MTOE_PER_BTOE
    return total


def aquifer_security(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    p = scenario.objectives
    return _stock_security(ledger, scenario, year, "water.aquifer_stock",
                           _aquifer_withdrawal_km3,
                           p.aquifer_years_low, p.aquifer_years_high)


def reservoir_security(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    p = scenario.objectives
    return _stock_security(ledger, scenario, year, "petroleum.reservoir_stock",
                           _reservoir_withdrawal_btoe,
                           p.reservoir_years_low, p.reservoir_years_high)


def _interp_bound(anchor_value: float, rate: float, scenario: Scenario,
                  year: int) -> float:
    p = scenario.objectives
    num = (1.0 + rate) ** (year - p.base_year) - 1.0
    den = (1.0 + rate) ** (p.anchor_year - p.base_year) - 1.0
    return anchor_value * num / den


def financial_security(ledger: FlowLedger, scenario: Scenario, sector: str,
                       year: int) -> float:
    """Cumulative sector net revenue scored inside growth-interpolated bounds."""
    if sector == "joint":
        series = sum(SECTOR_FLOW_SERIES.values(), ())
    else:
        series = SECTOR_FLOW_SERIES[sector]
    cumulative = 0.0
    for i in _plan_years(scenario, year):
        for n in scenario.node_ids:
            for s in series:
                cumulative += ledger.annual(i, n, s)
    bounds = scenario.objectives.financial[sector]
    lo = _interp_bound(bounds.min_2010, bounds.growth_rate, scenario, year)
    hi = _interp_bound(bounds.max_2010, bounds.growth_rate, scenario, year)
    if cumulative > hi:
        return 1000.0
    if cumulative < lo:
        return 0.0
    if hi == lo:
        return 1000.0  # at the degenerate bound counts as met
    return 1000.0 * (cumulative - lo) / (hi - lo)


def political_power(ledger: FlowLedger, scenario: Scenario, sector: str,
                    year: int) -> float:
    """Cumulative capital deployed, against a growth-interpolated ceiling."""
    cumulative = 0.0
    for i in _plan_years(scenario, year):
        for n in scenario.node_ids:
            for s in SECTOR_CAPITAL_SERIES[sector]:
                cumulative += ledger.annual(i, n, s)
    bounds = scenario.objectives.political[sector]
    ceiling = _interp_bound(bounds.max_2010, bounds.growth_rate, scenario, year)
    if cumulative > ceiling:
        return 1000.0
    return 1000.0 * cumulative / ceiling


def joint_objective(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    components = (
        food_security(ledger, scenario, year),
        aquifer_security(ledger, scenario, year),
        reservoir_security(ledger, scenario, year),
        financial_security(ledger, scenario, "joint", year),
    )
    return sum(components) / len(components)


def objective_report(ledger: FlowLedger, scenario: Scenario, year: int) -> ObjectiveReport:
    violations = budget_violation_years(
        ledger, scenario.node_ids, scenario.budget_limit,
        range(scenario.horizon.start, year + 1))
    return ObjectiveReport(
        year=year,
        food_security=food_security(ledger, scenario, year),
        aquifer_security=aquifer_security(ledger, scenario, year),
        reservoir_security=reservoir_security(ledger, scenario, year),
        financial_security={s: financial_security(ledger, scenario, s, year)
                            for s in ("agriculture", "water", "energy", "joint")},
        political_power={s: political_power(ledger, scenario, s, year)
                         for s in ("agriculture", "water", "energy")},
        joint_objective=joint_objective(ledger, scenario, year),
        budget_violations=violations,
    )
