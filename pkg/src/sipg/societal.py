"""Closed-form societal model: population, per-capita demand, currency stock.

Population and per-capita demand both follow a saturating logistic in
time.  Demand additionally carries a floor, so the curve runs from the
datum value toward the ceiling while never dropping below the floor:

    P(t) = (M - m) * (P0 - m) * e^(r dt) / ((M - m) + (P0 - m)(e^(r dt) - 1)) + m

with dt = t - datumYear and m = 0 for population.  National demand for a
resource is population times the per-capita curve, converted to ledger
units using the scenario-declared day count and kcal factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from sipg import units
from sipg.scenario import (LogisticParams, NodeConfig, Scenario, RESOURCES)


def logistic_value(params: LogisticParams, year: int) -> float:
    span = params.maximum - params.minimum
    seed = params.initial - params.minimum
    if span <= 0.0 or seed <= 0.0:
        # degenerate curves pin at the datum value
        return params.initial
    growth = math.exp(params.rate * (year - params.datum_year))
    return params.minimum + span * seed * growth / (span + seed * (growth - 1.0))


def population_millions(node: NodeConfig, year: int) -> float:
    return logistic_value(node.population, year)


def per_capita_demand(node: NodeConfig, resource: str, year: int) -> float:
    """Per-capita demand in the curve's native units (kcal/day, L/day, ...)."""
    return logistic_value(node.demands[resource], year)


def node_demand(scenario: Scenario, node: NodeConfig, resource: str,
                year: int) -> float:
    """Annual node demand in ledger units: GJ, MCM, Mtoe or TWh."""
    people = population_millions(node, year) * 1.0e6
    pc = per_capita_demand(node, resource, year)
    days = scenario.conversions.days_per_year
    if resource == "food":      # kcal/day -> GJ/yr
        return people * pc * days / scenario.conversions.kcal_per_gj
    if resource == "water":     # L/day -> MCM/yr
        return people * pc * days / units.LITERS_PER_MCM
    if resource == "oil":       # toe/yr -> Mtoe/yr
        return people * pc / units.TOE_PER_MTOE
    if resource == "electricity":  # kWh/day -> TWh/yr
        return people * pc * days / units.KWH_PER_TWH
    raise KeyError(f"unknown resource {resource!r}")


def all_demands(scenario: Scenario, year: int) -> dict[str, dict[str, float]]:
    """resource -> node id -> annual demand in ledger units."""
    return {res: {n.id: node_demand(scenario, n, res, year) for n in scenario.nodes}
            for res in RESOURCES}


@dataclass(frozen=True)
class CurrencyStock:
    """Cumulative national currency with the per-sector node contributions
    of the most recent accumulation step."""
    total: float = 0.0
    last_contributions: Mapping[str, Mapping[str, float]] = None  # sector -> node -> $

    def accumulate(self, sector_nets: Mapping[str, Mapping[str, float]],
                   node_ids: tuple[str, ...]) -> "CurrencyStock":
        """Add one year of sector net revenues; every sector must report
        a value for every node or the step is rejected."""
        total = self.total
        for sector in ("agriculture", "water", "energy"):
            if sector not in sector_nets:
                raise KeyError(f"missing sector contribution: {sector}")
            per_node = sector_nets[sector]
            for node_id in node_ids:
                if node_id not in per_node:
                    raise KeyError(f"missing node contribution: {sector}/{node_id}")
                total += per_node[node_id]
        return CurrencyStock(total=total, last_contributions=sector_nets)
