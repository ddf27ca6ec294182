"""Water dispatch: desalination, aquifer lifting, import.

Sources stack in a merit order fixed by their unit costs: coastal
desalination plants run first (their production cost is the cheapest),
then aquifer lifting at a synthetic cost pinned strictly between the
costliest desalination unit cost and the import price, then imports.
Lifting is capped by the remaining aquifer volume.  The synthetic
lifting cost orders the merit stack only; it never appears in revenue.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from sipg import units
from sipg.lp import LpBuilder
from sipg.scenario import (KIND_PRODUCTION, ElementTemplate, NodeConfig,
                           SECTOR_WATER)
from sipg.elements import ActiveElement


@dataclass(frozen=True)
class WaterDecision:
    production: Mapping[str, float]  # element id -> MCM
    lifts: Mapping[str, float]       # node id -> MCM
    imports: Mapping[str, float]     # node id -> MCM
    objective_value: float


def desalination_unit_cost(tpl: ElementTemplate, node: NodeConfig) -> float:
    """$/m3 to run a plant at this node: variable cost plus electricity."""
    return tpl.variable_cost + tpl.electricity_kwh_per_m3 \
        * node.energy.electricity_price_mwh / 1000.0


def lifting_cost(templates: Mapping[str, ElementTemplate], node: NodeConfig) -> float:
    """Midpoint of (costliest desalination unit cost, import price), $/m3.

    Computed from the full template catalog rather than the installed
    plants so the merit order is stable across plan edits.
    """
    ceiling = node.water.import_price_m3
    floor = 0.0
    for tpl in templates.values():
        if tpl.sector == SECTOR_WATER and tpl.kind == KIND_PRODUCTION:
            floor = max(floor, desalination_unit_cost(tpl, node))
    return (floor + ceiling) / 2.0


def dispatch(elements: Sequence[ActiveElement], demand: Mapping[str, float],
             nodes: Sequence[NodeConfig], aquifer_km3: Mapping[str, float],
             templates: Mapping[str, ElementTemplate]) -> WaterDecision:
    """Solve the annual dispatch; `demand` in MCM, aquifer stocks in km3."""
    by_id = {n.id: n for n in nodes}
    b = LpBuilder()
    plants = [e for e in elements if e.template.kind == KIND_PRODUCTION]
    for e in plants:
        node = by_id[e.origin]
        cap = e.template.production_capacity_mcm * (1.0 if node.water.coastal else 0.0)
        cost = desalination_unit_cost(e.template, node) * units.M3_PER_MCM
        b.var(f"produce:{e.id}", cost=cost, upper=cap)
    for n in nodes:
        b.var(f"lift:{n.id}", cost=lifting_cost(templates, n) * units.M3_PER_MCM)
        b.var(f"imp:{n.id}", cost=n.water.import_price_m3 * units.M3_PER_MCM)

    for n in nodes:
        balance = [(f"lift:{n.id}", 1.0), (f"imp:{n.id}", 1.0)]
        for e in plants:
            if e.origin == n.id:
                balance.append((f"produce:{e.id}", 1.0))
        b.row_ge(balance, demand.get(n.id, 0.0))
        # total withdrawal cannot exceed what is left underground
        b.row_le([(f"lift:{n.id}", n.water.lift_aquifer_m3_per_m3)],
                 aquifer_km3[n.id] * units.MCM_PER_KM3)

    sol, values = b.solve()
    if not sol.is_optimal:
        raise RuntimeError(f"water dispatch {sol.status}")
    return WaterDecision(
        production={e.id: values[f"produce:{e.id}"] for e in plants},
        lifts={n.id: values[f"lift:{n.id}"] for n in nodes},
        imports={n.id: values[f"imp:{n.id}"] for n in nodes},
        objective_value=sol.objective_value,
    )


def electricity_demand(decision: WaterDecision, elements: Sequence[ActiveElement],
                       nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """TWh the water system pulls per node: lifting plus plant loads."""
    out = {n.id: n.water.lift_electricity_kwh_per_m3
           * decision.lifts.get(n.id, 0.0) / 1000.0 for n in nodes}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            q = decision.production.get(e.id, 0.0)
            out[e.origin] = out.get(e.origin, 0.0) \
                + e.template.electricity_kwh_per_m3 * q / 1000.0
    return out


def production_by_node(decision: WaterDecision,
                       elements: Sequence[ActiveElement]) -> dict[str, float]:
    out: dict[str, float] = {}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            out[e.origin] = out.get(e.origin, 0.0) + decision.production.get(e.id, 0.0)
    return out


def update_aquifer(aquifer_km3: Mapping[str, float], decision: WaterDecision,
                   nodes: Sequence[NodeConfig], apply_recharge: bool,
                   initial_km3: Mapping[str, float]) -> dict[str, float]:
    """Withdraw this year's lifting; optional recharge capped at the
    initial volume.  Units: stock km3, lifts MCM."""
    out = {}
    for n in nodes:
        q = aquifer_km3[n.id] - n.water.lift_aquifer_m3_per_m3 \
            * decision.lifts.get(n.id, 0.0) / units.MCM_PER_KM3
        if apply_recharge:
            q = min(q + n.water.recharge_km3_per_year, initial_km3[n.id])
        out[n.id] = max(0.0, q)
    return out


def revenue(decision: WaterDecision, demand: Mapping[str, float],
            operating: Sequence[ActiveElement],
            commissioning: Sequence[ActiveElement],
            nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """Net sector revenue per node in $.

    Only desalinated and imported water is billed at the local price;
    lifted groundwater is self-supplied, with the utility carrying its
    electricity cost.
    """
    out: dict[str, float] = {}
    for n in nodes:
        lift = decision.lifts.get(n.id, 0.0)
        q = n.water.local_price_m3 * (demand.get(n.id, 0.0) - lift) * units.M3_PER_MCM
        q -= n.energy.electricity_price_mwh / 1000.0 \
            * n.water.lift_electricity_kwh_per_m3 * lift * units.M3_PER_MCM
        q -= n.water.import_price_m3 * decision.imports.get(n.id, 0.0) * units.M3_PER_MCM
        out[n.id] = q
    by_id = {n.id: n for n in nodes}
    for e in operating:
        produced = decision.production.get(e.id, 0.0)
        var = desalination_unit_cost(e.template, by_id[e.origin]) \
            * produced * units.M3_PER_MCM
        out[e.origin] -= var + e.template.fixed_millions * units.DOLLARS_PER_MILLION
    for e in commissioning:
        out[e.origin] -= e.template.capital_millions * units.DOLLARS_PER_MILLION
    return out
