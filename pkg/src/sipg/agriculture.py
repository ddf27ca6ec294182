"""Agriculture dispatch: land allocation, food transport, trade.

Cost-minimizing annual dispatch.  Operating fields choose cultivated
area (bounded by template capacity, node arable land and the farm labor
pool); roads move food between nodes with a delivery efficiency; any
shortfall imports at the import price and any surplus may export at the
export price (a negative cost, so profitable exports are taken).  Water
for irrigation is bought at the node's local water price, which is what
couples this sector to the water model.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from sipg import units
from sipg.lp import LpBuilder
from sipg.scenario import KIND_PRODUCTION, NodeConfig
from sipg.elements import ActiveElement


@dataclass(frozen=True)
class AgricultureDecision:
    land_use: Mapping[str, float]    # element id -> km2
    transport: Mapping[str, float]   # element id -> GJ moved from origin
    imports: Mapping[str, float]     # node id -> GJ
    exports: Mapping[str, float]     # node id -> GJ
    objective_value: float           # $


def _irrigation_cost_per_km2(tpl, node: NodeConfig) -> float:
    return tpl.water_mcm_per_km2 * units.M3_PER_MCM * node.water.local_price_m3


def dispatch(elements: Sequence[ActiveElement], demand: Mapping[str, float],
             nodes: Sequence[NodeConfig],
             population: Mapping[str, float]) -> AgricultureDecision:
    """Solve the annual dispatch; `demand` in GJ, `population` in millions."""
    by_id = {n.id: n for n in nodes}
    b = LpBuilder()
    fields = [e for e in elements if e.template.kind == KIND_PRODUCTION]
    roads = [e for e in elements if e.template.kind != KIND_PRODUCTION]
    for e in fields:
        node = by_id[e.origin]
        cost = e.template.variable_cost + _irrigation_cost_per_km2(e.template, node)
        b.var(f"use:{e.id}", cost=cost, upper=e.template.land_capacity_km2)
    for e in roads:
        b.var(f"move:{e.id}", cost=e.template.variable_cost,
              upper=e.template.transport_capacity_gj)
    for n in nodes:
        b.var(f"imp:{n.id}", cost=n.agriculture.import_price_gj)
        b.var(f"exp:{n.id}", cost=-n.agriculture.export_price_gj)

    for n in nodes:
        balance = [(f"imp:{n.id}", 1.0), (f"exp:{n.id}", -1.0)]
        area = []
        labor = []
        for e in fields:
            if e.origin == n.id:
                yield_gj = e.template.food_yield_tj_per_km2 * units.GJ_PER_TJ
                balance.append((f"use:{e.id}", yield_gj))
                area.append((f"use:{e.id}", 1.0))
                labor.append((f"use:{e.id}", e.template.labor_per_km2))
        for e in roads:
            if e.origin == n.id:
                balance.append((f"move:{e.id}", -1.0))
            if e.destination == n.id:
                balance.append((f"move:{e.id}", e.template.efficiency))
        b.row_ge(balance, demand.get(n.id, 0.0))
        if area:
            b.row_le(area, n.agriculture.arable_land_km2)
        if labor:
            b.row_le(labor, n.agriculture.labor_fraction
                     * population[n.id] * 1.0e6)

    sol, values = b.solve()
    if not sol.is_optimal:  # imports are uncapped, so this cannot trigger
        raise RuntimeError(f"agriculture dispatch {sol.status}")
    return AgricultureDecision(
        land_use={e.id: values[f"use:{e.id}"] for e in fields},
        transport={e.id: values[f"move:{e.id}"] for e in roads},
        imports={n.id: values[f"imp:{n.id}"] for n in nodes},
        exports={n.id: values[f"exp:{n.id}"] for n in nodes},
        objective_value=sol.objective_value,
    )


def irrigation_demand(decision: AgricultureDecision,
                      elements: Sequence[ActiveElement]) -> dict[str, float]:
    """Water these land allocations pull from each node, in MCM."""
    out: dict[str, float] = {}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            q = decision.land_use.get(e.id, 0.0)
            out[e.origin] = out.get(e.origin, 0.0) + e.template.water_mcm_per_km2 * q
    return out


def food_production(decision: AgricultureDecision,
                    elements: Sequence[ActiveElement]) -> dict[str, float]:
    """Food grown per node in GJ (before transport and trade)."""
    out: dict[str, float] = {}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            q = decision.land_use.get(e.id, 0.0)
            yield_gj = e.template.food_yield_tj_per_km2 * units.GJ_PER_TJ
            out[e.origin] = out.get(e.origin, 0.0) + yield_gj * q
    return out


def food_supplied(decision: AgricultureDecision, elements: Sequence[ActiveElement],
                  nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """Food delivered to each node's consumers (the Out attribute)."""
    out = {n.id: decision.imports.get(n.id, 0.0) - decision.exports.get(n.id, 0.0)
           for n in nodes}
    for node_id, grown in food_production(decision, elements).items():
        out[node_id] += grown
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            continue
        q = decision.transport.get(e.id, 0.0)
        out[e.origin] -= q
        out[e.destination] += e.template.efficiency * q
    return out


def revenue(decision: AgricultureDecision, demand: Mapping[str, float],
            operating: Sequence[ActiveElement],
            commissioning: Sequence[ActiveElement],
            nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """Net sector revenue per node in $.

    Local sales at the local food price cover each node's demand; food
    moved by a road is settled from the destination back to the origin at
    the local price net of losses.  Costs: trade, element capital during
    commissioning, fixed plus variable while operating.
    """
    out: dict[str, float] = {}
    for n in nodes:
        q = n.agriculture.local_price_gj * demand.get(n.id, 0.0)
        q += n.agriculture.export_price_gj * decision.exports.get(n.id, 0.0)
        q -= n.agriculture.import_price_gj * decision.imports.get(n.id, 0.0)
        out[n.id] = q
    by_id = {n.id: n for n in nodes}
    for e in operating:
        node = by_id[e.origin]
        if e.template.kind == KIND_PRODUCTION:
            use = decision.land_use.get(e.id, 0.0)
            var = (e.template.variable_cost
                   + _irrigation_cost_per_km2(e.template, node)) * use
        else:
            moved = decision.transport.get(e.id, 0.0)
            var = e.template.variable_cost * moved
            settle = node.agriculture.local_price_gj * e.template.efficiency * moved
            out[e.origin] += settle
            out[e.destination] -= settle
        out[e.origin] -= var + e.template.fixed_millions * units.DOLLARS_PER_MILLION
    for e in commissioning:
        out[e.origin] -= e.template.capital_millions * units.DOLLARS_PER_MILLION
    return out
