"""Energy dispatch: petroleum wells/pipelines/trade and electricity plants.

Electricity clears first within a round, petroleum second; the
electricity the pipelines consumed last round feeds back as part of next
round's electrical load (the only lagged coupling in the platform).

Unserved electricity falls to private generation, penalized at a
synthetic cost strictly above every plant's unit cost so grid plants are
always preferred.  Like the water lifting cost, the penalty orders the
merit stack only and never enters revenue; the real private-generation
cost in revenue is its oil burn at the local oil price.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from sipg import units
from sipg.lp import LpBuilder
from sipg.scenario import (KIND_PRODUCTION, ElementTemplate, NodeConfig,
                           SECTOR_ELECTRICAL)
from sipg.elements import ActiveElement


@dataclass(frozen=True)
class ElectricityDecision:
    production: Mapping[str, float]  # element id -> TWh
    private: Mapping[str, float]     # node id -> TWh of private generation
    objective_value: float


@dataclass(frozen=True)
class PetroleumDecision:
    production: Mapping[str, float]  # element id -> Mtoe
    transport: Mapping[str, float]   # element id -> Mtoe entering at origin
    imports: Mapping[str, float]     # node id -> Mtoe
    exports: Mapping[str, float]     # node id -> Mtoe
    objective_value: float


def plant_unit_cost(tpl: ElementTemplate, node: NodeConfig) -> float:
    """$/MWh to run a plant at this node: variable cost plus fuel."""
    return tpl.variable_cost + tpl.oil_toe_per_mwh * node.energy.oil_local_price_toe


def private_generation_cost(templates: Mapping[str, ElementTemplate],
                            node: NodeConfig) -> float:
    """Merit-order penalty for unserved load, $/MWh, strictly above every
    plant unit cost at this node."""
    ceiling = 0.0
    for tpl in templates.values():
        if tpl.sector == SECTOR_ELECTRICAL and tpl.kind == KIND_PRODUCTION:
            ceiling = max(ceiling, plant_unit_cost(tpl, node))
    fuel = node.energy.private_oil_toe_per_mwh * node.energy.oil_local_price_toe
    cost = max(fuel, 2.0 * ceiling)
    if cost <= ceiling:
        cost = ceiling + 1.0
    return cost


def dispatch_electricity(elements: Sequence[ActiveElement],
                         demand: Mapping[str, float],
                         nodes: Sequence[NodeConfig],
                         templates: Mapping[str, ElementTemplate]) -> ElectricityDecision:
    """Solve the annual dispatch; `demand` in TWh."""
    by_id = {n.id: n for n in nodes}
    b = LpBuilder()
    for e in elements:
        node = by_id[e.origin]
        b.var(f"gen:{e.id}", cost=plant_unit_cost(e.template, node) * units.MWH_PER_TWH,
              upper=e.template.production_capacity_twh)
    for n in nodes:
        b.var(f"private:{n.id}",
              cost=private_generation_cost(templates, n) * units.MWH_PER_TWH)
    for n in nodes:
        balance = [(f"private:{n.id}", 1.0)]
        for e in elements:
            if e.origin == n.id:
                balance.append((f"gen:{e.id}", 1.0))
        b.row_ge(balance, demand.get(n.id, 0.0))
    sol, values = b.solve()
    if not sol.is_optimal:
        raise RuntimeError(f"electricity dispatch {sol.status}")
    return ElectricityDecision(
        production={e.id: values[f"gen:{e.id}"] for e in elements},
        private={n.id: values[f"private:{n.id}"] for n in nodes},
        objective_value=sol.objective_value,
    )


def dispatch_petroleum(elements: Sequence[ActiveElement],
                       demand: Mapping[str, float],
                       nodes: Sequence[NodeConfig],
                       reservoir_btoe: Mapping[str, float]) -> PetroleumDecision:
    """Solve the annual dispatch; `demand` in Mtoe, reservoirs in billion toe."""
    by_id = {n.id: n for n in nodes}
    b = LpBuilder()
    wells = [e for e in elements if e.template.kind == KIND_PRODUCTION]
    pipes = [e for e in elements if e.template.kind != KIND_PRODUCTION]
    for e in wells:
        b.var(f"produce:{e.id}", cost=e.template.variable_cost * units.TOE_PER_MTOE,
              upper=e.template.production_capacity_mtoe)
    for e in pipes:
        node = by_id[e.origin]
        cost = (e.template.variable_cost + e.template.electricity_kwh_per_toe
                * node.energy.electricity_price_mwh / 1000.0) * units.TOE_PER_MTOE
        b.var(f"move:{e.id}", cost=cost, upper=e.template.transport_capacity_mtoe)
    for n in nodes:
        b.var(f"imp:{n.id}", cost=n.energy.oil_import_price_toe * units.TOE_PER_MTOE)
        b.var(f"exp:{n.id}", cost=-n.energy.oil_export_price_toe * units.TOE_PER_MTOE)

    for n in nodes:
        balance = [(f"imp:{n.id}", 1.0), (f"exp:{n.id}", -1.0)]
        withdrawal = []
        for e in wells:
            if e.origin == n.id:
                balance.append((f"produce:{e.id}", 1.0))
                withdrawal.append((f"produce:{e.id}", e.template.reservoir_toe_per_toe))
        for e in pipes:
            if e.origin == n.id:
                balance.append((f"move:{e.id}", -1.0))
            if e.destination == n.id:
                balance.append((f"move:{e.id}", e.template.efficiency))
        b.row_ge(balance, demand.get(n.id, 0.0))
        if withdrawal:
            b.row_le(withdrawal, reservoir_btoe[n.id] * units.MTOE_PER_BTOE)

    sol, values = b.solve()
    if not sol.is_optimal:
        raise RuntimeError(f"petroleum dispatch {sol.status}")
    return PetroleumDecision(
        production={e.id: values[f"produce:{e.id}"] for e in wells},
        transport={e.id: values[f"move:{e.id}"] for e in pipes},
        imports={n.id: values[f"imp:{n.id}"] for n in nodes},
        exports={n.id: values[f"exp:{n.id}"] for n in nodes},
        objective_value=sol.objective_value,
    )


def pipeline_electricity_demand(decision: PetroleumDecision,
                                elements: Sequence[ActiveElement]) -> dict[str, float]:
    """TWh pulled per node by pipeline pumping (lags one round)."""
    out: dict[str, float] = {}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            continue
        q = decision.transport.get(e.id, 0.0)
        out[e.origin] = out.get(e.origin, 0.0) \
            + e.template.electricity_kwh_per_toe * q / 1000.0
    return out


def generation_oil_demand(decision: ElectricityDecision,
                          elements: Sequence[ActiveElement],
                          nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """Mtoe pulled per node by grid plants and private generation."""
    out = {n.id: n.energy.private_oil_toe_per_mwh
           * decision.private.get(n.id, 0.0) for n in nodes}
    for e in elements:
        q = decision.production.get(e.id, 0.0)
        out[e.origin] = out.get(e.origin, 0.0) + e.template.oil_toe_per_mwh * q
    return out


def reservoir_withdrawal(decision: PetroleumDecision,
                         elements: Sequence[ActiveElement]) -> dict[str, float]:
    """Mtoe withdrawn from each node's reservoir this year."""
    out: dict[str, float] = {}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            q = decision.production.get(e.id, 0.0)
            out[e.origin] = out.get(e.origin, 0.0) \
                + e.template.reservoir_toe_per_toe * q
    return out


def update_reservoir(reservoir_btoe: Mapping[str, float],
                     decision: PetroleumDecision,
                     elements: Sequence[ActiveElement]) -> dict[str, float]:
    withdrawn = reservoir_withdrawal(decision, elements)
    out = dict(reservoir_btoe)
    for node_id, q in withdrawn.items():
        out[node_id] = max(0.0, out[node_id] - q / units.MTOE_PER_BTOE)
    return out


def petroleum_production_by_node(decision: PetroleumDecision,
                                 elements: Sequence[ActiveElement]) -> dict[str, float]:
    out: dict[str, float] = {}
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            out[e.origin] = out.get(e.origin, 0.0) + decision.production.get(e.id, 0.0)
    return out


def oil_supplied(decision: PetroleumDecision, elements: Sequence[ActiveElement],
                 nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """Oil delivered per node (production + pipeline net + trade), Mtoe."""
    out = {n.id: decision.imports.get(n.id, 0.0) - decision.exports.get(n.id, 0.0)
           for n in nodes}
    for node_id, produced in petroleum_production_by_node(decision, elements).items():
        out[node_id] += produced
    for e in elements:
        if e.template.kind == KIND_PRODUCTION:
            continue
        q = decision.transport.get(e.id, 0.0)
        out[e.origin] -= q
        out[e.destination] += e.template.efficiency * q
    return out


def petroleum_revenue(decision: PetroleumDecision, demand: Mapping[str, float],
                      operating: Sequence[ActiveElement],
                      commissioning: Sequence[ActiveElement],
                      nodes: Sequence[NodeConfig]) -> dict[str, float]:
    out: dict[str, float] = {}
    for n in nodes:
        q = n.energy.oil_local_price_toe * demand.get(n.id, 0.0)
        q += n.energy.oil_export_price_toe * decision.exports.get(n.id, 0.0)
        q -= n.energy.oil_import_price_toe * decision.imports.get(n.id, 0.0)
        out[n.id] = q * units.TOE_PER_MTOE
    by_id = {n.id: n for n in nodes}
    for e in operating:
        node = by_id[e.origin]
        if e.template.kind == KIND_PRODUCTION:
            q = decision.production.get(e.id, 0.0)
            var = e.template.variable_cost * q * units.TOE_PER_MTOE
        else:
            q = decision.transport.get(e.id, 0.0)
            var = (e.template.variable_cost + e.template.electricity_kwh_per_toe
                   * node.energy.electricity_price_mwh / 1000.0) * q * units.TOE_PER_MTOE
            settle = node.energy.oil_local_price_toe * e.template.efficiency \
                * q * units.TOE_PER_MTOE
            out[e.origin] += settle
            out[e.destination] -= settle
        out[e.origin] -= var + e.template.fixed_millions * units.DOLLARS_PER_MILLION
    for e in commissioning:
        out[e.origin] -= e.template.capital_millions * units.DOLLARS_PER_MILLION
    return out


def electricity_revenue(decision: ElectricityDecision, demand: Mapping[str, float],
                        operating: Sequence[ActiveElement],
                        commissioning: Sequence[ActiveElement],
                        nodes: Sequence[NodeConfig]) -> dict[str, float]:
    """Grid sales net of private generation, fuel, and element costs."""
    out: dict[str, float] = {}
    for n in nodes:
        private = decision.private.get(n.id, 0.0)
        q = n.energy.electricity_price_mwh \
            * (demand.get(n.id, 0.0) - private) * units.MWH_PER_TWH
        q -= n.energy.oil_local_price_toe * n.energy.private_oil_toe_per_mwh \
            * private * units.MWH_PER_TWH
        out[n.id] = q
    by_id = {n.id: n for n in nodes}
    for e in operating:
        q = decision.production.get(e.id, 0.0)
        var = plant_unit_cost(e.template, by_id[e.origin]) * q * units.MWH_PER_TWH
        out[e.origin] -= var + e.template.fixed_millions * units.DOLLARS_PER_MILLION
    for e in commissioning:
        out[e.origin] -= e.template.capital_millions * units.DOLLARS_PER_MILLION
    return out
