"""Simulation engine: element lifecycle, sector models, the annual loop.

A year runs a fixed number of iteration rounds.  Within a round the
models clear in a fixed order (societal demands, agriculture, water,
electricity, petroleum), each consuming the freshest published values;
the single lagged coupling is the electricity pipelines consumed last
round, reset to zero at the start of every year.  After the final round
the year commits: stocks draw down and the committed flows are the
final-iteration records.

The same model classes drive both the in-process (monolithic) run and
the per-role federates, which is what makes the two execution paths
produce bit-identical ledgers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from sipg import agriculture, energy, fom, water
from sipg.elements import ActiveElement
from sipg.ledger import FlowLedger, budget_violation_years
from sipg.objectives import ObjectiveReport, objective_report
from sipg.scenario import (ElementInstance, ElementTemplate, Scenario,
                           SECTOR_AGRICULTURE, SECTOR_ELECTRICAL,
                           SECTOR_PETROLEUM, SECTOR_WATER)
from sipg.societal import node_demand, population_millions


class LifecyclePhase(str, enum.Enum):
    EMPTY = "empty"
    COMMISSIONING = "commissioning"
    OPERATING = "operating"
    DECOMMISSIONING = "decommissioning"
    NULL = "null"


def lifecycle_phase(instance: ElementInstance, template: ElementTemplate,
                    year: int) -> LifecyclePhase:
    """Phase of an element in a given year.

    Commissioning spans capitalYears starting at commissionStart (capital
    charged, no operation); operating spans lifespanYears (fixed and
    variable costs); decommissioning is the single following year at zero
    cost and capacity.
    """
    start = instance.commission_start
    if year < start:
        return LifecyclePhase.EMPTY
    operate_from = start + template.capital_years
    if year < operate_from:
        return LifecyclePhase.COMMISSIONING
    retire_at = operate_from + template.lifespan_years
    if year < retire_at:
        return LifecyclePhase.OPERATING
    if year == retire_at:
        return LifecyclePhase.DECOMMISSIONING
    return LifecyclePhase.NULL


# (class, attribute, node) -> value
Published = dict[tuple[str, str, str], float]


@dataclass(frozen=True)
class StepOutput:
    published: Published
    internal: Mapping[tuple[str, str], float]  # (node, series) -> value


@dataclass(frozen=True)
class BoundaryOverrides:
    """Imported flow series substituted for live counterpart publications.

    Used by decoupled local runs: attributes of the named classes are
    replaced by the imported annual values where present.
    """
    classes: frozenset[str] = frozenset()
    values: Mapping[tuple[str, str, str], Mapping[int, float]] = field(
        default_factory=dict)

    def apply(self, published: Published, year: int) -> Published:
        if not self.classes:
            return published
        out = {}
        for (cls, attr, node), v in published.items():
            if cls in self.classes:
                series = self.values.get((cls, attr, node))
                if series is not None and year in series:
                    v = series[year]
            out[(cls, attr, node)] = v
        return out


NO_OVERRIDES = BoundaryOverrides()


def _sector_elements(scenario: Scenario, plan: Sequence[ElementInstance],
                     sectors: tuple[str, ...]) -> list[ElementInstance]:
    out = []
    for e in (*scenario.initial_elements, *plan):
        if scenario.templates[e.template].sector in sectors:
            out.append(e)
    return out


class _SectorModel:
    """Shared plumbing: element phase lists and capital charges per year."""

    sectors: tuple[str, ...] = ()

    def __init__(self, scenario: Scenario, plan: Sequence[ElementInstance] = ()):
        self.scenario = scenario
        self.elements = _sector_elements(scenario, plan, self.sectors)
        self._phase_cache: dict[int, tuple[list[ActiveElement], list[ActiveElement]]] = {}

    def phase_lists(self, year: int, sector: str | None = None):
        """(operating, commissioning) ActiveElement lists for a year."""
        if year not in self._phase_cache:
            operating, commissioning = [], []
            for e in self.elements:
                tpl = self.scenario.templates[e.template]
                phase = lifecycle_phase(e, tpl, year)
                if phase == LifecyclePhase.OPERATING:
                    operating.append(ActiveElement(e, tpl))
                elif phase == LifecyclePhase.COMMISSIONING:
                    commissioning.append(ActiveElement(e, tpl))
            self._phase_cache[year] = (operating, commissioning)
        operating, commissioning = self._phase_cache[year]
        if sector is None:
            return operating, commissioning
        return ([a for a in operating if a.template.sector == sector],
                [a for a in commissioning if a.template.sector == sector])

    def capital_by_node(self, commissioning: Sequence[ActiveElement]) -> dict[str, float]:
        out = {n: 0.0 for n in self.scenario.node_ids}
        for a in commissioning:
            out[a.origin] += a.template.capital_millions * 1.0e6
        return out


class SocietalModel:
    """Closed-form demands; published once per iteration by the time owner."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._cache: dict[int, StepOutput] = {}

    def step(self, year: int) -> StepOutput:
        if year not in self._cache:
            published: Published = {}
            internal: dict[tuple[str, str], float] = {}
            for node in self.scenario.nodes:
                published[(fom.CLASS_SOCIETAL, "Food In", node.id)] = \
                    node_demand(self.scenario, node, "food", year)
                published[(fom.CLASS_SOCIETAL, "Water In", node.id)] = \
                    node_demand(self.scenario, node, "water", year)
                published[(fom.CLASS_SOCIETAL, "Oil In", node.id)] = \
                    node_demand(self.scenario, node, "oil", year)
                published[(fom.CLASS_SOCIETAL, "Electricity In", node.id)] = \
                    node_demand(self.scenario, node, "electricity", year)
                internal[(node.id, "societal.population")] = \
                    population_millions(node, year)
            self._cache[year] = StepOutput(published=published, internal=internal)
        return self._cache[year]


def _share(total_supply: float, component: float, total_demand: float) -> float:
    """Attribute supply to one demand component, proportionally."""
    if total_demand <= 0.0:
        return 0.0
    return total_supply * (component / total_demand)


class AgricultureModel(_SectorModel):
    sectors = (SECTOR_AGRICULTURE,)
    role = fom.ROLE_AGRICULTURE

    def __init__(self, scenario, plan=()):
        super().__init__(scenario, plan)
        self._memo: tuple | None = None

    def step(self, year: int, iteration: int, inputs: Published) -> StepOutput:
        demand = {n: inputs.get((fom.CLASS_SOCIETAL, "Food In", n), 0.0)
                  for n in self.scenario.node_ids}
        key = (year, tuple(demand[n] for n in self.scenario.node_ids))
        if self._memo is not None and self._memo[0] == key:
            return self._memo[1]
        operating, commissioning = self.phase_lists(year)
        nodes = self.scenario.nodes
        population = {n.id: population_millions(n, year) for n in nodes}
        decision = agriculture.dispatch(operating, demand, nodes, population)
        irrigation = agriculture.irrigation_demand(decision, operating)
        supplied = agriculture.food_supplied(decision, operating, nodes)
        grown = agriculture.food_production(decision, operating)
        revenue = agriculture.revenue(decision, demand, operating, commissioning, nodes)
        capital = self.capital_by_node(commissioning)

        published: Published = {}
        internal: dict[tuple[str, str], float] = {}
        cls = fom.CLASS_AGRICULTURE
        transport_out = {n.id: 0.0 for n in nodes}
        land_use = {n.id: 0.0 for n in nodes}
        for a in operating:
            if a.template.kind == "production":
                land_use[a.origin] += decision.land_use.get(a.id, 0.0)
            else:
                transport_out[a.origin] += decision.transport.get(a.id, 0.0)
        for n in nodes:
            published[(cls, "Water In", n.id)] = irrigation.get(n.id, 0.0)
            published[(cls, "Food Out (Societal)", n.id)] = supplied.get(n.id, 0.0)
            published[(cls, "Currency Flow", n.id)] = revenue.get(n.id, 0.0)
            published[(cls, "Capital Expenses", n.id)] = capital.get(n.id, 0.0)
            internal[(n.id, "agriculture.food_production")] = grown.get(n.id, 0.0)
            internal[(n.id, "agriculture.food_transport")] = transport_out[n.id]
            internal[(n.id, "agriculture.food_import")] = decision.imports.get(n.id, 0.0)
            internal[(n.id, "agriculture.food_export")] = decision.exports.get(n.id, 0.0)
            internal[(n.id, "agriculture.land_use")] = land_use[n.id]
        out = StepOutput(published=published, internal=internal)
        self._memo = (key, out)
        return out

    def commit_year(self, year: int) -> None:
        pass  # no sector stocks


class WaterModel(_SectorModel):
    sectors = (SECTOR_WATER,)
    role = fom.ROLE_WATER

    def __init__(self, scenario, plan=()):
        super().__init__(scenario, plan)
        self.initial_aquifer = {n.id: n.water.initial_aquifer_km3
                                for n in scenario.nodes}
        self.aquifer = dict(self.initial_aquifer)
        self._memo: tuple | None = None
        self._last_decision: water.WaterDecision | None = None

    def step(self, year: int, iteration: int, inputs: Published) -> StepOutput:
        soc = {n: inputs.get((fom.CLASS_SOCIETAL, "Water In", n), 0.0)
               for n in self.scenario.node_ids}
        agri = {n: inputs.get((fom.CLASS_AGRICULTURE, "Water In", n), 0.0)
                for n in self.scenario.node_ids}
        key = (year, tuple(soc[n] for n in self.scenario.node_ids),
               tuple(agri[n] for n in self.scenario.node_ids))
        if self._memo is not None and self._memo[0] == key:
            return self._memo[1]
        nodes = self.scenario.nodes
        total = {n.id: soc[n.id] + agri[n.id] for n in nodes}
        operating, commissioning = self.phase_lists(year)
        decision = water.dispatch(operating, total, nodes, self.aquifer,
                                  self.scenario.templates)
        self._last_decision = decision
        electricity = water.electricity_demand(decision, operating, nodes)
        produced = water.production_by_node(decision, operating)
        revenue = water.revenue(decision, total, operating, commissioning, nodes)
        capital = self.capital_by_node(commissioning)

        published: Published = {}
        internal: dict[tuple[str, str], float] = {}
        cls = fom.CLASS_WATER
        for n in nodes:
            supply = produced.get(n.id, 0.0) + decision.lifts.get(n.id, 0.0) \
                + decision.imports.get(n.id, 0.0)
            published[(cls, "Electricity In", n.id)] = electricity.get(n.id, 0.0)
            published[(cls, "Water Out (Agriculture)", n.id)] = \
                _share(supply, agri[n.id], total[n.id])
            published[(cls, "Water Out (Societal)", n.id)] = \
                _share(supply, soc[n.id], total[n.id])
            published[(cls, "Currency Flow", n.id)] = revenue.get(n.id, 0.0)
            published[(cls, "Capital Expenses", n.id)] = capital.get(n.id, 0.0)
            internal[(n.id, "water.water_production")] = produced.get(n.id, 0.0)
            internal[(n.id, "water.water_lift")] = decision.lifts.get(n.id, 0.0)
            internal[(n.id, "water.water_import")] = decision.imports.get(n.id, 0.0)
            internal[(n.id, "water.aquifer_stock")] = self.aquifer[n.id]
        out = StepOutput(published=published, internal=internal)
        self._memo = (key, out)
        return out

    def commit_year(self, year: int) -> None:
        if self._last_decision is None:
            raise RuntimeError("commit before any dispatch")
        self.aquifer = water.update_aquifer(
            self.aquifer, self._last_decision, self.scenario.nodes,
            self.scenario.apply_recharge, self.initial_aquifer)
        self._memo = None


class EnergyModel(_SectorModel):
    sectors = (SECTOR_PETROLEUM, SECTOR_ELECTRICAL)
    role = fom.ROLE_ENERGY

    def __init__(self, scenario, plan=()):
        super().__init__(scenario, plan)
        self.reservoir = {n.id: n.energy.initial_reservoir_btoe
                          for n in scenario.nodes}
        self.pipe_electricity = {n.id: 0.0 for n in scenario.nodes}
        self._memo: tuple | None = None
        self._last_petroleum: energy.PetroleumDecision | None = None

    def step(self, year: int, iteration: int, inputs: Published) -> StepOutput:
        ids = self.scenario.node_ids
        oil_soc = {n: inputs.get((fom.CLASS_SOCIETAL, "Oil In", n), 0.0) for n in ids}
        el_soc = {n: inputs.get((fom.CLASS_SOCIETAL, "Electricity In", n), 0.0)
                  for n in ids}
        el_water = {n: inputs.get((fom.CLASS_WATER, "Electricity In", n), 0.0)
                    for n in ids}
        if iteration == 1:
            # the lagged pipeline load starts every year from zero
            self.pipe_electricity = {n: 0.0 for n in ids}
        lag = dict(self.pipe_electricity)
        key = (year, tuple(oil_soc[n] for n in ids), tuple(el_soc[n] for n in ids),
               tuple(el_water[n] for n in ids), tuple(lag[n] for n in ids))
        if self._memo is not None and self._memo[0] == key:
            out, new_lag, pet = self._memo[1]
            self.pipe_electricity = dict(new_lag)
            self._last_petroleum = pet
            return out

        nodes = self.scenario.nodes
        plants_op, plants_comm = self.phase_lists(year, SECTOR_ELECTRICAL)
        pet_op, pet_comm = self.phase_lists(year, SECTOR_PETROLEUM)

        el_total = {n: el_soc[n] + el_water[n] + lag.get(n, 0.0) for n in ids}
        elec = energy.dispatch_electricity(plants_op, el_total, nodes,
                                           self.scenario.templates)
        oil_gen = energy.generation_oil_demand(elec, plants_op, nodes)
        oil_total = {n: oil_soc[n] + oil_gen.get(n, 0.0) for n in ids}
        pet = energy.dispatch_petroleum(pet_op, oil_total, nodes, self.reservoir)
        self._last_petroleum = pet
        new_lag = {n: 0.0 for n in ids}
        for n, v in energy.pipeline_electricity_demand(pet, pet_op).items():
            new_lag[n] = v
        self.pipe_electricity = dict(new_lag)

        oil_supply = energy.oil_supplied(pet, pet_op, nodes)
        oil_produced = energy.petroleum_production_by_node(pet, pet_op)
        withdrawal = energy.reservoir_withdrawal(pet, pet_op)
        pet_revenue = energy.petroleum_revenue(pet, oil_total, pet_op, pet_comm, nodes)
        el_revenue = energy.electricity_revenue(elec, el_total, plants_op,
                                                plants_comm, nodes)
        pet_capital = self.capital_by_node(pet_comm)
        el_capital = self.capital_by_node(plants_comm)

        published: Published = {}
        internal: dict[tuple[str, str], float] = {}
        pcls, ecls = fom.CLASS_PETROLEUM, fom.CLASS_ELECTRICAL
        transport_out = {n: 0.0 for n in ids}
        gen_by_node = {n: 0.0 for n in ids}
        for a in pet_op:
            if a.template.kind != "production":
                transport_out[a.origin] += pet.transport.get(a.id, 0.0)
        for a in plants_op:
            gen_by_node[a.origin] += elec.production.get(a.id, 0.0)
        for n in nodes:
            nid = n.id
            el_supply = gen_by_node[nid] + elec.private.get(nid, 0.0)
            published[(pcls, "Electricity In", nid)] = lag.get(nid, 0.0)
            published[(pcls, "Oil Out (Societal)", nid)] = \
                _share(oil_supply.get(nid, 0.0), oil_soc[nid], oil_total[nid])
            published[(pcls, "Oil Out (Electrical)", nid)] = \
                _share(oil_supply.get(nid, 0.0), oil_gen.get(nid, 0.0), oil_total[nid])
            published[(pcls, "Currency Flow", nid)] = pet_revenue.get(nid, 0.0)
            published[(pcls, "Capital Expenses", nid)] = pet_capital.get(nid, 0.0)
            published[(ecls, "Oil In", nid)] = oil_gen.get(nid, 0.0)
            published[(ecls, "Electricity Out (Water)", nid)] = \
                _share(el_supply, el_water[nid], el_total[nid])
            published[(ecls, "Electricity Out (Societal)", nid)] = \
                _share(el_supply, el_soc[nid], el_total[nid])
            published[(ecls, "Currency Flow", nid)] = el_revenue.get(nid, 0.0)
            published[(ecls, "Capital Expenses", nid)] = el_capital.get(nid, 0.0)
            internal[(nid, "petroleum.oil_production")] = oil_produced.get(nid, 0.0)
            internal[(nid, "petroleum.oil_transport")] = transport_out[nid]
            internal[(nid, "petroleum.oil_import")] = pet.imports.get(nid, 0.0)
            internal[(nid, "petroleum.oil_export")] = pet.exports.get(nid, 0.0)
            internal[(nid, "petroleum.reservoir_withdrawal")] = withdrawal.get(nid, 0.0)
            internal[(nid, "petroleum.reservoir_stock")] = self.reservoir[nid]
            internal[(nid, "electrical.electricity_production")] = gen_by_node[nid]
            internal[(nid, "electrical.private_generation")] = elec.private.get(nid, 0.0)
        out = StepOutput(published=published, internal=internal)
        self._memo = (key, (out, dict(new_lag), pet))
        return out

    def commit_year(self, year: int) -> None:
        if self._last_petroleum is None:
            raise RuntimeError("commit before any dispatch")
        pet_op, _ = self.phase_lists(year, SECTOR_PETROLEUM)
        self.reservoir = energy.update_reservoir(self.reservoir,
                                                 self._last_petroleum, pet_op)
        self._memo = None


def record_step_output(ledger: FlowLedger, year: int, iteration: int,
                       out: StepOutput) -> None:
    for (cls, attr, node), value in sorted(out.published.items()):
        ledger.record(year, iteration, node, fom.flow_key(cls, attr), value)
    for (node, series), value in sorted(out.internal.items()):
        ledger.record(year, iteration, node, series, value)


def record_published(ledger: FlowLedger, year: int, iteration: int,
                     published: Published) -> None:
    for (cls, attr, node), value in sorted(published.items()):
        ledger.record(year, iteration, node, fom.flow_key(cls, attr), value)


def record_internal(ledger: FlowLedger, year: int, iteration: int,
                    internal: Mapping[tuple[str, str], float]) -> None:
    for (node, series), value in sorted(internal.items()):
        ledger.record(year, iteration, node, series, value)


@dataclass(frozen=True)
class SimulationResult:
    scenario: Scenario
    plan: tuple[ElementInstance, ...]
    ledger: FlowLedger
    reports: tuple[ObjectiveReport, ...]
    budget_violations: tuple[int, ...]

    @property
    def final_report(self) -> ObjectiveReport | None:
        return self.reports[-1] if self.reports else None


def compute_reports(ledger: FlowLedger, scenario: Scenario) -> tuple[ObjectiveReport, ...]:
    h = scenario.horizon
    return tuple(objective_report(ledger, scenario, y)
                 for y in range(h.plan_start + 1, h.end + 1))


def run_simulation(scenario: Scenario, plan: Sequence[ElementInstance] = (),
                   overrides: BoundaryOverrides = NO_OVERRIDES) -> SimulationResult:
    """Run the whole horizon in process and score it.

    `plan` layers extra elements onto the scenario's initial set.
    `overrides` substitutes imported counterpart flows (decoupled mode).
    """
    ledger = FlowLedger(scenario.iterations_per_year)
    soc = SocietalModel(scenario)
    ag = AgricultureModel(scenario, plan)
    wat = WaterModel(scenario, plan)
    en = EnergyModel(scenario, plan)

    for year in scenario.horizon.years:
        for k in range(1, scenario.iterations_per_year + 1):
            soc_out = soc.step(year)
            record_step_output(ledger, year, k, soc_out)

            ag_out = ag.step(year, k, soc_out.published)
            ag_pub = overrides.apply(ag_out.published, year)
            record_published(ledger, year, k, ag_pub)
            record_internal(ledger, year, k, ag_out.internal)

            wat_inputs = {**soc_out.published, **ag_pub}
            wat_out = wat.step(year, k, wat_inputs)
            wat_pub = overrides.apply(wat_out.published, year)
            record_published(ledger, year, k, wat_pub)
            record_internal(ledger, year, k, wat_out.internal)

            en_inputs = {**soc_out.published, **wat_pub}
            en_out = en.step(year, k, en_inputs)
            en_pub = overrides.apply(en_out.published, year)
            record_published(ledger, year, k, en_pub)
            record_internal(ledger, year, k, en_out.internal)
        ag.commit_year(year)
        wat.commit_year(year)
        en.commit_year(year)

    reports = compute_reports(ledger, scenario)
    violations = budget_violation_years(ledger, scenario.node_ids,
                                        scenario.budget_limit,
                                        scenario.horizon.years)
    return SimulationResult(scenario=scenario, plan=tuple(plan), ledger=ledger,
                            reports=reports, budget_violations=violations)


def iteration_drift(ledger: FlowLedger, scenario: Scenario, year: int) -> float:
    """Largest relative change of any series between the last two rounds."""
    n_iter = scenario.iterations_per_year
    if n_iter < 2:
        return 0.0
    worst = 0.0
    for (y, k, node, series), v in ledger.items():
        if y != year or k != n_iter:
            continue
        prev = ledger.get(year, n_iter - 1, node, series)
        denom = max(abs(v), abs(prev), 1e-6)
        worst = max(worst, abs(v - prev) / denom)
    return worst
