"""Scenario documents: dataclasses, parsing, validation.

A scenario is a single JSON tree carrying every parameter a run needs:
nodes with logistic population/demand curves and sector pricing, element
templates, the initially installed elements, objective scoring
parameters, the planning horizon, and the declared unit conversions.
Values are stored in the units they are conventionally quoted in; the
field names carry the unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping

from sipg import units

FORMAT_VERSION = 1

RESOURCES = ("food", "water", "oil", "electricity")

SECTOR_AGRICULTURE = "agriculture"
SECTOR_WATER = "water"
SECTOR_PETROLEUM = "petroleum"
SECTOR_ELECTRICAL = "electrical"
SECTORS = (SECTOR_AGRICULTURE, SECTOR_WATER, SECTOR_PETROLEUM, SECTOR_ELECTRICAL)

KIND_PRODUCTION = "production"
KIND_DISTRIBUTION = "distribution"

DEFAULT_LIFESPAN_YEARS = 60
DEFAULT_BUDGET_LIMIT = 10.0e9

VISIBILITY_QUANTITATIVE = "quantitative"
VISIBILITY_QUALITATIVE = "qualitative"


class ScenarioError(ValueError):
    """Raised when a document fails validation; carries every finding."""

    def __init__(self, findings: list[str]):
        self.findings = list(findings)
        super().__init__("; ".join(findings))


@dataclass(frozen=True)
class LogisticParams:
    """Saturating growth curve; population uses minimum = 0."""
    datum_year: int
    initial: float
    maximum: float
    rate: float
    minimum: float = 0.0


@dataclass(frozen=True)
class AgricultureNodeParams:
    local_price_gj: float
    import_price_gj: float
    export_price_gj: float
    labor_fraction: float
    arable_land_km2: float


@dataclass(frozen=True)
class WaterNodeParams:
    local_price_m3: float
    import_price_m3: float
    initial_aquifer_km3: float
    recharge_km3_per_year: float
    coastal: bool
    lift_aquifer_m3_per_m3: float
    lift_electricity_kwh_per_m3: float


@dataclass(frozen=True)
class EnergyNodeParams:
    oil_local_price_toe: float
    oil_import_price_toe: float
    oil_export_price_toe: float
    initial_reservoir_btoe: float
    electricity_price_mwh: float
    private_oil_toe_per_mwh: float


@dataclass(frozen=True)
class NodeConfig:
    id: str
    population: LogisticParams
    demands: Mapping[str, LogisticParams]
    agriculture: AgricultureNodeParams
    water: WaterNodeParams
    energy: EnergyNodeParams


@dataclass(frozen=True)
class ElementTemplate:
    """One row of the element catalog.

    Fields keep the units the catalog quotes them in; fields that do not
    apply to a sector/kind stay None/0.  `capacity` resolves the
    operational ceiling in ledger units.
    """
    id: str
    sector: str
    kind: str
    capital_millions: float
    capital_years: int
    fixed_millions: float
    lifespan_years: int = DEFAULT_LIFESPAN_YEARS
    efficiency: float | None = None
    variable_cost: float = 0.0
    land_capacity_km2: float | None = None
    labor_per_km2: float = 0.0
    water_mcm_per_km2: float = 0.0
    food_yield_tj_per_km2: float = 0.0
    transport_capacity_gj: float | None = None
    production_capacity_mcm: float | None = None
    electricity_kwh_per_m3: float = 0.0
    production_capacity_mtoe: float | None = None
    reservoir_toe_per_toe: float = 0.0
    transport_capacity_mtoe: float | None = None
    electricity_kwh_per_toe: float = 0.0
    production_capacity_twh: float | None = None
    oil_toe_per_mwh: float = 0.0

    @property
    def capacity(self) -> float:
        """Operational ceiling in ledger units (km2, GJ, MCM, Mtoe, TWh)."""
        for v in (self.land_capacity_km2, self.transport_capacity_gj,
                  self.production_capacity_mcm, self.production_capacity_mtoe,
                  self.transport_capacity_mtoe, self.production_capacity_twh):
            if v is not None:
                return v
        raise ValueError(f"template {self.id!r} has no capacity field")


@dataclass(frozen=True)
class ElementInstance:
    id: str
    template: str
    origin: str
    destination: str
    commission_start: int


@dataclass(frozen=True)
class Horizon:
    start: int
    plan_start: int
    end: int

    @property
    def years(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class FinancialBounds:
    min_2010: float
    max_2010: float
    growth_rate: float


@dataclass(frozen=True)
class PoliticalBounds:
    max_2010: float
    growth_rate: float


@dataclass(frozen=True)
class ObjectiveParams:
    base_year: int
    anchor_year: int
    food_target_ratio: float
    aquifer_years_low: float
    aquifer_years_high: float
    reservoir_years_low: float
    reservoir_years_high: float
    financial: Mapping[str, FinancialBounds]   # agriculture/water/energy/joint
    political: Mapping[str, PoliticalBounds]   # agriculture/water/energy


@dataclass(frozen=True)
class Conversions:
    kcal_per_gj: float = units.DEFAULT_KCAL_PER_GJ
    days_per_year: float = units.DEFAULT_DAYS_PER_YEAR


@dataclass(frozen=True)
class Scenario:
    name: str
    horizon: Horizon
    iterations_per_year: int
    budget_limit: float
    conversions: Conversions
    apply_recharge: bool
    joint_objective_visibility: str
    objectives: ObjectiveParams
    nodes: tuple[NodeConfig, ...]
    templates: Mapping[str, ElementTemplate]
    initial_elements: tuple[ElementInstance, ...]

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def node(self, node_id: str) -> NodeConfig:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)


# --- parsing helpers -------------------------------------------------------

class _Reader:
    """Tracks the JSON path of each access so findings name the offender."""

    def __init__(self, findings: list[str]):
        self.findings = findings

    def fail(self, path: str, message: str) -> None:
        self.findings.append(f"{path}: {message}")

    def get(self, obj: Mapping, path: str, key: str, kind, required=True, default=None):
        here = f"{path}.{key}" if path else key
        if not isinstance(obj, Mapping) or key not in obj:
            if required:
                self.fail(here, "missing")
            return default
        value = obj[key]
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                self.fail(here, f"expected number, got {type(value).__name__}")
                return default
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                if isinstance(value, float) and value.is_integer():
                    return int(value)
                self.fail(here, f"expected integer, got {value!r}")
                return default
            return value
        if kind is str:
            if not isinstance(value, str):
                self.fail(here, f"expected string, got {type(value).__name__}")
                return default
            return value
        if kind is bool:
            if not isinstance(value, bool):
                self.fail(here, f"expected boolean, got {type(value).__name__}")
                return default
            return value
        if kind in (list, dict):
            if not isinstance(value, kind):
                self.fail(here, f"expected {kind.__name__}")
                return default
            return value
        raise TypeError(kind)

    def positive(self, obj, path, key, kind=float, required=True, default=None):
        v = self.get(obj, path, key, kind, required, default)
        if v is not None and v <= 0:
            self.fail(f"{path}.{key}" if path else key, f"must be positive, got {v}")
        return v

    def nonnegative(self, obj, path, key, kind=float, required=True, default=None):
        v = self.get(obj, path, key, kind, required, default)
        if v is not None and v < 0:
            self.fail(f"{path}.{key}" if path else key, f"must be nonnegative, got {v}")
        return v


def _parse_logistic(r: _Reader, obj, path: str, population: bool) -> LogisticParams | None:
    if obj is None:
        return None
    if population:
        datum = r.get(obj, path, "datumYear", int)
        initial = r.positive(obj, path, "initialMillions")
        maximum = r.positive(obj, path, "maxMillions")
        rate = r.positive(obj, path, "growthRate")
        minimum = 0.0
    else:
        datum = r.get(obj, path, "datumYear", int)
        initial = r.nonnegative(obj, path, "initial")
        maximum = r.nonnegative(obj, path, "max")
        rate = r.positive(obj, path, "growthRate")
        minimum = r.nonnegative(obj, path, "min")
    if None in (datum, initial, maximum, rate, minimum):
        return None
    if minimum > initial or initial > maximum:
        r.fail(path, f"requires min <= initial <= max, got {minimum}/{initial}/{maximum}")
        return None
    return LogisticParams(datum_year=datum, initial=initial, maximum=maximum,
                          rate=rate, minimum=minimum)


def _parse_node(r: _Reader, obj, path: str) -> NodeConfig | None:
    node_id = r.get(obj, path, "id", str)
    pop = _parse_logistic(r, r.get(obj, path, "population", dict), f"{path}.population", True)
    demands_doc = r.get(obj, path, "demands", dict)
    demands = {}
    if demands_doc is not None:
        for res in RESOURCES:
            curve = _parse_logistic(r, r.get(demands_doc, f"{path}.demands", res, dict),
                                    f"{path}.demands.{res}", False)
            if curve is not None:
                demands[res] = curve

    ag_doc = r.get(obj, path, "agriculture", dict)
    ag = None
    if ag_doc is not None:
        p = f"{path}.agriculture"
        local = r.nonnegative(ag_doc, p, "localPricePerGj")
        imp = r.nonnegative(ag_doc, p, "importPricePerGj")
        exp = r.nonnegative(ag_doc, p, "exportPricePerGj")
        labor = r.nonnegative(ag_doc, p, "laborFraction")
        land = r.nonnegative(ag_doc, p, "arableLandKm2")
        if None not in (local, imp, exp, labor, land):
            if exp >= imp:
                r.fail(p, f"export price {exp} must stay below import price {imp}")
            if labor > 1.0:
                r.fail(f"{p}.laborFraction", f"must be a fraction <= 1, got {labor}")
            ag = AgricultureNodeParams(local, imp, exp, labor, land)

    w_doc = r.get(obj, path, "water", dict)
    w = None
    if w_doc is not None:
        p = f"{path}.water"
        local = r.nonnegative(w_doc, p, "localPricePerM3")
        imp = r.nonnegative(w_doc, p, "importPricePerM3")
        aquifer = r.nonnegative(w_doc, p, "initialAquiferKm3")
        recharge = r.nonnegative(w_doc, p, "rechargeKm3PerYear")
        coastal = r.get(w_doc, p, "coastal", int)
        lift_aq = r.nonnegative(w_doc, p, "liftAquiferM3PerM3")
        lift_el = r.nonnegative(w_doc, p, "liftElectricityKwhPerM3")
        if coastal is not None and coastal not in (0, 1):
            r.fail(f"{p}.coastal", f"must be 0 or 1, got {coastal}")
            coastal = None
        if None not in (local, imp, aquifer, recharge, coastal, lift_aq, lift_el):
            w = WaterNodeParams(local, imp, aquifer, recharge, bool(coastal),
                                lift_aq, lift_el)

    e_doc = r.get(obj, path, "energy", dict)
    en = None
    if e_doc is not None:
        p = f"{path}.energy"
        local = r.nonnegative(e_doc, p, "oilLocalPricePerToe")
        imp = r.nonnegative(e_doc, p, "oilImportPricePerToe")
        exp = r.nonnegative(e_doc, p, "oilExportPricePerToe")
        reservoir = r.nonnegative(e_doc, p, "initialReservoirBtoe")
        elec = r.nonnegative(e_doc, p, "electricityPricePerMwh")
        private = r.nonnegative(e_doc, p, "privateOilToePerMwh")
        if None not in (local, imp, exp, reservoir, elec, private):
            if exp >= imp:
                r.fail(p, f"oil export price {exp} must stay below import price {imp}")
            en = EnergyNodeParams(local, imp, exp, reservoir, elec, private)

    if None in (node_id, pop, ag, w, en) or len(demands) != len(RESOURCES):
        return None
    return NodeConfig(id=node_id, population=pop, demands=demands,
                      agriculture=ag, water=w, energy=en)


_TEMPLATE_REQUIRED: dict[tuple[str, str], tuple[tuple[str, str], ...]] = {
    (SECTOR_AGRICULTURE, KIND_PRODUCTION): (
        ("variableDollarsPerKm2", "variable_cost"),
        ("landCapacityKm2", "land_capacity_km2"),
        ("laborPerKm2", "labor_per_km2"),
        ("waterMcmPerKm2", "water_mcm_per_km2"),
        ("foodYieldTjPerKm2", "food_yield_tj_per_km2"),
    ),
    (SECTOR_AGRICULTURE, KIND_DISTRIBUTION): (
        ("variableDollarsPerGj", "variable_cost"),
        ("transportCapacityGj", "transport_capacity_gj"),
    ),
    (SECTOR_WATER, KIND_PRODUCTION): (
        ("variableDollarsPerM3", "variable_cost"),
        ("productionCapacityMcm", "production_capacity_mcm"),
        ("electricityKwhPerM3", "electricity_kwh_per_m3"),
    ),
    (SECTOR_PETROLEUM, KIND_PRODUCTION): (
        ("variableDollarsPerToe", "variable_cost"),
        ("productionCapacityMtoe", "production_capacity_mtoe"),
        ("reservoirToePerToe", "reservoir_toe_per_toe"),
    ),
    (SECTOR_PETROLEUM, KIND_DISTRIBUTION): (
        ("variableDollarsPerToe", "variable_cost"),
        ("transportCapacityMtoe", "transport_capacity_mtoe"),
        ("electricityKwhPerToe", "electricity_kwh_per_toe"),
    ),
    (SECTOR_ELECTRICAL, KIND_PRODUCTION): (
        ("variableDollarsPerMwh", "variable_cost"),
        ("productionCapacityTwh", "production_capacity_twh"),
        ("oilToePerMwh", "oil_toe_per_mwh"),
    ),
}


def _parse_template(r: _Reader, obj, path: str) -> ElementTemplate | None:
    tid = r.get(obj, path, "id", str)
    sector = r.get(obj, path, "sector", str)
    kind = r.get(obj, path, "kind", str)
    if sector is not None and sector not in SECTORS:
        r.fail(f"{path}.sector", f"unknown sector {sector!r}")
        return None
    if kind is not None and kind not in (KIND_PRODUCTION, KIND_DISTRIBUTION):
        r.fail(f"{path}.kind", f"unknown kind {kind!r}")
        return None
    capital = r.nonnegative(obj, path, "capitalMillions")
    capital_years = r.positive(obj, path, "capitalYears", int)
    fixed = r.nonnegative(obj, path, "fixedMillions")
    lifespan = r.positive(obj, path, "lifespanYears", int, required=False,
                          default=DEFAULT_LIFESPAN_YEARS)
    if None in (tid, sector, kind, capital, capital_years, fixed, lifespan):
        return None
    spec = _TEMPLATE_REQUIRED.get((sector, kind))
    if spec is None:
        r.fail(path, f"{sector} has no {kind} elements")
        return None
    fields: dict[str, Any] = {}
    for doc_key, attr in spec:
        v = r.nonnegative(obj, path, doc_key)
        if v is None:
            return None
        fields[attr] = v
    efficiency = None
    if kind == KIND_DISTRIBUTION:
        efficiency = r.get(obj, path, "efficiency", float)
        if efficiency is None:
            return None
        if not (0.0 < efficiency <= 1.0):
            r.fail(f"{path}.efficiency", f"must be in (0, 1], got {efficiency}")
            return None
    return ElementTemplate(id=tid, sector=sector, kind=kind,
                           capital_millions=capital, capital_years=capital_years,
                           fixed_millions=fixed, lifespan_years=lifespan,
                           efficiency=efficiency, **fields)


def _parse_element(r: _Reader, obj, path: str) -> ElementInstance | None:
    eid = r.get(obj, path, "id", str)
    template = r.get(obj, path, "template", str)
    origin = r.get(obj, path, "origin", str)
    destination = r.get(obj, path, "destination", str)
    start = r.get(obj, path, "commissionStart", int)
    if None in (eid, template, origin, destination, start):
        return None
    return ElementInstance(id=eid, template=template, origin=origin,
                           destination=destination, commission_start=start)


def check_element(element: ElementInstance, templates: Mapping[str, ElementTemplate],
                  node_ids: tuple[str, ...], path: str) -> list[str]:
    """Referential checks shared by scenario elements and plan documents."""
    findings = []
    tpl = templates.get(element.template)
    if tpl is None:
        findings.append(f"{path}.template: unknown template {element.template!r}")
    if element.origin not in node_ids:
        findings.append(f"{path}.origin: unknown node {element.origin!r}")
    if element.destination not in node_ids:
        findings.append(f"{path}.destination: unknown node {element.destination!r}")
    if tpl is not None and tpl.kind == KIND_PRODUCTION \
            and element.origin != element.destination:
        findings.append(f"{path}: production elements must site origin == destination")
    return findings


def _parse_objectives(r: _Reader, obj, path: str) -> ObjectiveParams | None:
    if obj is None:
        return None
    base = r.get(obj, path, "baseYear", int, required=False, default=1940)
    anchor = r.get(obj, path, "anchorYear", int, required=False, default=2010)
    target = r.positive(obj, path, "foodTargetRatio", required=False, default=0.75)
    if target is not None and target > 1.0:
        r.fail(f"{path}.foodTargetRatio", f"must be a ratio <= 1, got {target}")

    def band(key, default_low, default_high):
        b = r.get(obj, path, key, dict, required=False)
        if b is None:
            return (default_low, default_high)
        low = r.nonnegative(b, f"{path}.{key}", "low", required=False, default=default_low)
        high = r.positive(b, f"{path}.{key}", "high", required=False, default=default_high)
        if low is not None and high is not None and high <= low:
            r.fail(f"{path}.{key}", f"requires low < high, got {low} >= {high}")
        return (low, high)

    aq_low, aq_high = band("aquiferYears", 20.0, 200.0)
    rv_low, rv_high = band("reservoirYears", 0.0, 200.0)

    fin_doc = r.get(obj, path, "financial", dict)
    financial = {}
    if fin_doc is not None:
        for key in ("agriculture", "water", "energy", "joint"):
            p = f"{path}.financial.{key}"
            d = r.get(fin_doc, f"{path}.financial", key, dict)
            if d is None:
                continue
            lo = r.get(d, p, "min2010", float)
            hi = r.get(d, p, "max2010", float)
            rate = r.positive(d, p, "growthRate")
            if None in (lo, hi, rate):
                continue
            if hi < lo:
                r.fail(p, f"max2010 {hi} below min2010 {lo}")
                continue
            financial[key] = FinancialBounds(lo, hi, rate)
    pol_doc = r.get(obj, path, "political", dict)
    political = {}
    if pol_doc is not None:
        for key in ("agriculture", "water", "energy"):
            p = f"{path}.political.{key}"
            d = r.get(pol_doc, f"{path}.political", key, dict)
            if d is None:
                continue
            hi = r.positive(d, p, "max2010")
            rate = r.positive(d, p, "growthRate")
            if None in (hi, rate):
                continue
            political[key] = PoliticalBounds(hi, rate)

    if None in (base, anchor, target, aq_low, aq_high, rv_low, rv_high) \
            or len(financial) != 4 or len(political) != 3:
        return None
    return ObjectiveParams(base_year=base, anchor_year=anchor,
                           food_target_ratio=target,
                           aquifer_years_low=aq_low, aquifer_years_high=aq_high,
                           reservoir_years_low=rv_low, reservoir_years_high=rv_high,
                           financial=financial, political=political)


def validate_document(doc: Any) -> list[str]:
    """Run every check; returns a list of findings (empty means clean)."""
    findings: list[str] = []
    r = _Reader(findings)
    if not isinstance(doc, Mapping):
        return ["document: expected a JSON object at the top level"]

    version = r.get(doc, "", "formatVersion", int)
    if version is not None and version != FORMAT_VERSION:
        r.fail("formatVersion", f"unsupported version {version}, expected {FORMAT_VERSION}")

    hz = r.get(doc, "", "horizon", dict)
    if hz is not None:
        start = r.get(hz, "horizon", "start", int)
        plan_start = r.get(hz, "horizon", "planStart", int)
        end = r.get(hz, "horizon", "end", int)
        if None not in (start, plan_start, end) and not (start <= plan_start < end):
            r.fail("horizon", f"requires start <= planStart < end, got "
                              f"{start}/{plan_start}/{end}")

    r.positive(doc, "", "iterationsPerYear", int, required=False, default=4)
    r.positive(doc, "", "budgetLimit", required=False, default=DEFAULT_BUDGET_LIMIT)

    conv = r.get(doc, "", "conversions", dict, required=False)
    if conv is not None:
        r.positive(conv, "conversions", "kcalPerGigajoule", required=False,
                   default=units.DEFAULT_KCAL_PER_GJ)
        r.positive(conv, "conversions", "daysPerYear", required=False,
                   default=units.DEFAULT_DAYS_PER_YEAR)

    flags = r.get(doc, "", "flags", dict, required=False)
    if flags is not None:
        vis = r.get(flags, "flags", "jointObjectiveVisibility", str,
                    required=False, default=VISIBILITY_QUANTITATIVE)
        if vis not in (VISIBILITY_QUANTITATIVE, VISIBILITY_QUALITATIVE):
            r.fail("flags.jointObjectiveVisibility",
                   f"must be {VISIBILITY_QUANTITATIVE!r} or {VISIBILITY_QUALITATIVE!r}")
        r.get(flags, "flags", "applyRecharge", bool, required=False, default=False)

    _parse_objectives(r, r.get(doc, "", "objectives", dict), "objectives")

    nodes_doc = r.get(doc, "", "nodes", list)
    nodes: list[NodeConfig] = []
    if nodes_doc is not None:
        if not nodes_doc:
            r.fail("nodes", "at least one node required")
        seen = set()
        for i, nd in enumerate(nodes_doc):
            node = _parse_node(r, nd, f"nodes[{i}]")
            if node is not None:
                if node.id in seen:
                    r.fail(f"nodes[{i}].id", f"duplicate node id {node.id!r}")
                seen.add(node.id)
                nodes.append(node)

    templates_doc = r.get(doc, "", "templates", list)
    templates: dict[str, ElementTemplate] = {}
    if templates_doc is not None:
        for i, td in enumerate(templates_doc):
            tpl = _parse_template(r, td, f"templates[{i}]")
            if tpl is not None:
                if tpl.id in templates:
                    r.fail(f"templates[{i}].id", f"duplicate template id {tpl.id!r}")
                templates[tpl.id] = tpl

    elements_doc = r.get(doc, "", "elements", list, required=False, default=[])
    node_ids = tuple(n.id for n in nodes)
    seen_el = set()
    for i, ed in enumerate(elements_doc or []):
        el = _parse_element(r, ed, f"elements[{i}]")
        if el is None:
            continue
        if el.id in seen_el:
            r.fail(f"elements[{i}].id", f"duplicate element id {el.id!r}")
        seen_el.add(el.id)
        findings.extend(check_element(el, templates, node_ids, f"elements[{i}]"))

    # The water merit order requires every desalination unit cost to stay
    # below the import price at every node, or no valid lifting cost exists.
    for node in nodes:
        for tpl in templates.values():
            if tpl.sector == SECTOR_WATER and tpl.kind == KIND_PRODUCTION:
                unit_cost = tpl.variable_cost + tpl.electricity_kwh_per_m3 * \
                    node.energy.electricity_price_mwh / 1000.0
                if unit_cost >= node.water.import_price_m3:
                    r.fail(f"nodes[{node_ids.index(node.id)}].water.importPricePerM3",
                           f"template {tpl.id!r} unit cost {unit_cost} exceeds "
                           f"import price; no valid lifting cost exists")
    return findings


def build_scenario(doc: Any) -> Scenario:
    """Validate and convert a parsed JSON document into a Scenario."""
    findings = validate_document(doc)
    if findings:
        raise ScenarioError(findings)
    r = _Reader([])  # findings already clean; reader used for typed access
    hz = doc["horizon"]
    horizon = Horizon(hz["start"], hz["planStart"], hz["end"])
    conv = doc.get("conversions") or {}
    conversions = Conversions(
        kcal_per_gj=float(conv.get("kcalPerGigajoule", units.DEFAULT_KCAL_PER_GJ)),
        days_per_year=float(conv.get("daysPerYear", units.DEFAULT_DAYS_PER_YEAR)))
    flags = doc.get("flags") or {}
    nodes = tuple(_parse_node(r, nd, f"nodes[{i}]")
                  for i, nd in enumerate(doc["nodes"]))
    templates = {}
    for i, td in enumerate(doc["templates"]):
        tpl = _parse_template(r, td, f"templates[{i}]")
        templates[tpl.id] = tpl
    elements = tuple(_parse_element(r, ed, f"elements[{i}]")
                     for i, ed in enumerate(doc.get("elements") or []))
    objectives = _parse_objectives(r, doc["objectives"], "objectives")
    if r.findings:
        raise ScenarioError(r.findings)
    return Scenario(
        name=str(doc.get("name", "scenario")),
        horizon=horizon,
        iterations_per_year=int(doc.get("iterationsPerYear", 4)),
        budget_limit=float(doc.get("budgetLimit", DEFAULT_BUDGET_LIMIT)),
        conversions=conversions,
        apply_recharge=bool(flags.get("applyRecharge", False)),
        joint_objective_visibility=str(flags.get("jointObjectiveVisibility",
                                                 VISIBILITY_QUANTITATIVE)),
        objectives=objectives,
        nodes=nodes,
        templates=templates,
        initial_elements=elements,
    )


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return build_scenario(json.load(fh))


def default_document() -> dict:
    text = resources.files("sipg").joinpath("data/default_scenario.json").read_text("utf-8")
    return json.loads(text)


def default_scenario() -> Scenario:
    return build_scenario(default_document())


# --- plan documents --------------------------------------------------------

def parse_plan(doc: Any, scenario: Scenario) -> tuple[ElementInstance, ...]:
    """Parse a plan document: extra elements layered onto a scenario.

    Shape: {"formatVersion": 1, "elements": [...]}.  Raises ScenarioError
    with one finding per violation.
    """
    findings: list[str] = []
    r = _Reader(findings)
    if not isinstance(doc, Mapping):
        raise ScenarioError(["plan: expected a JSON object"])
    version = r.get(doc, "plan", "formatVersion", int)
    if version is not None and version != FORMAT_VERSION:
        r.fail("plan.formatVersion", f"unsupported version {version}")
    elements_doc = r.get(doc, "plan", "elements", list)
    out: list[ElementInstance] = []
    taken = {e.id for e in scenario.initial_elements}
    for i, ed in enumerate(elements_doc or []):
        el = _parse_element(r, ed, f"plan.elements[{i}]")
        if el is None:
            continue
        if el.id in taken:
            r.fail(f"plan.elements[{i}].id", f"duplicate element id {el.id!r}")
        taken.add(el.id)
        findings.extend(check_element(el, scenario.templates, scenario.node_ids,
                                      f"plan.elements[{i}]"))
        out.append(el)
    if findings:
        raise ScenarioError(findings)
    return tuple(out)


def load_plan(path, scenario: Scenario) -> tuple[ElementInstance, ...]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_plan(json.load(fh), scenario)
