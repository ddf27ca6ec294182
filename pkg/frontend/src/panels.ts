/**
 * Output panel view models.
 *
 * Everything here is pure: given a session state and a region mode it
 * returns plain chart descriptions. Role privacy falls out of the
 * state itself, which only ever holds series the joined role may see.
 */

import type { ChartSeries, RegionMode } from "./charts";
import { chartSeries, nationalTotal } from "./charts";
import { isObserverSnapshot } from "./protocol";
import type { SessionState, Trace } from "./state";
import { annualValues, latestExecIndex, latestSnapshot } from "./state";

export interface ChartPanel {
  title: string;
  units: string;
  series: ChartSeries[];
  /** Horizontal reference line, e.g. the annual budget limit. */
  reference?: { label: string; value: number };
  highlightYears?: number[];
}

const CURRENCY_SERIES = [
  "agriculture.currency_flow",
  "water.currency_flow",
  "petroleum.currency_flow",
  "electrical.currency_flow",
];

const CAPITAL_SERIES = [
  "agriculture.capital_expenses",
  "water.capital_expenses",
  "petroleum.capital_expenses",
  "electrical.capital_expenses",
];

const BOUNDARY_FLOWS = [
  "agriculture.food_out_societal",
  "water.water_out_agriculture",
  "water.water_out_societal",
  "petroleum.oil_out_societal",
  "petroleum.oil_out_electrical",
  "electrical.electricity_out_water",
  "electrical.electricity_out_societal",
];

export function humanize(seriesKey: string): string {
  const slug = seriesKey.includes(".")
    ? seriesKey.slice(seriesKey.indexOf(".") + 1)
    : seriesKey;
  return slug
    .replace(/_out_(\w+)/, " out ($1)")
    .replace(/_in_(\w+)/, " in ($1)")
    .replace(/_/g, " ");
}

function tracesOf(state: SessionState, series: string): Trace[] {
  const index = latestExecIndex(state);
  if (index === null) return [];
  const exec = state.execs.get(index);
  if (!exec) return [];
  return [...exec.traces.values()]
    .filter((t) => t.series === series)
    .sort((a, b) => a.objectName.localeCompare(b.objectName));
}

/** Per-region sum over several series; label is the region name. */
function sumAcrossSeries(
  state: SessionState,
  keys: readonly string[],
): Trace[] {
  const byRegion = new Map<string, Map<number, number>>();
  let units = "";
  for (const key of keys) {
    for (const trace of tracesOf(state, key)) {
      units = trace.units;
      let region = byRegion.get(trace.objectName);
      if (!region) {
        region = new Map();
        byRegion.set(trace.objectName, region);
      }
      for (const [year, value] of annualValues(trace)) {
        region.set(year, (region.get(year) ?? 0) + value);
      }
    }
  }
  return [...byRegion.entries()]
    .sort((a, b) => a[0].localeCompare(b[0]))
    .map(([objectName, years]) => ({
      objectName,
      series: "combined",
      className: "",
      units,
      rows: new Map(
        [...years.entries()].map(([y, v]) => [y, [0, v] as [number, number]]),
      ),
    }));
}

export function buildPanels(
  state: SessionState,
  mode: RegionMode,
): ChartPanel[] {
  const panels: ChartPanel[] = [];
  const scenario = state.joined?.scenario ?? null;

  const revenue = sumAcrossSeries(state, CURRENCY_SERIES);
  if (revenue.length) {
    panels.push({
      title: "societal net revenue",
      units: "$",
      series: chartSeries(revenue, mode),
    });
  }

  const capital = sumAcrossSeries(state, CAPITAL_SERIES);
  if (capital.length) {
    const panel: ChartPanel = {
      title: "capital spending vs budget",
      units: "$",
      series: [{ label: "national", points: nationalTotal(capital) }],
    };
    if (scenario) {
      panel.reference = { label: "budget limit", value: scenario.budgetLimit };
    }
    const snap = latestSnapshot(state);
    if (snap) panel.highlightYears = snap.budgetViolationYears;
    panels.push(panel);
  }

  for (const key of BOUNDARY_FLOWS) {
    const traces = tracesOf(state, key);
    if (!traces.length) continue;
    panels.push({
      title: humanize(key),
      units: traces[0]?.units ?? "",
      series: chartSeries(traces, mode),
    });
  }

  // Whatever private series the server let through for this role:
  // stocks, production breakdowns, imports and exports, land use.
  const index = latestExecIndex(state);
  const exec = index === null ? undefined : state.execs.get(index);
  if (exec) {
    const seen = new Set([...CURRENCY_SERIES, ...CAPITAL_SERIES, ...BOUNDARY_FLOWS]);
    const rest = new Map<string, Trace[]>();
    for (const trace of exec.traces.values()) {
      if (seen.has(trace.series)) continue;
      const list = rest.get(trace.series);
      if (list) list.push(trace);
      else rest.set(trace.series, [trace]);
    }
    for (const key of [...rest.keys()].sort()) {
      const traces = (rest.get(key) ?? []).sort((a, b) =>
        a.objectName.localeCompare(b.objectName),
      );
      panels.push({
        title: humanize(key),
        units: traces[0]?.units ?? "",
        series: chartSeries(traces, mode),
      });
    }
  }
  return panels;
}

export interface ObjectivePanel {
  kind: "player" | "observer" | "none";
  rows: { label: string; value: string }[];
  series: ChartSeries[];
  /** Numeric joint score, coarse level, or null when withheld. */
  joint: string | null;
  violations: number[];
}

const EMPTY_OBJECTIVES: ObjectivePanel = {
  kind: "none",
  rows: [],
  series: [],
  joint: null,
  violations: [],
};

function score(value: number): string {
  return value.toFixed(1);
}

export function buildObjectivePanel(state: SessionState): ObjectivePanel {
  const snap = latestSnapshot(state);
  if (!snap) return EMPTY_OBJECTIVES;
  if (isObserverSnapshot(snap)) {
    const reports = snap.reports;
    const final = reports[reports.length - 1];
    const rows = final
      ? [
          { label: "food security", value: score(final.foodSecurity) },
          { label: "aquifer security", value: score(final.aquiferSecurity) },
          { label: "reservoir security", value: score(final.reservoirSecurity) },
        ]
      : [];
    const line = (
      label: string,
      pick: (r: (typeof reports)[number]) => number,
    ): ChartSeries => ({
      label,
      points: reports.map((r) => [r.year, pick(r)] as [number, number]),
    });
    return {
      kind: "observer",
      rows,
      series: [
        line("food", (r) => r.foodSecurity),
        line("aquifer", (r) => r.aquiferSecurity),
        line("reservoir", (r) => r.reservoirSecurity),
        line("joint", (r) => r.jointObjective),
      ],
      joint: score(snap.jointObjective),
      violations: snap.budgetViolationYears,
    };
  }
  const rows = [
    { label: "security score", value: score(snap.securityScore) },
    { label: "financial security", value: score(snap.financialSecurity) },
    { label: "political power", value: score(snap.politicalPower) },
  ];
  let joint: string | null = null;
  if (typeof snap.jointObjective === "number") {
    joint = score(snap.jointObjective);
  } else if (snap.jointObjectiveLevel) {
    joint = snap.jointObjectiveLevel;
  }
  const history = snap.series;
  const line = (
    label: string,
    pick: (p: (typeof history)[number]) => number,
  ): ChartSeries => ({
    label,
    points: history.map((p) => [p.year, pick(p)] as [number, number]),
  });
  return {
    kind: "player",
    rows,
    series: [
      line("security", (p) => p.securityScore),
      line("financial", (p) => p.financialSecurity),
      line("political", (p) => p.politicalPower),
    ],
    joint,
    violations: snap.budgetViolationYears,
  };
}
