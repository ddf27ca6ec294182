/**
 * Flow-file exchange for decoupled sessions.
 *
 * A flow document is plain text: a tag line naming the format version
 * and the exporting role, a CSV header, then one row per (year, class,
 * region, attribute) with the annual value from the final iteration.
 * Parsing is strict and mirrors the command-line importer, error codes
 * included, so a file the browser accepts will load there too.
 */

import { SECTOR_ROLES, type SectorRole } from "./protocol";

export const FORMAT_NAME = "sipg-flows";
export const FORMAT_VERSION = 1;
export const HEADER = [
  "year",
  "className",
  "objectName",
  "attribute",
  "value",
  "units",
] as const;

export const ERR_MALFORMED = "malformed";
export const ERR_VERSION_MISMATCH = "version_mismatch";

/** `"ClassName|Attribute"` -> units, for every boundary attribute. */
const ATTRIBUTE_UNITS: ReadonlyMap<string, string> = new Map([
  ["AgricultureSystem|Capital Expenses", "$"],
  ["AgricultureSystem|Currency Flow", "$"],
  ["AgricultureSystem|Food Out (Societal)", "GJ"],
  ["AgricultureSystem|Water In", "MCM"],
  ["ElectricalSystem|Capital Expenses", "$"],
  ["ElectricalSystem|Currency Flow", "$"],
  ["ElectricalSystem|Electricity Out (Societal)", "TWh"],
  ["ElectricalSystem|Electricity Out (Water)", "TWh"],
  ["ElectricalSystem|Oil In", "Mtoe"],
  ["PetroleumSystem|Capital Expenses", "$"],
  ["PetroleumSystem|Currency Flow", "$"],
  ["PetroleumSystem|Electricity In", "TWh"],
  ["PetroleumSystem|Oil Out (Electrical)", "Mtoe"],
  ["PetroleumSystem|Oil Out (Societal)", "Mtoe"],
  ["SocietalSystem|Electricity In", "TWh"],
  ["SocietalSystem|Food In", "GJ"],
  ["SocietalSystem|Oil In", "Mtoe"],
  ["SocietalSystem|Water In", "MCM"],
  ["WaterSystem|Capital Expenses", "$"],
  ["WaterSystem|Currency Flow", "$"],
  ["WaterSystem|Electricity In", "TWh"],
  ["WaterSystem|Water Out (Agriculture)", "MCM"],
  ["WaterSystem|Water Out (Societal)", "MCM"],
]);

export class ExchangeError extends Error {
  constructor(
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = "ExchangeError";
  }
}

export interface FlowRow {
  year: number;
  className: string;
  objectName: string;
  attribute: string;
  value: number;
  units: string;
}

export interface FlowsDocument {
  role: SectorRole;
  version: number;
  rows: FlowRow[];
}

/** Minimal CSV field splitter; the writer never emits quoted fields
 * but a hand-edited file might. */
function splitCsvLine(line: string): string[] {
  const fields: string[] = [];
  let field = "";
  let quoted = false;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (quoted) {
      if (ch === '"') {
        if (line[i + 1] === '"') {
          field += '"';
          i++;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch === '"') {
      quoted = true;
    } else if (ch === ",") {
      fields.push(field);
      field = "";
    } else {
      field += ch;
    }
  }
  fields.push(field);
  return fields;
}

export function parseFlowsText(text: string): FlowsDocument {
  const lines = text.split(/\r?\n/);
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (!lines.length) {
    throw new ExchangeError(ERR_MALFORMED, "empty flow document");
  }
  const tag = (lines[0] ?? "").split(/\s+/).filter(Boolean);
  if (tag.length !== 3 || tag[0] !== FORMAT_NAME) {
    throw new ExchangeError(
      ERR_MALFORMED,
      `first line must be '${FORMAT_NAME} <version> <role>'`,
    );
  }
  const version = Number(tag[1]);
  if (!Number.isInteger(version)) {
    throw new ExchangeError(ERR_MALFORMED, `unreadable version '${tag[1]}'`);
  }
  if (version !== FORMAT_VERSION) {
    throw new ExchangeError(
      ERR_VERSION_MISMATCH,
      `flow format version ${version} not supported (expected ${FORMAT_VERSION})`,
    );
  }
  const role = tag[2] as SectorRole;
  if (!SECTOR_ROLES.includes(role)) {
    throw new ExchangeError(ERR_MALFORMED, `unknown exporting role '${tag[2]}'`);
  }
  const header = splitCsvLine(lines[1] ?? "");
  if (header.length !== HEADER.length || header.some((h, i) => h !== HEADER[i])) {
    throw new ExchangeError(
      ERR_MALFORMED,
      `header row must be '${HEADER.join(",")}'`,
    );
  }
  const rows: FlowRow[] = [];
  const seen = new Set<string>();
  for (let n = 2; n < lines.length; n++) {
    const fields = splitCsvLine(lines[n] ?? "");
    if (fields.length !== HEADER.length) {
      throw new ExchangeError(
        ERR_MALFORMED,
        `line ${n + 1}: expected ${HEADER.length} fields`,
      );
    }
    const [yearText, className, objectName, attribute, valueText, units] =
      fields as [string, string, string, string, string, string];
    const expectedUnits = ATTRIBUTE_UNITS.get(`${className}|${attribute}`);
    if (expectedUnits === undefined) {
      throw new ExchangeError(
        ERR_MALFORMED,
        `line ${n + 1}: unknown attribute '${attribute}' on '${className}'`,
      );
    }
    if (units !== expectedUnits) {
      throw new ExchangeError(
        ERR_MALFORMED,
        `line ${n + 1}: units '${units}' do not match '${expectedUnits}'`,
      );
    }
    const year = Number(yearText);
    const value = Number(valueText);
    if (!Number.isInteger(year) || yearText.trim() === "" ||
        valueText.trim() === "" || Number.isNaN(value)) {
      throw new ExchangeError(
        ERR_MALFORMED,
        `line ${n + 1}: unreadable year or value`,
      );
    }
    if (!Number.isFinite(value)) {
      throw new ExchangeError(ERR_MALFORMED, `line ${n + 1}: value must be finite`);
    }
    const dupKey = `${className}|${attribute}|${objectName}|${year}`;
    if (seen.has(dupKey)) {
      throw new ExchangeError(
        ERR_MALFORMED,
        `line ${n + 1}: duplicate row for '${attribute}' '${objectName}' year ${year}`,
      );
    }
    seen.add(dupKey);
    rows.push({ year, className, objectName, attribute, value, units });
  }
  return { role, version, rows };
}

/** Shortest decimal text that round-trips the value, like the writer. */
export function formatValue(value: number): string {
  if (Number.isInteger(value) && Math.abs(value) < 1e16) {
    return `${value.toFixed(1)}`;
  }
  return String(value);
}

export function serializeFlows(doc: FlowsDocument): string {
  const out: string[] = [`${FORMAT_NAME} ${doc.version} ${doc.role}`];
  out.push(HEADER.join(","));
  for (const row of doc.rows) {
    out.push(
      [
        String(row.year),
        row.className,
        row.objectName,
        row.attribute,
        formatValue(row.value),
        row.units,
      ].join(","),
    );
  }
  return out.join("\n") + "\n";
}

/** Rows regrouped for charting: one trace per (class, attribute, region). */
export function flowsToTraces(
  doc: FlowsDocument,
): { className: string; attribute: string; objectName: string; units: string; points: [number, number][] }[] {
  const buckets = new Map<
    string,
    { className: string; attribute: string; objectName: string; units: string; points: [number, number][] }
  >();
  for (const row of doc.rows) {
    const key = `${row.className}|${row.attribute}|${row.objectName}`;
    let bucket = buckets.get(key);
    if (!bucket) {
      bucket = {
        className: row.className,
        attribute: row.attribute,
        objectName: row.objectName,
        units: row.units,
        points: [],
      };
      buckets.set(key, bucket);
    }
    bucket.points.push([row.year, row.value]);
  }
  const traces = [...buckets.values()];
  for (const t of traces) t.points.sort((a, b) => a[0] - b[0]);
  return traces.sort((a, b) =>
    `${a.className}|${a.attribute}|${a.objectName}`.localeCompare(
      `${b.className}|${b.attribute}|${b.objectName}`,
    ),
  );
}
