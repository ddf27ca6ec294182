/**
 * Plan editor model: grouping, the role-specific template menu, and
 * draft validation. Edits go out optimistically; the canonical plan is
 * whatever the coordinator echoes back, and a rejected edit surfaces
 * inline from the error feed.
 */

import type {
  ElementDoc,
  Role,
  ScenarioDocument,
  TemplateDoc,
} from "./protocol";
import { templateRole } from "./protocol";

export interface LocationGroup {
  location: string;
  elements: ElementDoc[];
}

/** Elements bucketed by the region they sit in (origin side for links). */
export function groupByLocation(
  elements: readonly ElementDoc[],
): LocationGroup[] {
  const buckets = new Map<string, ElementDoc[]>();
  for (const element of elements) {
    const list = buckets.get(element.origin);
    if (list) list.push(element);
    else buckets.set(element.origin, [element]);
  }
  return [...buckets.entries()]
    .map(([location, members]) => ({
      location,
      elements: members.slice().sort((a, b) => a.id.localeCompare(b.id)),
    }))
    .sort((a, b) => a.location.localeCompare(b.location));
}

/** Templates the joined role is allowed to build from. */
export function templateMenu(
  scenario: ScenarioDocument,
  role: Role,
): TemplateDoc[] {
  if (role === "observer") return [];
  return scenario.templates.filter((t) => templateRole(t.sector) === role);
}

const ADMIN_FIELDS = new Set([
  "id",
  "sector",
  "kind",
  "capitalMillions",
  "capitalYears",
  "fixedMillions",
  "lifespanYears",
]);

export interface TemplateDetails {
  id: string;
  sector: string;
  kind: string;
  capitalMillions: number;
  capitalYears: number;
  fixedMillions: number;
  lifespanYears: number;
  /** Remaining numeric fields: capacities, yields, intensities. */
  production: { name: string; value: number }[];
}

/** Fields the element dialog displays for a chosen template. */
export function templateDetails(template: TemplateDoc): TemplateDetails {
  const production: { name: string; value: number }[] = [];
  for (const [name, value] of Object.entries(template)) {
    if (!ADMIN_FIELDS.has(name) && typeof value === "number") {
      production.push({ name, value });
    }
  }
  production.sort((a, b) => a.name.localeCompare(b.name));
  return {
    id: template.id,
    sector: template.sector,
    kind: template.kind,
    capitalMillions: template.capitalMillions,
    capitalYears: template.capitalYears,
    fixedMillions: template.fixedMillions,
    lifespanYears: template.lifespanYears,
    production,
  };
}

export interface Draft {
  id: string;
  template: string;
  origin: string;
  destination: string;
  commissionStart: number;
}

export type DraftField = keyof Draft;

export interface FieldError {
  field: DraftField;
  message: string;
}

export function validateDraft(
  draft: Draft,
  scenario: ScenarioDocument,
  role: Role,
): FieldError[] {
  const errors: FieldError[] = [];
  if (!draft.id.trim()) {
    errors.push({ field: "id", message: "element needs a name" });
  }
  const template = scenario.templates.find((t) => t.id === draft.template);
  if (!template) {
    errors.push({ field: "template", message: "unknown template" });
  } else if (role !== "observer" && templateRole(template.sector) !== role) {
    errors.push({
      field: "template",
      message: `${template.id} belongs to another sector`,
    });
  }
  const nodes = new Set(scenario.nodes.map((n) => n.id));
  if (!nodes.has(draft.origin)) {
    errors.push({ field: "origin", message: "pick a region" });
  }
  if (!nodes.has(draft.destination)) {
    errors.push({ field: "destination", message: "pick a region" });
  }
  const { planStart, end } = scenario.horizon;
  if (!Number.isInteger(draft.commissionStart)) {
    errors.push({
      field: "commissionStart",
      message: "commission year must be a whole year",
    });
  } else if (draft.commissionStart < planStart) {
    errors.push({
      field: "commissionStart",
      message: `commissioning opens in ${planStart}`,
    });
  } else if (draft.commissionStart > end) {
    errors.push({
      field: "commissionStart",
      message: `scenario ends in ${end}`,
    });
  }
  return errors;
}

export function draftToElement(draft: Draft): ElementDoc {
  return {
    id: draft.id.trim(),
    template: draft.template,
    origin: draft.origin,
    destination: draft.destination,
    commissionStart: draft.commissionStart,
  };
}

let counter = 0;

/** Fresh draft for the add dialog; id suggestion is template-region. */
export function newDraft(
  scenario: ScenarioDocument,
  template: TemplateDoc,
  origin: string,
): Draft {
  counter += 1;
  return {
    id: `${template.id}-${origin}-${counter}`,
    template: template.id,
    origin,
    destination: origin,
    commissionStart: scenario.horizon.planStart,
  };
}
