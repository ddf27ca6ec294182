/**
 * Client-side mirror of the per-role series visibility rule.
 *
 * The gateway already filters attr_update traffic before it reaches a
 * client, so this table is a defense in depth: anything that slips
 * through is dropped again here, and the tests replay captured traffic
 * against the same predicate.
 */

import type { Role, SectorRole } from "./protocol";

/** Sector-internal ledger series and the role that owns each one. */
export const INTERNAL_SERIES: ReadonlyMap<string, SectorRole | null> = new Map([
  ["societal.population", null],
  ["agriculture.food_production", "agriculture"],
  ["agriculture.food_transport", "agriculture"],
  ["agriculture.food_import", "agriculture"],
  ["agriculture.food_export", "agriculture"],
  ["agriculture.land_use", "agriculture"],
  ["water.water_production", "water"],
  ["water.water_lift", "water"],
  ["water.water_import", "water"],
  ["water.aquifer_stock", "water"],
  ["petroleum.oil_production", "energy"],
  ["petroleum.oil_transport", "energy"],
  ["petroleum.oil_import", "energy"],
  ["petroleum.oil_export", "energy"],
  ["petroleum.reservoir_withdrawal", "energy"],
  ["petroleum.reservoir_stock", "energy"],
  ["electrical.electricity_production", "energy"],
  ["electrical.private_generation", "energy"],
]);

const PUBLISHED_PREFIXES = new Set([
  "agriculture",
  "water",
  "petroleum",
  "electrical",
  "societal",
]);

/** Owning role of a series; null when it is common to every role. */
export function seriesOwner(series: string): SectorRole | null {
  const internal = INTERNAL_SERIES.get(series);
  if (internal !== undefined) return internal;
  return null;
}

export function seriesVisible(role: Role, series: string): boolean {
  if (role === "observer") return true;
  const internal = INTERNAL_SERIES.get(series);
  if (internal !== undefined) return internal === null || internal === role;
  // Cross-boundary flows are broadcast; fail closed on unknown prefixes.
  const prefix = series.split(".", 1)[0] ?? "";
  return PUBLISHED_PREFIXES.has(prefix);
}

/** Series a client should keep, given the role it joined as. */
export function filterSeries<T extends { series: string }>(
  role: Role,
  updates: readonly T[],
): T[] {
  return updates.filter((u) => seriesVisible(role, u.series));
}
