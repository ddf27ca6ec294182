/**
 * Bridge message contract.
 *
 * The gateway pushes JSON messages over a single websocket per client;
 * bodies mirror the federation wire kinds plus gate_state and
 * objective_snapshot. Everything here is shaped after the server
 * payloads, with narrow runtime guards so a malformed push degrades to
 * an ignored message instead of a crashed view.
 */

export const SECTOR_ROLES = ["agriculture", "water", "energy"] as const;
export type SectorRole = (typeof SECTOR_ROLES)[number];
export type Role = SectorRole | "observer";

export type Variant = "1A" | "1B" | "2";
export type JointVisibility = "quantitative" | "qualitative";

export interface ElementDoc {
  id: string;
  template: string;
  origin: string;
  destination: string;
  commissionStart: number;
}

export interface TemplateDoc {
  id: string;
  sector: "agriculture" | "water" | "petroleum" | "electrical";
  kind: string;
  capitalMillions: number;
  capitalYears: number;
  fixedMillions: number;
  lifespanYears: number;
  [param: string]: string | number;
}

export interface ScenarioDocument {
  formatVersion: number;
  name?: string;
  horizon: { start: number; planStart: number; end: number };
  iterationsPerYear: number;
  budgetLimit: number;
  templates: TemplateDoc[];
  nodes: { id: string; [rest: string]: unknown }[];
  elements: ElementDoc[];
  [rest: string]: unknown;
}

export interface JoinAck {
  kind: "join_ack";
  federateId: string;
  role: Role;
  sessionId: string;
  variant: Variant;
  jointObjectiveVisibility: JointVisibility;
  iterationsPerYear: number;
  scenario: ScenarioDocument;
}

export interface GateState {
  kind: "gate_state";
  federateId: string;
  rolesPresent: string[];
  initialized: string[];
  executeRequested: string[];
  gateOpen: boolean;
  running: boolean;
  exchangesCompleted: number;
}

/** One (region, series) trace; values are [year, iteration, value]. */
export interface AttrUpdate {
  kind: "attr_update";
  federateId: string;
  execIndex: number;
  objectName: string;
  series: string;
  className: string;
  units: string;
  values: [number, number, number][];
}

export interface ObjectivePoint {
  year: number;
  securityScore: number;
  financialSecurity: number;
  politicalPower: number;
}

export interface PlayerSnapshot {
  kind: "objective_snapshot";
  execIndex: number;
  year: number;
  role: SectorRole;
  budgetViolationYears: number[];
  series: ObjectivePoint[];
  securityScore: number;
  financialSecurity: number;
  politicalPower: number;
  jointObjective?: number;
  jointObjectiveLevel?: "low" | "medium" | "high";
}

export interface ObserverReport {
  year: number;
  foodSecurity: number;
  aquiferSecurity: number;
  reservoirSecurity: number;
  financialSecurity: Record<string, number>;
  politicalPower: Record<string, number>;
  jointObjective: number;
  budgetViolations: number[];
}

export interface ObserverSnapshot {
  kind: "objective_snapshot";
  execIndex: number;
  year: number;
  role: "observer";
  budgetViolationYears: number[];
  reports: ObserverReport[];
  jointObjective: number;
}

export type ObjectiveSnapshot = PlayerSnapshot | ObserverSnapshot;

export interface ElementEvent {
  kind: "element_added" | "element_edited";
  seq: number;
  timestamp: number;
  role: string;
  element: ElementDoc;
}

export interface ElementRemovedEvent {
  kind: "element_removed";
  seq: number;
  timestamp: number;
  role: string;
  elementId: string;
}

export interface ErrorMessage {
  kind: "error";
  code: string;
  message: string;
  federateId: string;
}

export type ServerMessage =
  | JoinAck
  | GateState
  | AttrUpdate
  | ObjectiveSnapshot
  | ElementEvent
  | ElementRemovedEvent
  | ErrorMessage;

/** Requests a player may send; observers only watch. */
export type ClientMessage =
  | { kind: "element_added" | "element_edited"; element: ElementDoc }
  | { kind: "element_removed"; elementId: string }
  | { kind: "init" }
  | { kind: "execute" };

const KNOWN_KINDS = new Set([
  "join_ack",
  "gate_state",
  "attr_update",
  "objective_snapshot",
  "element_added",
  "element_edited",
  "element_removed",
  "error",
]);

export function parseServerMessage(raw: unknown): ServerMessage | null {
  if (typeof raw !== "object" || raw === null) return null;
  const kind = (raw as { kind?: unknown }).kind;
  if (typeof kind !== "string" || !KNOWN_KINDS.has(kind)) return null;
  return raw as ServerMessage;
}

export function isObserverSnapshot(
  snap: ObjectiveSnapshot,
): snap is ObserverSnapshot {
  return snap.role === "observer";
}

/** Sector that owns a template, for the role-specific menu. */
export function templateRole(sector: string): SectorRole | null {
  if (sector === "agriculture" || sector === "water") return sector;
  if (sector === "petroleum" || sector === "electrical") return "energy";
  return null;
}
