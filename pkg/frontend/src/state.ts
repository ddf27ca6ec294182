/**
 * Session state as a pure fold over bridge messages.
 *
 * The gateway replays the full filtered feed on (re)connect, so the
 * view after a reconnect is just the same fold over the same messages.
 * Reducers never mutate their input; containers are copied on write.
 */

import type {
  AttrUpdate,
  ElementDoc,
  ElementEvent,
  ElementRemovedEvent,
  ErrorMessage,
  GateState,
  JoinAck,
  ObjectiveSnapshot,
  Role,
  ServerMessage,
} from "./protocol";
import { seriesVisible } from "./visibility";

/** One plotted series: per-year rows keyed by year, last iteration wins. */
export interface Trace {
  objectName: string;
  series: string;
  className: string;
  units: string;
  /** year -> [iteration, value] for the highest iteration seen. */
  rows: Map<number, [number, number]>;
}

export interface ExecutionState {
  traces: Map<string, Trace>;
  snapshot: ObjectiveSnapshot | null;
}

export interface SessionState {
  role: Role;
  joined: JoinAck | null;
  gate: GateState | null;
  elements: Map<string, ElementDoc>;
  events: (ElementEvent | ElementRemovedEvent)[];
  execs: Map<number, ExecutionState>;
  errors: ErrorMessage[];
  /** Series refused by the local visibility mirror; should stay empty. */
  refused: string[];
}

export function initialState(role: Role): SessionState {
  return {
    role,
    joined: null,
    gate: null,
    elements: new Map(),
    events: [],
    execs: new Map(),
    errors: [],
    refused: [],
  };
}

function traceKey(update: AttrUpdate): string {
  return `${update.objectName}|${update.series}`;
}

function withExec(
  state: SessionState,
  index: number,
  change: (exec: ExecutionState) => ExecutionState,
): SessionState {
  const execs = new Map(state.execs);
  const prev = execs.get(index) ?? { traces: new Map(), snapshot: null };
  execs.set(index, change(prev));
  return { ...state, execs };
}

function applyUpdate(state: SessionState, update: AttrUpdate): SessionState {
  if (!seriesVisible(state.role, update.series)) {
    return { ...state, refused: [...state.refused, update.series] };
  }
  return withExec(state, update.execIndex, (exec) => {
    const traces = new Map(exec.traces);
    const key = traceKey(update);
    const prev = traces.get(key);
    const rows = new Map(prev ? prev.rows : undefined);
    for (const [year, iteration, value] of update.values) {
      const seen = rows.get(year);
      if (seen === undefined || iteration >= seen[0]) {
        rows.set(year, [iteration, value]);
      }
    }
    traces.set(key, {
      objectName: update.objectName,
      series: update.series,
      className: update.className,
      units: update.units,
      rows,
    });
    return { ...exec, traces };
  });
}

export function reduce(state: SessionState, msg: ServerMessage): SessionState {
  switch (msg.kind) {
    case "join_ack": {
      const elements = new Map(
        msg.scenario.elements.map((e) => [e.id, e] as const),
      );
      return { ...state, role: msg.role, joined: msg, elements };
    }
    case "gate_state":
      return { ...state, gate: msg };
    case "attr_update":
      return applyUpdate(state, msg);
    case "objective_snapshot":
      return withExec(state, msg.execIndex, (exec) => ({
        ...exec,
        snapshot: msg,
      }));
    case "element_added":
    case "element_edited": {
      const elements = new Map(state.elements);
      elements.set(msg.element.id, msg.element);
      return { ...state, elements, events: [...state.events, msg] };
    }
    case "element_removed": {
      const elements = new Map(state.elements);
      elements.delete(msg.elementId);
      return { ...state, elements, events: [...state.events, msg] };
    }
    case "error":
      return { ...state, errors: [...state.errors, msg] };
  }
}

export function reduceAll(
  state: SessionState,
  messages: readonly ServerMessage[],
): SessionState {
  return messages.reduce(reduce, state);
}

export function latestExecIndex(state: SessionState): number | null {
  let latest: number | null = null;
  for (const index of state.execs.keys()) {
    if (latest === null || index > latest) latest = index;
  }
  return latest;
}

export function tracesFor(
  state: SessionState,
  execIndex: number,
): Trace[] {
  const exec = state.execs.get(execIndex);
  if (!exec) return [];
  return [...exec.traces.values()].sort((a, b) =>
    a.series === b.series
      ? a.objectName.localeCompare(b.objectName)
      : a.series.localeCompare(b.series),
  );
}

export function latestSnapshot(
  state: SessionState,
): ObjectiveSnapshot | null {
  const index = latestExecIndex(state);
  if (index === null) return null;
  return state.execs.get(index)?.snapshot ?? null;
}

/** Final-iteration annual values, sorted by year. */
export function annualValues(trace: Trace): [number, number][] {
  return [...trace.rows.entries()]
    .map(([year, [, value]]) => [year, value] as [number, number])
    .sort((a, b) => a[0] - b[0]);
}

export function planElements(state: SessionState): ElementDoc[] {
  return [...state.elements.values()].sort((a, b) =>
    a.id.localeCompare(b.id),
  );
}
