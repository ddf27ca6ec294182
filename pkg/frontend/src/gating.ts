/**
 * Control surface derived from the latest gate state.
 *
 * Synchronized sessions gate execution on every sector initializing;
 * the buttons here are enabled purely from the most recent gate_state
 * push, so enablement changes in the same frame the push is reduced.
 * Decoupled sessions have no live gate: the surface swaps to local-run
 * instructions with flow-file import and export.
 */

import type { SessionState } from "./state";

export type SurfaceMode = "gated" | "decoupled";

export interface ControlSurface {
  mode: SurfaceMode;
  canInitialize: boolean;
  canExecute: boolean;
  running: boolean;
  exchangesCompleted: number;
  statusLine: string;
}

const SECTOR_COUNT = 3;

export function controlSurface(state: SessionState): ControlSurface {
  const none: ControlSurface = {
    mode: "gated",
    canInitialize: false,
    canExecute: false,
    running: false,
    exchangesCompleted: 0,
    statusLine: "connecting",
  };
  const joined = state.joined;
  if (!joined) return none;
  if (joined.variant === "2") {
    return {
      ...none,
      mode: "decoupled",
      statusLine: "decoupled session: run locally, then exchange flow files",
    };
  }
  const gate = state.gate;
  if (!gate) return { ...none, statusLine: "waiting for session status" };
  const role = state.role;
  const playing = role !== "observer";
  const initialized = gate.initialized.includes(role);
  const requested = gate.executeRequested.includes(role);
  const surface: ControlSurface = {
    mode: "gated",
    canInitialize: playing && !gate.running && !initialized,
    canExecute: playing && gate.gateOpen && !gate.running && !requested,
    running: gate.running,
    exchangesCompleted: gate.exchangesCompleted,
    statusLine: "",
  };
  if (gate.running) {
    surface.statusLine =
      `executing: ${gate.exchangesCompleted} exchange` +
      `${gate.exchangesCompleted === 1 ? "" : "s"} completed`;
  } else if (gate.gateOpen) {
    surface.statusLine = requested
      ? "execution requested; waiting for the other sectors"
      : "all sectors initialized; ready to execute";
  } else {
    surface.statusLine =
      `${gate.initialized.length} of ${SECTOR_COUNT} sectors initialized`;
  }
  return surface;
}
