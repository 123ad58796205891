/**
 * Readouts: the only path from state to on-screen numbers.
 *
 * Every readout routes its value through assertServerOriginated, which makes
 * the metrics-passivity rule a runtime guarantee rather than a convention.
 * Values are rendered verbatim (String of the exact double) unless a fixed
 * digit count is requested for a gauge.
 */

import type { UiSessionState } from "./state.js";

export interface Readout {
  label: string;
  raw: number | null;
  text: string;
}

export function readout(
  state: UiSessionState,
  label: string,
  raw: number | null,
  digits?: number,
): Readout {
  if (raw === null) return { label, raw: null, text: "n/a" };
  state.assertServerOriginated(raw);
  return { label, raw, text: digits === undefined ? String(raw) : raw.toFixed(digits) };
}

/** End-of-trial summary rows, values verbatim from the end frame. */
export function summaryReadouts(state: UiSessionState): Readout[] {
  const m = state.finalMetrics;
  if (!m) return [];
  return [
    readout(state, "EMD", m.emd),
    readout(state, "CV", m.cv),
    readout(state, "RMS error", m.rms),
    readout(state, "relative phase mean", m.dphi_mean),
    readout(state, "relative phase spread", m.dphi_std),
    readout(state, "segments", m.n_segments),
  ];
}

/** Live coordination gauge value from the newest tick frame. */
export function liveCvReadout(state: UiSessionState): Readout {
  return readout(state, "live CV", state.lastTick ? state.lastTick.live_cv : null, 3);
}

/** Elapsed play time as reported by the server clock. */
export function elapsedReadout(state: UiSessionState): Readout {
  return readout(state, "t", state.lastTick ? state.lastTick.t : null, 1);
}

/** Session banner, numbers taken from the start frame. */
export function sessionLine(state: UiSessionState): string {
  const s = state.start;
  if (!s) return "";
  const secs = readout(state, "duration", s.duration_s).text;
  return `${s.avatar} avatar playing ${s.avatar_role}, ${secs} s`;
}
