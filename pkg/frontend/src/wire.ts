/**
 * Wire protocol for the live game service.
 *
 * Frames are JSON text messages shaped {"kind": ..., "payload": {...}}.
 * After the hello/start handshake the server drives the clock, emitting one
 * tick_out per tick and a final end frame; the client streams tick_in frames
 * carrying its pointer position. This module is the only place raw frames
 * are produced or parsed, and it is strict in both directions: a frame that
 * does not match the schema exactly is an error, not a warning.
 */

export class WireError extends Error {}

export interface StartPayload {
  session_id: string;
  duration_s: number;
  tick_hz: number;
  n_ticks: number;
  avatar: string;
  avatar_role: string;
}

export interface TickOutPayload {
  k: number;
  t: number;
  x_h: number;
  x_a: number;
  v_a: number;
  live_cv: number | null;
  stale: boolean;
  clamped: boolean;
}

export interface EndMetrics {
  emd: number | null;
  cv: number | null;
  rms: number | null;
  dphi_mean: number | null;
  dphi_std: number | null;
  n_segments: number;
}

export interface EndPayload {
  trial_id: string;
  metrics: EndMetrics;
}

export interface ErrorPayload {
  message: string;
}

export type ServerFrame =
  | { kind: "start"; payload: StartPayload }
  | { kind: "tick_out"; payload: TickOutPayload }
  | { kind: "end"; payload: EndPayload }
  | { kind: "error"; payload: ErrorPayload };

function asRecord(v: unknown, where: string): Record<string, unknown> {
  if (typeof v !== "object" || v === null || Array.isArray(v)) {
    throw new WireError(`${where} is not an object`);
  }
  return v as Record<string, unknown>;
}

function exactKeys(obj: Record<string, unknown>, keys: readonly string[], where: string): void {
  for (const key of keys) {
    if (!(key in obj)) throw new WireError(`${where} is missing "${key}"`);
  }
  for (const key of Object.keys(obj)) {
    if (!keys.includes(key)) throw new WireError(`${where} has unexpected key "${key}"`);
  }
}

function num(obj: Record<string, unknown>, key: string, where: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new WireError(`${where}.${key} is not a finite number`);
  }
  return v;
}

function numOrNull(obj: Record<string, unknown>, key: string, where: string): number | null {
  const v = obj[key];
  if (v === null) return null;
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new WireError(`${where}.${key} is not a finite number or null`);
  }
  return v;
}

function str(obj: Record<string, unknown>, key: string, where: string): string {
  const v = obj[key];
  if (typeof v !== "string") throw new WireError(`${where}.${key} is not a string`);
  return v;
}

function bool(obj: Record<string, unknown>, key: string, where: string): boolean {
  const v = obj[key];
  if (typeof v !== "boolean") throw new WireError(`${where}.${key} is not a boolean`);
  return v;
}

const START_KEYS = ["session_id", "duration_s", "tick_hz", "n_ticks", "avatar", "avatar_role"] as const;
const TICK_OUT_KEYS = ["k", "t", "x_h", "x_a", "v_a", "live_cv", "stale", "clamped"] as const;
const END_KEYS = ["trial_id", "metrics"] as const;
const METRIC_KEYS = ["emd", "cv", "rms", "dphi_mean", "dphi_std", "n_segments"] as const;

/** Parse and validate one server frame; throws WireError on any mismatch. */
export function parseServerFrame(raw: string): ServerFrame {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch {
    throw new WireError("frame is not JSON");
  }
  const frame = asRecord(doc, "frame");
  const kind = frame["kind"];
  const payload = asRecord(frame["payload"] ?? {}, "payload");

  if (kind === "start") {
    exactKeys(payload, START_KEYS, "start payload");
    return {
      kind,
      payload: {
        session_id: str(payload, "session_id", "start"),
        duration_s: num(payload, "duration_s", "start"),
        tick_hz: num(payload, "tick_hz", "start"),
        n_ticks: num(payload, "n_ticks", "start"),
        avatar: str(payload, "avatar", "start"),
        avatar_role: str(payload, "avatar_role", "start"),
      },
    };
  }
  if (kind === "tick_out") {
    exactKeys(payload, TICK_OUT_KEYS, "tick_out payload");
    return {
      kind,
      payload: {
        k: num(payload, "k", "tick_out"),
        t: num(payload, "t", "tick_out"),
        x_h: num(payload, "x_h", "tick_out"),
        x_a: num(payload, "x_a", "tick_out"),
        v_a: num(payload, "v_a", "tick_out"),
        live_cv: numOrNull(payload, "live_cv", "tick_out"),
        stale: bool(payload, "stale", "tick_out"),
        clamped: bool(payload, "clamped", "tick_out"),
      },
    };
  }
  if (kind === "end") {
    exactKeys(payload, END_KEYS, "end payload");
    const m = asRecord(payload["metrics"], "end metrics");
    exactKeys(m, METRIC_KEYS, "end metrics");
    return {
      kind,
      payload: {
        trial_id: str(payload, "trial_id", "end"),
        metrics: {
          emd: numOrNull(m, "emd", "metrics"),
          cv: numOrNull(m, "cv", "metrics"),
          rms: numOrNull(m, "rms", "metrics"),
          dphi_mean: numOrNull(m, "dphi_mean", "metrics"),
          dphi_std: numOrNull(m, "dphi_std", "metrics"),
          n_segments: num(m, "n_segments", "metrics"),
        },
      },
    };
  }
  if (kind === "error") {
    return { kind, payload: { message: str(payload, "message", "error") } };
  }
  throw new WireError(`unknown server frame kind ${JSON.stringify(kind)}`);
}

/** Clamp a track position into [0,1]; NaN is a caller bug, not a position. */
export function clamp01(x: number): number {
  if (Number.isNaN(x)) throw new WireError("position is NaN");
  return x < 0 ? 0 : x > 1 ? 1 : x;
}

export interface SessionChoices {
  avatar: string;
  role: string;
  duration_s: number;
}

/**
 * Opening handshake frame. The choices ride along as a request; the server
 * is configured at launch and states the authoritative session parameters
 * in its start frame.
 */
export function helloFrame(client: string, choices?: SessionChoices): string {
  const payload: Record<string, unknown> = { client };
  if (choices) {
    payload["avatar"] = choices.avatar;
    payload["role"] = choices.role;
    payload["duration_s"] = choices.duration_s;
  }
  return JSON.stringify({ kind: "hello", payload });
}

/**
 * One pointer sample. The payload is exactly {t, x} and x is clamped here,
 * at the send boundary, so the client can never put a position outside
 * [0,1] on the wire.
 */
export function tickInFrame(t: number, x: number): string {
  if (!Number.isFinite(t) || t < 0) throw new WireError(`bad sample time ${t}`);
  return JSON.stringify({ kind: "tick_in", payload: { t, x: clamp01(x) } });
}
