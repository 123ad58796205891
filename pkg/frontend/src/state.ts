/**
 * Client-side session state.
 *
 * One UiSessionState instance accompanies one play attempt from button press
 * to summary screen. Phases advance along a single legal chain
 * idle -> connecting -> countdown -> playing -> finished, with error
 * reachable from anywhere via fail(). Frames mutate the state through
 * applyFrame only, which also records every number the server has sent so
 * the display layer can prove a value is server-originated before showing it.
 */

import type { EndMetrics, ServerFrame, StartPayload, TickOutPayload } from "./wire.js";

export type Phase = "idle" | "connecting" | "countdown" | "playing" | "finished" | "error";

const NEXT: Record<Phase, Phase | null> = {
  idle: "connecting",
  connecting: "countdown",
  countdown: "playing",
  playing: "finished",
  finished: null,
  error: null,
};

export interface TracePoint {
  t: number;
  x: number;
}

// rolling window kept for the sparkline, seconds
export const TRACE_WINDOW_S = 10.0;

export class UiSessionState {
  phase: Phase = "idle";
  start: StartPayload | null = null;
  lastTick: TickOutPayload | null = null;
  humanTrace: TracePoint[] = [];
  avatarTrace: TracePoint[] = [];
  ticksSeen = 0;
  finalMetrics: EndMetrics | null = null;
  trialId: string | null = null;
  errorMessage: string | null = null;
  partialData = false;
  countdownLabel = "";
  private serverNumbers = new Set<number>();

  /** Advance one step along the legal phase chain. */
  to(next: Phase): void {
    if (next === "error") throw new Error("use fail() to enter the error phase");
    if (NEXT[this.phase] !== next) {
      throw new Error(`illegal phase transition ${this.phase} -> ${next}`);
    }
    this.phase = next;
  }

  /**
   * Enter the error phase from anywhere. Data received so far is kept; if
   * play was underway the partialData flag marks the kept trace as a
   * truncated trial.
   */
  fail(message: string): void {
    this.partialData = this.phase === "playing" && this.ticksSeen > 0 && this.finalMetrics === null;
    this.phase = "error";
    this.errorMessage = message;
  }

  /** Fold one validated server frame into the state. */
  applyFrame(frame: ServerFrame): void {
    this.noteServerNumbers(frame.payload);
    if (frame.kind === "error") {
      this.fail(frame.payload.message);
      return;
    }
    if (frame.kind === "start") {
      this.start = frame.payload;
      this.to("playing");
      return;
    }
    if (frame.kind === "tick_out") {
      if (this.phase !== "playing") {
        throw new Error(`tick_out while ${this.phase}`);
      }
      const p = frame.payload;
      this.lastTick = p;
      this.ticksSeen += 1;
      this.humanTrace.push({ t: p.t, x: p.x_h });
      this.avatarTrace.push({ t: p.t, x: p.x_a });
      const cutoff = p.t - TRACE_WINDOW_S;
      while (this.humanTrace.length && this.humanTrace[0].t < cutoff) this.humanTrace.shift();
      while (this.avatarTrace.length && this.avatarTrace[0].t < cutoff) this.avatarTrace.shift();
      return;
    }
    // end frame
    this.finalMetrics = frame.payload.metrics;
    this.trialId = frame.payload.trial_id;
    this.to("finished");
  }

  private noteServerNumbers(v: unknown): void {
    if (typeof v === "number") {
      this.serverNumbers.add(v);
      return;
    }
    if (Array.isArray(v)) {
      for (const item of v) this.noteServerNumbers(item);
      return;
    }
    if (typeof v === "object" && v !== null) {
      for (const item of Object.values(v)) this.noteServerNumbers(item);
    }
  }

  /**
   * The client is metrics-passive: every number it displays must have
   * arrived in a server frame. Display code routes values through here and
   * a value the client computed itself fails loudly instead of reaching
   * the screen.
   */
  assertServerOriginated(value: number): number {
    if (!this.serverNumbers.has(value)) {
      throw new Error(`displayed value ${value} did not come from a server frame`);
    }
    return value;
  }
}
