/**
 * Canvas drawing for the play surface.
 *
 * drawFrame is a pure consumer of a TrackView: a horizontal track with one
 * dot per player, a rolling trace sparkline underneath, and the live CV
 * gauge. The view is assembled by buildView, which funnels every number
 * through the readout layer so nothing client-computed can reach the
 * screen. The context parameter is a structural subset of the browser 2d
 * context, which lets tests drive the renderer with a recording stub.
 */

import { liveCvReadout, elapsedReadout, sessionLine } from "./display.js";
import type { Readout } from "./display.js";
import type { Phase, TracePoint, UiSessionState } from "./state.js";
import { TRACE_WINDOW_S } from "./state.js";

export interface Canvas2D {
  canvas: { width: number; height: number };
  fillStyle: string | object;
  strokeStyle: string | object;
  lineWidth: number;
  font: string;
  textAlign: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  fillText(text: string, x: number, y: number): void;
}

export interface TrackView {
  phase: Phase;
  humanX: number | null;
  avatarX: number | null;
  humanTrace: TracePoint[];
  avatarTrace: TracePoint[];
  traceNow: number | null;
  liveCv: Readout;
  elapsed: Readout;
  sessionLine: string;
  countdownLabel: string;
  badges: string[];
  notice: string;
}

export const HUMAN_COLOR = "#1f77b4";
export const AVATAR_COLOR = "#d62728";

/**
 * Project the session state into a drawable view. humanX is the local
 * pointer so the player's own dot tracks the hand with no network delay;
 * avatarX comes from the tick interpolant sampled at display time.
 */
export function buildView(
  state: UiSessionState,
  humanX: number | null,
  avatarX: number | null,
): TrackView {
  const playing = state.phase === "playing";
  const badges: string[] = [];
  if (playing && state.lastTick) {
    if (state.lastTick.stale) badges.push("signal lost, hold position");
    if (state.lastTick.clamped) badges.push("input clamped to the track");
  }
  let notice = "";
  if (state.phase === "error") {
    notice = state.errorMessage ?? "something went wrong";
    if (state.partialData) notice += " (partial trial data only)";
  }
  return {
    phase: state.phase,
    humanX: playing ? humanX : null,
    avatarX: playing ? avatarX : null,
    humanTrace: state.humanTrace,
    avatarTrace: state.avatarTrace,
    traceNow: state.lastTick ? state.lastTick.t : null,
    liveCv: liveCvReadout(state),
    elapsed: elapsedReadout(state),
    sessionLine: sessionLine(state),
    countdownLabel: state.countdownLabel,
    badges,
    notice,
  };
}

function drawTrace(
  ctx: Canvas2D,
  points: TracePoint[],
  now: number,
  color: string,
  x0: number,
  w: number,
  y0: number,
  h: number,
): void {
  if (points.length < 2) return;
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  let started = false;
  for (const p of points) {
    const px = x0 + w * ((p.t - (now - TRACE_WINDOW_S)) / TRACE_WINDOW_S);
    const py = y0 + h * (1 - p.x);
    if (px < x0) continue;
    if (!started) {
      ctx.moveTo(px, py);
      started = true;
    } else {
      ctx.lineTo(px, py);
    }
  }
  ctx.stroke();
}

function dot(ctx: Canvas2D, x: number, y: number, r: number, color: string): void {
  ctx.fillStyle = color;
  ctx.beginPath();
  ctx.arc(x, y, r, 0, 2 * Math.PI);
  ctx.fill();
}

export function drawFrame(ctx: Canvas2D, view: TrackView): void {
  const W = ctx.canvas.width;
  const H = ctx.canvas.height;
  const margin = 24;
  const trackY = H * 0.38;
  const trackW = W - 2 * margin;
  ctx.clearRect(0, 0, W, H);
  ctx.fillStyle = "#fafafa";
  ctx.fillRect(0, 0, W, H);

  // track band
  ctx.fillStyle = "#e4e4e4";
  ctx.fillRect(margin, trackY - 5, trackW, 10);

  ctx.font = "14px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillStyle = "#333";
  if (view.sessionLine) ctx.fillText(view.sessionLine, margin, 22);
  if (view.elapsed.raw !== null) {
    ctx.fillText(`t ${view.elapsed.text} s`, margin, 42);
  }

  // live CV gauge, top right
  ctx.textAlign = "right";
  ctx.fillText(`${view.liveCv.label} ${view.liveCv.text}`, W - margin, 22);
  if (view.liveCv.raw !== null) {
    const gw = 120;
    ctx.fillStyle = "#ddd";
    ctx.fillRect(W - margin - gw, 30, gw, 8);
    ctx.fillStyle = AVATAR_COLOR;
    ctx.fillRect(W - margin - gw, 30, gw * Math.max(0, Math.min(1, view.liveCv.raw)), 8);
  }

  ctx.textAlign = "left";
  ctx.fillStyle = "#a33";
  view.badges.forEach((badge, i) => ctx.fillText(badge, margin, 62 + 20 * i));

  if (view.avatarX !== null) {
    dot(ctx, margin + trackW * view.avatarX, trackY, 14, AVATAR_COLOR);
  }
  if (view.humanX !== null) {
    dot(ctx, margin + trackW * view.humanX, trackY, 11, HUMAN_COLOR);
  }

  // rolling traces
  if (view.traceNow !== null) {
    const ty = H * 0.58;
    const th = H * 0.34;
    ctx.strokeStyle = "#ccc";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.moveTo(margin, ty);
    ctx.lineTo(margin, ty + th);
    ctx.lineTo(margin + trackW, ty + th);
    ctx.stroke();
    drawTrace(ctx, view.humanTrace, view.traceNow, HUMAN_COLOR, margin, trackW, ty, th);
    drawTrace(ctx, view.avatarTrace, view.traceNow, AVATAR_COLOR, margin, trackW, ty, th);
  }

  if (view.phase === "countdown" && view.countdownLabel) {
    ctx.font = "48px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillStyle = "#222";
    ctx.fillText(view.countdownLabel, W / 2, trackY - 40);
  }
  if (view.notice) {
    ctx.font = "16px system-ui, sans-serif";
    ctx.textAlign = "center";
    ctx.fillStyle = "#a33";
    ctx.fillText(view.notice, W / 2, trackY - 40);
  }
}
