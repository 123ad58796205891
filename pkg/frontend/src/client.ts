/**
 * Session orchestration: socket lifecycle, countdown, pointer sampling.
 *
 * The transport and the clock are injected so the whole flow runs under
 * test with a scripted socket and a hand-cranked scheduler. The sequence is
 *
 *   start()            idle -> connecting, socket opens
 *   socket open        connecting -> countdown, three one second steps
 *   countdown done     hello goes out; the server answers with start and
 *                      begins ticking immediately, so t=0 lands exactly
 *                      when the human has been told "go"
 *   start frame        countdown -> playing, pointer sampler starts at the
 *                      server's tick cadence
 *   tick_out frames    state and the avatar interpolant update
 *   end frame          playing -> finished
 *
 * A disconnect or error frame at any point lands in the error phase; if
 * play was underway the state keeps the partial trace and says so.
 */

import { TickInterpolant } from "./interp.js";
import { UiSessionState } from "./state.js";
import { helloFrame, parseServerFrame, tickInFrame } from "./wire.js";
import type { SessionChoices } from "./wire.js";

/** Minimal socket surface, satisfied by a browser WebSocket adapter. */
export interface GameSocket {
  send(text: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((text: string) => void) | null;
  onclose: (() => void) | null;
}

/** Timer surface, injectable for deterministic tests. */
export interface Scheduler {
  now(): number;
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
}

export const COUNTDOWN_STEPS = ["ready", "set", "go"] as const;
export const COUNTDOWN_STEP_MS = 1000;

export interface ClientOptions {
  connect(): GameSocket;
  schedule: Scheduler;
  /** Current pointer position, already normalized to [0,1]. */
  readPointerX(): number;
  choices: SessionChoices;
  clientName?: string;
  onChange?(state: UiSessionState): void;
}

export class GameClient {
  readonly state = new UiSessionState();
  readonly avatarTrack = new TickInterpolant();
  private sock: GameSocket | null = null;
  private samplerId: number | null = null;
  private countdownId: number | null = null;
  private t0ms = 0;
  private lastSentT = 0;

  constructor(private readonly opts: ClientOptions) {}

  /** Open the socket and drive the session to finished or error. */
  start(): void {
    this.state.to("connecting");
    this.emit();
    const sock = this.opts.connect();
    this.sock = sock;
    sock.onopen = () => this.beginCountdown();
    sock.onmessage = (text) => this.onFrame(text);
    sock.onclose = () => this.onClose();
  }

  /**
   * Avatar position for drawing at wall-clock time nowMs. Rendering runs
   * one tick period behind the stream so the interpolant is always bracketed
   * by received ticks instead of extrapolating.
   */
  avatarDisplayX(nowMs: number): number | null {
    if (!this.state.start || this.avatarTrack.size === 0) return null;
    const t = (nowMs - this.t0ms) / 1000 - 1 / this.state.start.tick_hz;
    return this.avatarTrack.sample(t < 0 ? 0 : t);
  }

  private emit(): void {
    this.opts.onChange?.(this.state);
  }

  private beginCountdown(): void {
    this.state.to("countdown");
    // the labels are words on purpose: every numeral on screen must come
    // from a server frame, and a 3..2..1 would not
    let step = 0;
    this.state.countdownLabel = COUNTDOWN_STEPS[0];
    this.emit();
    this.countdownId = this.opts.schedule.setInterval(() => {
      step += 1;
      if (step < COUNTDOWN_STEPS.length) {
        this.state.countdownLabel = COUNTDOWN_STEPS[step];
        this.emit();
        return;
      }
      this.clearCountdown();
      this.state.countdownLabel = "";
      this.sock?.send(helloFrame(this.opts.clientName ?? "web-ui", this.opts.choices));
      this.emit();
    }, COUNTDOWN_STEP_MS);
  }

  private onFrame(text: string): void {
    let frame;
    try {
      frame = parseServerFrame(text);
    } catch (exc) {
      this.abort(exc instanceof Error ? exc.message : String(exc));
      return;
    }
    try {
      if (frame.kind === "start") {
        this.state.applyFrame(frame);
        this.t0ms = this.opts.schedule.now();
        this.sendSample();
        this.samplerId = this.opts.schedule.setInterval(
          () => this.sendSample(),
          1000 / frame.payload.tick_hz,
        );
      } else if (frame.kind === "tick_out") {
        this.state.applyFrame(frame);
        this.avatarTrack.add(frame.payload.t, frame.payload.x_a);
      } else if (frame.kind === "end") {
        this.stopTimers();
        this.state.applyFrame(frame);
      } else {
        this.stopTimers();
        this.state.applyFrame(frame);
        this.sock?.close();
      }
    } catch (exc) {
      this.abort(exc instanceof Error ? exc.message : String(exc));
      return;
    }
    this.emit();
  }

  private sendSample(): void {
    if (!this.sock || this.state.phase !== "playing") return;
    const elapsed = (this.opts.schedule.now() - this.t0ms) / 1000;
    // t is monotonically non-decreasing per direction of the protocol
    const t = elapsed > this.lastSentT ? elapsed : this.lastSentT;
    this.lastSentT = t;
    this.sock.send(tickInFrame(t, this.opts.readPointerX()));
  }

  private onClose(): void {
    this.stopTimers();
    const phase = this.state.phase;
    if (phase === "finished" || phase === "error" || phase === "idle") return;
    this.state.fail("connection closed before the trial ended");
    this.emit();
  }

  private abort(message: string): void {
    this.stopTimers();
    this.state.fail(message);
    this.sock?.close();
    this.emit();
  }

  private clearCountdown(): void {
    if (this.countdownId !== null) {
      this.opts.schedule.clearInterval(this.countdownId);
      this.countdownId = null;
    }
  }

  private stopTimers(): void {
    this.clearCountdown();
    if (this.samplerId !== null) {
      this.opts.schedule.clearInterval(this.samplerId);
      this.samplerId = null;
    }
  }
}
