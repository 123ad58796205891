/**
 * Page bootstrap: wires the DOM to the session client and the renderer.
 * Served as a static bundle from the game service HTTP root, so the
 * WebSocket endpoint is always same-origin /session.
 */

import { GameClient } from "./client.js";
import type { GameSocket, Scheduler } from "./client.js";
import { summaryReadouts } from "./display.js";
import { normalizeX } from "./pointer.js";
import { buildView, drawFrame } from "./render.js";
import type { Canvas2D } from "./render.js";
import { UiSessionState } from "./state.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const stage = el<HTMLCanvasElement>("stage");
const playButton = el<HTMLButtonElement>("play");
const avatarSel = el<HTMLSelectElement>("avatar");
const roleSel = el<HTMLSelectElement>("role");
const durationInput = el<HTMLInputElement>("duration");
const summaryBox = el<HTMLElement>("summary");

const ctx = stage.getContext("2d");
if (!ctx) throw new Error("canvas 2d context unavailable");
const ctx2d = ctx as unknown as Canvas2D;

let pointerX = 0.5;
stage.addEventListener("pointermove", (ev) => {
  const rect = stage.getBoundingClientRect();
  pointerX = normalizeX(ev.clientX, rect.left, rect.width);
});
stage.addEventListener("pointerdown", (ev) => {
  const rect = stage.getBoundingClientRect();
  pointerX = normalizeX(ev.clientX, rect.left, rect.width);
});

function browserSocket(): GameSocket {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const ws = new WebSocket(`${proto}://${location.host}/session`);
  const adapter: GameSocket = {
    send: (text) => ws.send(text),
    close: () => ws.close(),
    onopen: null,
    onmessage: null,
    onclose: null,
  };
  ws.onopen = () => adapter.onopen?.();
  ws.onmessage = (ev) => adapter.onmessage?.(String(ev.data));
  ws.onclose = () => adapter.onclose?.();
  return adapter;
}

const scheduler: Scheduler = {
  now: () => performance.now(),
  setInterval: (fn, ms) => window.setInterval(fn, ms),
  clearInterval: (id) => window.clearInterval(id),
};

let client: GameClient | null = null;

function renderSummary(active: GameClient): void {
  const st = active.state;
  if (st.phase === "finished") {
    const rows = summaryReadouts(st)
      .map((r) => `<tr><td>${r.label}</td><td>${r.text}</td></tr>`)
      .join("");
    const link = st.trialId
      ? `<p><a href="/trials/${encodeURIComponent(st.trialId)}" download>download trial record</a></p>`
      : "";
    summaryBox.innerHTML = `<h2>trial complete</h2><table>${rows}</table>${link}`;
  } else if (st.phase === "error") {
    const extra = st.partialData
      ? "<p>the connection dropped mid trial, only partial data was recorded</p>"
      : "";
    summaryBox.innerHTML = `<h2>session ended early</h2><p>${st.errorMessage ?? ""}</p>${extra}`;
  } else {
    summaryBox.innerHTML = "";
    return;
  }
  playButton.disabled = false;
}

playButton.addEventListener("click", () => {
  if (client && client.state.phase !== "finished" && client.state.phase !== "error"
      && client.state.phase !== "idle") {
    return;
  }
  playButton.disabled = true;
  summaryBox.innerHTML = "";
  client = new GameClient({
    connect: browserSocket,
    schedule: scheduler,
    readPointerX: () => pointerX,
    choices: {
      avatar: avatarSel.value,
      role: roleSel.value,
      duration_s: Number(durationInput.value),
    },
    onChange: (st) => {
      if (st.phase === "finished" || st.phase === "error") renderSummary(client as GameClient);
    },
  });
  client.start();
});

const idleState = new UiSessionState();

function frame(): void {
  if (client) {
    const view = buildView(
      client.state,
      client.state.phase === "playing" ? pointerX : null,
      client.avatarDisplayX(performance.now()),
    );
    drawFrame(ctx2d, view);
  } else {
    drawFrame(ctx2d, buildView(idleState, null, null));
  }
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
