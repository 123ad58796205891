import { describe, expect, it } from "vitest";

import { TickInterpolant } from "../src/interp.js";
import { parseServerFrame } from "../src/wire.js";
import { frameText, makeTickOut } from "./stream.js";

function fromStream(nTicks: number): { interp: TickInterpolant; ts: number[]; xs: number[] } {
  const interp = new TickInterpolant();
  const ts: number[] = [];
  const xs: number[] = [];
  for (let k = 0; k <= nTicks; k++) {
    const frame = parseServerFrame(frameText(makeTickOut(k)));
    if (frame.kind !== "tick_out") throw new Error("wrong kind");
    interp.add(frame.payload.t, frame.payload.x_a);
    ts.push(frame.payload.t);
    xs.push(frame.payload.x_a);
  }
  return { interp, ts, xs };
}

describe("TickInterpolant", () => {
  it("passes through every received tick position exactly at its tick time", () => {
    const { interp, ts, xs } = fromStream(600);
    expect(interp.size).toBe(601);
    for (let i = 0; i < ts.length; i++) {
      expect(Object.is(interp.sample(ts[i]), xs[i])).toBe(true);
    }
  });

  it("is linear between ticks", () => {
    const { interp, ts, xs } = fromStream(100);
    for (let i = 0; i + 1 < ts.length; i++) {
      const tm = (ts[i] + ts[i + 1]) / 2;
      expect(interp.sample(tm)).toBeCloseTo((xs[i] + xs[i + 1]) / 2, 12);
      const tq = ts[i] + 0.25 * (ts[i + 1] - ts[i]);
      expect(interp.sample(tq)).toBeCloseTo(xs[i] + 0.25 * (xs[i + 1] - xs[i]), 12);
    }
  });

  it("clamps outside the covered span", () => {
    const { interp, xs } = fromStream(20);
    expect(interp.sample(-5)).toBe(xs[0]);
    expect(interp.sample(1e9)).toBe(xs[xs.length - 1]);
  });

  it("rejects sampling before any tick arrived", () => {
    expect(() => new TickInterpolant().sample(0)).toThrow(/no ticks/);
  });

  it("holds a single point everywhere", () => {
    const interp = new TickInterpolant();
    interp.add(2.0, 0.75);
    expect(interp.sample(0)).toBe(0.75);
    expect(interp.sample(2)).toBe(0.75);
    expect(interp.sample(9)).toBe(0.75);
  });

  it("refuses time going backwards and replaces an equal time", () => {
    const interp = new TickInterpolant();
    interp.add(0, 0.1);
    interp.add(1, 0.2);
    expect(() => interp.add(0.5, 0.3)).toThrow(/backwards/);
    interp.add(1, 0.9);
    expect(interp.size).toBe(2);
    expect(interp.sample(1)).toBe(0.9);
  });
});
