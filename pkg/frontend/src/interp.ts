/**
 * Piecewise linear track through the avatar tick positions.
 *
 * Rendering runs at display rate while ticks arrive at tick_hz, so the
 * renderer samples this interpolant between ticks. By construction the
 * curve passes through every received tick position exactly at its tick
 * time: sampling at a knot returns the stored value itself, no arithmetic.
 */
export class TickInterpolant {
  private ts: number[] = [];
  private xs: number[] = [];

  get size(): number {
    return this.ts.length;
  }

  /** Append one tick sample; times must be non-decreasing. */
  add(t: number, x: number): void {
    const n = this.ts.length;
    if (n > 0 && t < this.ts[n - 1]) {
      throw new Error(`tick time went backwards: ${t} after ${this.ts[n - 1]}`);
    }
    if (n > 0 && t === this.ts[n - 1]) {
      this.xs[n - 1] = x;
      return;
    }
    this.ts.push(t);
    this.xs.push(x);
  }

  /**
   * Position at time t: exact at knots, linear in between, clamped to the
   * end samples outside the covered span.
   */
  sample(t: number): number {
    const n = this.ts.length;
    if (n === 0) throw new Error("no ticks received yet");
    if (t <= this.ts[0]) return this.xs[0];
    if (t >= this.ts[n - 1]) return this.xs[n - 1];
    // greatest i with ts[i] <= t
    let lo = 0;
    let hi = n - 1;
    while (hi - lo > 1) {
      const mid = (lo + hi) >> 1;
      if (this.ts[mid] <= t) lo = mid;
      else hi = mid;
    }
    if (this.ts[lo] === t) return this.xs[lo];
    const u = (t - this.ts[lo]) / (this.ts[hi] - this.ts[lo]);
    return this.xs[lo] + u * (this.xs[hi] - this.xs[lo]);
  }
}
