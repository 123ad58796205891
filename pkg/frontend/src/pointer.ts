/**
 * Map a pointer clientX to the [0,1] track coordinate of the play area.
 * The left edge of the area is 0, the right edge 1, and positions outside
 * the area clamp to the nearest edge. A degenerate zero-width layout parks
 * the cursor at center rather than dividing by zero.
 */
export function normalizeX(clientX: number, areaLeft: number, areaWidth: number): number {
  if (!(areaWidth > 0)) return 0.5;
  const u = (clientX - areaLeft) / areaWidth;
  return u < 0 ? 0 : u > 1 ? 1 : u;
}
