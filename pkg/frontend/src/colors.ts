/** Margin-to-color encoding shared by the cone meshes and the readouts. */

export const VIOLATION_COLOR = "#d11a2a";
export const BOUNDARY_COLOR = "#e6a700";
export const SAFE_COLOR = "#2e9e44";

// margins within this band of zero count as "on the boundary"
export const BOUNDARY_BAND = 1e-9;

/**
 * Constraint margin to display color: red once the axis has left its
 * cone, amber exactly on the boundary, shading to green as the axis
 * approaches the cone center. Proximity is measured relative to the
 * cone's own depth (1 - cos theta), so a perfectly tracked tiny cone
 * still reads green.
 */
export function marginColor(h: number, theta: number): string {
  if (h < -BOUNDARY_BAND) return VIOLATION_COLOR;
  if (h <= BOUNDARY_BAND) return BOUNDARY_COLOR;
  const depth = 1 - Math.cos(theta);
  const s = depth > 0 ? Math.min(h / depth, 1) : 1;
  return blend(BOUNDARY_COLOR, SAFE_COLOR, s);
}

function blend(a: string, b: string, s: number): string {
  const pa = hex(a);
  const pb = hex(b);
  const mix = pa.map((v, i) => Math.round(v + (pb[i]! - v) * s));
  return `#${mix.map((v) => v.toString(16).padStart(2, "0")).join("")}`;
}

function hex(color: string): number[] {
  return [1, 3, 5].map((i) => parseInt(color.slice(i, i + 2), 16));
}
