/** Wire types mirroring the session stream, plus defensive parsing. */

export interface Frame {
  tick: number;
  t: number;
  q_ref: [number, number, number, number];
  q_exc: [number, number, number, number];
  theta: [number, number, number];
  h: [number, number, number];
  u0: [number, number, number];
  u_star: [number, number, number];
  active: [boolean, boolean, boolean];
  feasible: boolean;
}

function finiteTuple(v: unknown, n: number): boolean {
  return (
    Array.isArray(v) &&
    v.length === n &&
    v.every((x) => typeof x === "number" && Number.isFinite(x))
  );
}

/** Returns the frame or null; never throws on junk from the wire. */
export function parseFrame(raw: unknown): Frame | null {
  if (typeof raw !== "object" || raw === null) return null;
  const f = raw as Record<string, unknown>;
  if (typeof f.tick !== "number" || !Number.isInteger(f.tick) || f.tick < 0)
    return null;
  if (typeof f.t !== "number" || !Number.isFinite(f.t)) return null;
  if (!finiteTuple(f.q_ref, 4) || !finiteTuple(f.q_exc, 4)) return null;
  for (const key of ["theta", "h", "u0", "u_star"]) {
    if (!finiteTuple(f[key], 3)) return null;
  }
  const active = f.active;
  if (
    !Array.isArray(active) ||
    active.length !== 3 ||
    !active.every((x) => typeof x === "boolean")
  )
    return null;
  if (typeof f.feasible !== "boolean") return null;
  return raw as unknown as Frame;
}
