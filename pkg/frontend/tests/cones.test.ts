import { describe, expect, it } from "vitest";

import { ConeCache, REBUILD_THRESHOLD, SEGMENTS, buildCone } from "../src/cones";
import { Vec3, dot, norm } from "../src/math";

const AXES: [Vec3, Vec3, Vec3] = [
  [1, 0, 0],
  [0, 1, 0],
  [0, 0, 1],
];

describe("buildCone", () => {
  it("places the apex at the origin with a full ring", () => {
    const mesh = buildCone(0, 0.5);
    expect(mesh.apex).toEqual([0, 0, 0]);
    expect(mesh.rim).toHaveLength(SEGMENTS);
  });

  it("puts every rim point at angle theta from its body axis", () => {
    for (const i of [0, 1, 2] as const) {
      const theta = 0.2 + 0.15 * i;
      const mesh = buildCone(i, theta);
      for (const p of mesh.rim) {
        expect(norm(p)).toBeCloseTo(1, 12);
        expect(Math.acos(dot(p, AXES[i]))).toBeCloseTo(theta, 12);
      }
    }
  });

  it("spreads the ring over the full circle", () => {
    const mesh = buildCone(2, 0.6);
    const first = mesh.rim[0]!;
    const half = mesh.rim[SEGMENTS / 2]!;
    // opposite points straddle the axis
    expect(first[0] + half[0]).toBeCloseTo(2 * Math.cos(0.6) * AXES[2][0], 12);
    expect(first[1] + half[1]).toBeCloseTo(0, 12);
  });
});

describe("ConeCache", () => {
  it("reuses the mesh for sub-threshold angle drift", () => {
    const cache = new ConeCache();
    const a = cache.get(0, 0.5);
    const b = cache.get(0, 0.5 + 0.5 * REBUILD_THRESHOLD);
    expect(b).toBe(a);
    expect(b.theta).toBe(0.5);
  });

  it("rebuilds once the angle moves past the threshold", () => {
    const cache = new ConeCache();
    const a = cache.get(1, 0.5);
    const b = cache.get(1, 0.5 + 2 * REBUILD_THRESHOLD);
    expect(b).not.toBe(a);
    expect(b.theta).toBeCloseTo(0.5 + 2 * REBUILD_THRESHOLD, 15);
  });

  it("keeps per-axis entries independent", () => {
    const cache = new ConeCache();
    const a0 = cache.get(0, 0.3);
    cache.get(1, 0.9);
    cache.get(2, 1.1);
    expect(cache.get(0, 0.3)).toBe(a0);
  });
});
