/** Cone side meshes around the canonical body axes, cached across frames.
 *
 * Meshes live in the reference body frame (cone i around e_i); the
 * renderer rotates them with the streamed reference rotation each draw,
 * so a mesh only needs rebuilding when its angle actually moves.
 */

import { Vec3, add, scale } from "./math";

export const SEGMENTS = 48;
export const REBUILD_THRESHOLD = 1e-3; // rad

export interface ConeMesh {
  theta: number;
  apex: Vec3;
  rim: Vec3[]; // unit-distance circle around the body axis
}

const BODY_AXES: [Vec3, Vec3, Vec3] = [
  [1, 0, 0],
  [0, 1, 0],
  [0, 0, 1],
];

/** Ring of points at angular radius theta about body axis i. */
export function buildCone(i: 0 | 1 | 2, theta: number): ConeMesh {
  const a = BODY_AXES[i];
  const n1 = BODY_AXES[(i + 1) % 3 as 0 | 1 | 2];
  const n2 = BODY_AXES[(i + 2) % 3 as 0 | 1 | 2];
  const rim: Vec3[] = [];
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  for (let k = 0; k < SEGMENTS; k++) {
    const phi = (2 * Math.PI * k) / SEGMENTS;
    rim.push(
      add(
        scale(a, c),
        add(scale(n1, s * Math.cos(phi)), scale(n2, s * Math.sin(phi))),
      ),
    );
  }
  return { theta, apex: [0, 0, 0], rim };
}

/** Per-axis cache; rebuilds only when theta moves past the threshold. */
export class ConeCache {
  private meshes: [ConeMesh | null, ConeMesh | null, ConeMesh | null] = [null, null, null];

  get(i: 0 | 1 | 2, theta: number): ConeMesh {
    const cached = this.meshes[i];
    if (cached !== null && Math.abs(cached.theta - theta) <= REBUILD_THRESHOLD) {
      return cached;
    }
    const mesh = buildCone(i, theta);
    this.meshes[i] = mesh;
    return mesh;
  }
}
