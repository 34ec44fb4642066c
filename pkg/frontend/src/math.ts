/** Just enough 3D math for triads, cones, and a fixed camera. */

export type Vec3 = [number, number, number];
export type Mat3 = [Vec3, Vec3, Vec3]; // rows

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.hypot(a[0], a[1], a[2]);
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return n > 0 ? scale(a, 1 / n) : [0, 0, 0];
}

export function matVec(m: Mat3, v: Vec3): Vec3 {
  return [dot(m[0], v), dot(m[1], v), dot(m[2], v)];
}

/** Column i of a rotation matrix: the i-th body axis in world frame. */
export function column(m: Mat3, i: 0 | 1 | 2): Vec3 {
  return [m[0][i], m[1][i], m[2][i]];
}

/** Unit quaternion (w, x, y, z) to rotation matrix. */
export function quatToMat(q: [number, number, number, number]): Mat3 {
  const [w, x, y, z] = q;
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
    [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
    [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
  ];
}

/** Orbiting camera: right/up/forward unit vectors from yaw and pitch. */
export interface Camera {
  right: Vec3;
  up: Vec3;
  forward: Vec3; // from eye toward the scene
  distance: number;
}

export function makeCamera(yaw: number, pitch: number, distance = 4): Camera {
  const cy = Math.cos(yaw);
  const sy = Math.sin(yaw);
  const cp = Math.cos(pitch);
  const sp = Math.sin(pitch);
  const forward: Vec3 = [cp * cy, cp * sy, -sp];
  const right: Vec3 = [-sy, cy, 0];
  const up = cross(right, forward);
  return { right, up: scale(up, -1), forward, distance };
}

/** Perspective projection into canvas pixels; null when behind the eye. */
export function project(
  cam: Camera,
  p: Vec3,
  width: number,
  height: number,
): [number, number] | null {
  const eye = scale(cam.forward, -cam.distance);
  const rel: Vec3 = [p[0] - eye[0], p[1] - eye[1], p[2] - eye[2]];
  const depth = dot(rel, cam.forward);
  if (depth < 1e-3) return null;
  const f = (0.9 * Math.min(width, height)) / depth;
  return [
    width / 2 + f * dot(rel, cam.right),
    height / 2 - f * dot(rel, cam.up),
  ];
}
