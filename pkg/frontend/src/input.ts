/** Pointer drags to angular-velocity commands, relative to the camera. */

import { Camera, Vec3, add, scale } from "./math";

export interface Drag {
  dx: number; // px, positive right
  dy: number; // px, positive down
  wheel: number; // scroll detents
}

export const WHEEL_STEP = 20; // px-equivalent per detent

/**
 * Screen-space drag to body angular velocity: horizontal motion turns
 * about the camera-up axis, vertical about camera-right, and the wheel
 * about the view axis. Linear in the drag, so reversing it negates the
 * command; no drag means zero.
 */
export function pointerToInput(drag: Drag, gain: number, cam: Camera): Vec3 {
  const yaw = scale(cam.up, gain * drag.dx);
  const pitch = scale(cam.right, gain * drag.dy);
  const roll = scale(cam.forward, gain * drag.wheel * WHEEL_STEP);
  return add(add(yaw, pitch), roll);
}
