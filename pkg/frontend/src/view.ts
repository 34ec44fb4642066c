/** Client-side session mirror: latest frame, banner, input coalescing. */

import { Frame, parseFrame } from "./wire";

export class ViewState {
  frame: Frame | null = null;
  /** set when the last wire message was junk; cleared by a good frame */
  banner = false;
  /** highest tick acknowledged for an input send */
  lastAckTick = -1;
  private pending: {
    u: [number, number, number];
    speed_scale?: number;
    filter_on?: boolean;
  } | null = null;

  /** Returns true when the message advanced the view. */
  ingest(raw: unknown): boolean {
    const frame = parseFrame(raw);
    if (frame === null) {
      // keep rendering the last good frame
      this.banner = true;
      return false;
    }
    this.banner = false;
    this.frame = frame;
    return true;
  }

  /** Overwrites any unsent command; the stream outpaces the pointer. */
  queueInput(u: [number, number, number], speed_scale?: number, filter_on?: boolean): void {
    this.pending = { u, speed_scale, filter_on };
  }

  /** Hands over the latest command once, for at most one send per tick. */
  takePending() {
    const p = this.pending;
    this.pending = null;
    return p;
  }

  /** Acks must come back in tick order; anything else is a bug upstream. */
  recordAck(tick: number): void {
    if (tick < this.lastAckTick) {
      throw new Error(`ack tick ${tick} after ${this.lastAckTick}`);
    }
    this.lastAckTick = tick;
  }
}
