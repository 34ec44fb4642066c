/** Canvas renderer: world triad, two body triads, translucent cones. */

import { BOUNDARY_COLOR, marginColor } from "./colors";
import { ConeCache } from "./cones";
import {
  Camera,
  Mat3,
  Vec3,
  column,
  matVec,
  project,
  quatToMat,
  scale,
} from "./math";
import { Frame } from "./wire";

const WORLD_COLORS = ["#888888", "#888888", "#888888"];
const EXC_COLORS = ["#d62728", "#2ca02c", "#1f77b4"];

export class SceneRenderer {
  private cones = new ConeCache();

  constructor(private readonly ctx: CanvasRenderingContext2D) {}

  draw(frame: Frame, cam: Camera): void {
    const { width, height } = this.ctx.canvas;
    this.ctx.clearRect(0, 0, width, height);
    const rRef = quatToMat(frame.q_ref);
    const rExc = quatToMat(frame.q_exc);

    this.triad(
      [
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
      ],
      cam,
      WORLD_COLORS,
      0.5,
      [4, 0],
    );
    for (let i = 0 as 0 | 1 | 2; i < 3; i++) {
      this.cone(rRef, i, frame.theta[i], frame.h[i], frame.active[i], cam);
    }
    this.triad(
      [column(rRef, 0), column(rRef, 1), column(rRef, 2)],
      cam,
      EXC_COLORS,
      1.0,
      [6, 4],
    );
    this.triad(
      [column(rExc, 0), column(rExc, 1), column(rExc, 2)],
      cam,
      EXC_COLORS,
      1.0,
      [],
    );
  }

  private triad(
    axes: [Vec3, Vec3, Vec3],
    cam: Camera,
    colors: string[],
    length: number,
    dash: number[],
  ): void {
    const { width, height } = this.ctx.canvas;
    const origin = project(cam, [0, 0, 0], width, height);
    if (origin === null) return;
    this.ctx.save();
    this.ctx.setLineDash(dash);
    this.ctx.lineWidth = 2;
    axes.forEach((axis, i) => {
      const tip = project(cam, scale(axis, length), width, height);
      if (tip === null) return;
      this.ctx.strokeStyle = colors[i] ?? "#000000";
      this.ctx.beginPath();
      this.ctx.moveTo(origin[0], origin[1]);
      this.ctx.lineTo(tip[0], tip[1]);
      this.ctx.stroke();
    });
    this.ctx.restore();
  }

  private cone(
    rRef: Mat3,
    i: 0 | 1 | 2,
    theta: number,
    h: number,
    active: boolean,
    cam: Camera,
  ): void {
    const { width, height } = this.ctx.canvas;
    const mesh = this.cones.get(i, theta);
    const apex = project(cam, mesh.apex, width, height);
    if (apex === null) return;
    const rim = mesh.rim
      .map((p) => project(cam, matVec(rRef, p), width, height))
      .filter((p): p is [number, number] => p !== null);
    if (rim.length < 3) return;

    const fill = marginColor(h, theta);
    this.ctx.save();
    this.ctx.globalAlpha = 0.25;
    this.ctx.fillStyle = fill;
    this.ctx.beginPath();
    const first = rim[0]!;
    this.ctx.moveTo(first[0], first[1]);
    for (const p of rim.slice(1)) this.ctx.lineTo(p[0], p[1]);
    this.ctx.closePath();
    this.ctx.fill();

    this.ctx.globalAlpha = active ? 1.0 : 0.5;
    this.ctx.lineWidth = active ? 3 : 1;
    this.ctx.strokeStyle = active ? BOUNDARY_COLOR : fill;
    for (const p of rim) {
      this.ctx.beginPath();
      this.ctx.moveTo(apex[0], apex[1]);
      this.ctx.lineTo(p[0], p[1]);
      this.ctx.stroke();
    }
    this.ctx.restore();
  }
}
