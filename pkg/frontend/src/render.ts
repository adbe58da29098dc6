// Top-down field rendering. The math helpers are pure so tests can check
// coordinate mapping without a DOM canvas.

import { FrameModel } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
  halfExtent: number;
  margin: number;
}

export function worldToCanvas(p: [number, number], vp: Viewport): [number, number] {
  const usable = Math.min(vp.width, vp.height) - 2 * vp.margin;
  const scale = usable / (2 * vp.halfExtent);
  const cx = vp.width / 2 + p[0] * scale;
  const cy = vp.height / 2 - p[1] * scale; // +y is up on the field, down on canvas
  return [cx, cy];
}

export function scaleLength(len: number, vp: Viewport): number {
  const usable = Math.min(vp.width, vp.height) - 2 * vp.margin;
  return (len * usable) / (2 * vp.halfExtent);
}

export const AGENT_COLORS = ["#2f9e44", "#1971c2", "#e8590c"];

export interface Trail {
  points: [number, number][];
  cap: number;
}

export function pushTrail(trail: Trail, p: [number, number]): void {
  trail.points.push([p[0], p[1]]);
  if (trail.points.length > trail.cap) {
    trail.points.splice(0, trail.points.length - trail.cap);
  }
}

// Minimal structural type so unit tests can pass a recording stub.
export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  strokeStyle: string;
  fillStyle: string;
  lineWidth: number;
  globalAlpha: number;
}

export function renderField(ctx: Canvas2D, frame: FrameModel, vp: Viewport, trails: Trail[]): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.globalAlpha = 1;
  ctx.setLineDash([]);

  // field bounds
  const [x0, y0] = worldToCanvas([-frame.half_extent, frame.half_extent], vp);
  const side = scaleLength(2 * frame.half_extent, vp);
  ctx.beginPath();
  ctx.rect(x0, y0, side, side);
  ctx.strokeStyle = "#495057";
  ctx.lineWidth = 2;
  ctx.stroke();

  // home base
  const [hx, hy] = worldToCanvas(frame.home.pos, vp);
  ctx.beginPath();
  ctx.arc(hx, hy, scaleLength(frame.home.radius, vp), 0, Math.PI * 2);
  ctx.fillStyle = "#dee2e6";
  ctx.fill();
  ctx.strokeStyle = "#868e96";
  ctx.lineWidth = 1;
  ctx.stroke();

  // resources
  for (const res of frame.resources) {
    if (!res.active) continue;
    const [rx, ry] = worldToCanvas(res.pos, vp);
    ctx.beginPath();
    ctx.arc(rx, ry, 5, 0, Math.PI * 2);
    ctx.fillStyle = "#fab005";
    ctx.fill();
  }

  // waypoint polylines, one per agent
  frame.waypoints.forEach((wps, i) => {
    if (wps.length === 0) return;
    ctx.beginPath();
    const [sx, sy] = worldToCanvas(wps[0], vp);
    ctx.moveTo(sx, sy);
    for (const wp of wps.slice(1)) {
      const [px, py] = worldToCanvas(wp, vp);
      ctx.lineTo(px, py);
    }
    ctx.setLineDash([5, 4]);
    ctx.strokeStyle = AGENT_COLORS[i % AGENT_COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.globalAlpha = 0.8;
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.globalAlpha = 1;
    for (const wp of wps) {
      const [px, py] = worldToCanvas(wp, vp);
      ctx.beginPath();
      ctx.arc(px, py, 2.5, 0, Math.PI * 2);
      ctx.fillStyle = AGENT_COLORS[i % AGENT_COLORS.length];
      ctx.fill();
    }
  });

  // agent trails
  trails.forEach((trail, i) => {
    if (trail.points.length < 2) return;
    ctx.beginPath();
    const [sx, sy] = worldToCanvas(trail.points[0], vp);
    ctx.moveTo(sx, sy);
    for (const p of trail.points.slice(1)) {
      const [px, py] = worldToCanvas(p, vp);
      ctx.lineTo(px, py);
    }
    ctx.strokeStyle = AGENT_COLORS[i % AGENT_COLORS.length];
    ctx.globalAlpha = 0.35;
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.globalAlpha = 1;
  });

  // agents
  frame.agents.forEach((agent, i) => {
    const [ax, ay] = worldToCanvas(agent.pos, vp);
    ctx.beginPath();
    ctx.arc(ax, ay, 7, 0, Math.PI * 2);
    ctx.fillStyle = AGENT_COLORS[i % AGENT_COLORS.length];
    ctx.fill();
    if (agent.carrying) {
      ctx.beginPath();
      ctx.arc(ax, ay, 10, 0, Math.PI * 2);
      ctx.strokeStyle = "#fab005";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
    if (agent.defended) {
      ctx.beginPath();
      ctx.arc(ax, ay, 13, 0, Math.PI * 2);
      ctx.strokeStyle = "#e03131";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  });

  // invader
  if (frame.invader.active) {
    const [ix, iy] = worldToCanvas(frame.invader.pos, vp);
    ctx.beginPath();
    ctx.moveTo(ix, iy - 8);
    ctx.lineTo(ix + 8, iy + 7);
    ctx.lineTo(ix - 8, iy + 7);
    ctx.lineTo(ix, iy - 8);
    ctx.fillStyle = "#e03131";
    ctx.fill();
  }
}
