// Scene building and canvas drawing for the workbench viewport.
//
// buildScene is pure: snapshot + view state in, screen-space layers out.
// drawScene paints a built scene; keeping the two apart lets the layer
// logic be tested without a canvas.

import type { Snapshot } from './api.js';

export type Pt = [number, number];

export interface ViewState {
  selection: [number, number] | null; // 1-based inclusive control range
  combScale: number | null; // null = server's automatic scale
  showData: boolean;
  showPolygon: boolean;
  showComb: boolean;
  showGhost: boolean;
  dataPoints: number[][] | null; // input points, when the client knows them
  ghost: number[][] | null; // previous-round curve samples
}

export function defaultView(): ViewState {
  return {
    selection: null,
    combScale: null,
    showData: true,
    showPolygon: true,
    showComb: true,
    showGhost: false,
    dataPoints: null,
    ghost: null,
  };
}

export interface Transform {
  scale: number;
  ox: number;
  oy: number;
}

export interface Scene {
  transform: Transform;
  curve: Pt[];
  combTeeth: Pt[][];
  combSpine: Pt[];
  polygon: { points: Pt[]; colors: string[] } | null;
  dataPoints: Pt[];
  ghost: Pt[];
  selection: [number, number] | null;
}

export const GHOST_ALPHA = 0.35;

const MARGIN = 24;

export const CURVE_COLOR = '#1c6ee8';
export const COMB_COLOR = '#9467bd';
export const DATA_COLOR = '#555';
export const GHOST_COLOR = '#888';
export const SELECTION_COLOR = '#e8710a';

/** Heat color for a smoothing weight; a uniform vector maps to one color. */
export function omegaColor(omega: number, lo: number, hi: number): string {
  const t = hi > lo ? (omega - lo) / (hi - lo) : 0;
  const hue = 210 - 210 * t; // blue (low) to red (high)
  return `hsl(${Math.round(hue)}, 70%, 45%)`;
}

function bounds(chunks: number[][][]): [number, number, number, number] {
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const chunk of chunks) {
    for (const p of chunk) {
      if (p[0] < xMin) xMin = p[0];
      if (p[0] > xMax) xMax = p[0];
      if (p[1] < yMin) yMin = p[1];
      if (p[1] > yMax) yMax = p[1];
    }
  }
  if (!Number.isFinite(xMin)) {
    return [0, 1, 0, 1];
  }
  return [xMin, xMax, yMin, yMax];
}

export function fitTransform(
  chunks: number[][][],
  width: number,
  height: number,
): Transform {
  const [xMin, xMax, yMin, yMax] = bounds(chunks);
  const spanX = xMax - xMin || 1;
  const spanY = yMax - yMin || 1;
  const scale = Math.min(
    (width - 2 * MARGIN) / spanX,
    (height - 2 * MARGIN) / spanY,
  );
  // center the world box; screen y grows downward
  const ox = width / 2 - scale * (xMin + xMax) / 2;
  const oy = height / 2 + scale * (yMin + yMax) / 2;
  return { scale, ox, oy };
}

export function toScreen(t: Transform, p: number[]): Pt {
  return [t.ox + t.scale * p[0], t.oy - t.scale * p[1]];
}

export function buildScene(
  snapshot: Snapshot,
  view: ViewState,
  width: number,
  height: number,
): Scene {
  const data = view.showData && view.dataPoints ? view.dataPoints : [];
  const ghost = view.showGhost && view.ghost ? view.ghost : [];
  const transform = fitTransform(
    [snapshot.curve_samples, snapshot.control_points, data, ghost],
    width,
    height,
  );
  const project = (points: number[][]): Pt[] =>
    points.map((p) => toScreen(transform, p));

  const scene: Scene = {
    transform,
    curve: project(snapshot.curve_samples),
    combTeeth: [],
    combSpine: [],
    polygon: null,
    dataPoints: project(data),
    ghost: project(ghost),
    selection: view.selection,
  };

  if (view.showComb) {
    // zero-length teeth mean a straight segment: leave the layer empty
    // rather than overdrawing the curve with degenerate strokes
    const span = 1 / Math.max(transform.scale, 1e-12);
    const visible = snapshot.comb.samples.filter((s) => {
      const dx = s.tooth_end[0] - s.point[0];
      const dy = s.tooth_end[1] - s.point[1];
      return Math.hypot(dx, dy) > 1e-9 * Math.max(1, span);
    });
    if (visible.length > 0) {
      scene.combTeeth = visible.map((s) => [
        toScreen(transform, s.point),
        toScreen(transform, s.tooth_end),
      ]);
      scene.combSpine = snapshot.comb.samples.map((s) =>
        toScreen(transform, s.tooth_end),
      );
    }
  }

  if (view.showPolygon && snapshot.control_points.length > 0) {
    const lo = Math.min(...snapshot.omega);
    const hi = Math.max(...snapshot.omega);
    scene.polygon = {
      points: project(snapshot.control_points),
      colors: snapshot.omega.map((w) => omegaColor(w, lo, hi)),
    };
  }

  return scene;
}

// The subset of CanvasRenderingContext2D the drawer needs; kept structural
// so non-browser contexts can stand in.
export interface SceneContext {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  rect(x: number, y: number, w: number, h: number): void;
  stroke(): void;
  fill(): void;
  save(): void;
  restore(): void;
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
  globalAlpha: number;
}

function strokePolyline(ctx: SceneContext, points: Pt[]): void {
  if (points.length < 2) {
    return;
  }
  ctx.beginPath();
  ctx.moveTo(points[0][0], points[0][1]);
  for (let i = 1; i < points.length; i++) {
    ctx.lineTo(points[i][0], points[i][1]);
  }
  ctx.stroke();
}

export function drawScene(
  ctx: SceneContext,
  scene: Scene,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);

  if (scene.ghost.length > 1) {
    ctx.save();
    ctx.globalAlpha = GHOST_ALPHA;
    ctx.strokeStyle = GHOST_COLOR;
    ctx.lineWidth = 2;
    strokePolyline(ctx, scene.ghost);
    ctx.restore();
  }

  if (scene.dataPoints.length > 0) {
    ctx.fillStyle = DATA_COLOR;
    for (const [x, y] of scene.dataPoints) {
      ctx.beginPath();
      ctx.arc(x, y, 2, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  if (scene.combTeeth.length > 0) {
    ctx.strokeStyle = COMB_COLOR;
    ctx.lineWidth = 1;
    for (const [from, to] of scene.combTeeth) {
      strokePolyline(ctx, [from, to]);
    }
    strokePolyline(ctx, scene.combSpine);
  }

  ctx.strokeStyle = CURVE_COLOR;
  ctx.lineWidth = 2;
  strokePolyline(ctx, scene.curve);

  if (scene.polygon) {
    const { points, colors } = scene.polygon;
    ctx.strokeStyle = '#bbb';
    ctx.lineWidth = 1;
    strokePolyline(ctx, points);
    points.forEach(([x, y], index) => {
      ctx.fillStyle = colors[index];
      ctx.beginPath();
      ctx.rect(x - 3, y - 3, 6, 6);
      ctx.fill();
    });
    if (scene.selection) {
      const [from, to] = scene.selection;
      ctx.strokeStyle = SELECTION_COLOR;
      ctx.lineWidth = 2;
      for (let index = from - 1; index < to; index++) {
        const point = points[index];
        if (!point) continue;
        ctx.beginPath();
        ctx.arc(point[0], point[1], 6, 0, 2 * Math.PI);
        ctx.stroke();
      }
    }
  }
}
