// Convergence chart: relative fitting error, relative energy and relative
// iterate movement against the iteration count, log-scaled vertically.

import type { Pt, SceneContext } from './scene.js';

export interface ChartSeries {
  name: string;
  color: string;
  points: Pt[];
}

export interface Chart {
  series: ChartSeries[];
  yTicks: { y: number; label: string }[];
  xTicks: { x: number; label: string }[];
}

// trace rows are [fit_abs, energy_abs, fit_rel, energy_rel, iter_rel]
const COLUMNS: { column: number; name: string; color: string }[] = [
  { column: 2, name: 'fitting (rel)', color: '#1c6ee8' },
  { column: 3, name: 'energy (rel)', color: '#2ca02c' },
  { column: 4, name: 'movement (rel)', color: '#d62728' },
];

const PAD = 34;
const FLOOR = 1e-16; // log-scale stand-in for exact zeros

export function buildChart(
  trace: number[][],
  width: number,
  height: number,
): Chart {
  const rows = trace.length;
  if (rows < 2) {
    return { series: [], yTicks: [], xTicks: [] };
  }
  let logMin = Infinity;
  let logMax = -Infinity;
  for (const row of trace) {
    for (const { column } of COLUMNS) {
      const value = row[column];
      if (!Number.isFinite(value)) continue;
      const logged = Math.log10(Math.max(value, FLOOR));
      if (logged < logMin) logMin = logged;
      if (logged > logMax) logMax = logged;
    }
  }
  if (!Number.isFinite(logMin)) {
    return { series: [], yTicks: [], xTicks: [] };
  }
  if (logMax - logMin < 1) {
    logMax = logMin + 1;
  }

  const xAt = (k: number): number =>
    PAD + ((width - 2 * PAD) * k) / (rows - 1);
  const yAt = (logged: number): number =>
    height - PAD - ((height - 2 * PAD) * (logged - logMin)) / (logMax - logMin);

  const series = COLUMNS.map(({ column, name, color }) => {
    const points: Pt[] = [];
    trace.forEach((row, k) => {
      const value = row[column];
      if (!Number.isFinite(value)) return;
      points.push([xAt(k), yAt(Math.log10(Math.max(value, FLOOR)))]);
    });
    return { name, color, points };
  });

  const yTicks: Chart['yTicks'] = [];
  for (let e = Math.ceil(logMin); e <= Math.floor(logMax); e++) {
    yTicks.push({ y: yAt(e), label: `1e${e}` });
  }
  const xStep = Math.max(1, Math.ceil((rows - 1) / 6));
  const xTicks: Chart['xTicks'] = [];
  for (let k = 0; k < rows; k += xStep) {
    xTicks.push({ x: xAt(k), label: String(k) });
  }
  return { series, yTicks, xTicks };
}

export interface ChartContext extends SceneContext {
  fillText(text: string, x: number, y: number): void;
  font: string;
}

export function drawChart(
  ctx: ChartContext,
  chart: Chart,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.font = '10px sans-serif';
  ctx.strokeStyle = '#ddd';
  ctx.lineWidth = 1;
  for (const tick of chart.yTicks) {
    ctx.beginPath();
    ctx.moveTo(PAD, tick.y);
    ctx.lineTo(width - PAD, tick.y);
    ctx.stroke();
    ctx.fillStyle = '#666';
    ctx.fillText(tick.label, 2, tick.y + 3);
  }
  for (const tick of chart.xTicks) {
    ctx.fillStyle = '#666';
    ctx.fillText(tick.label, tick.x - 4, height - PAD + 14);
  }
  for (const line of chart.series) {
    if (line.points.length < 2) continue;
    ctx.strokeStyle = line.color;
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.moveTo(line.points[0][0], line.points[0][1]);
    for (let i = 1; i < line.points.length; i++) {
      ctx.lineTo(line.points[i][0], line.points[i][1]);
    }
    ctx.stroke();
  }
  // legend across the top
  let x = PAD;
  for (const line of chart.series) {
    ctx.fillStyle = line.color;
    ctx.fillText(line.name, x, 12);
    x += 9 * line.name.length;
  }
}
