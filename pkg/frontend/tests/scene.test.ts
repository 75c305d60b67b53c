import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';
import type { Snapshot } from '../src/api.js';
import {
  buildScene,
  defaultView,
  drawScene,
  omegaColor,
  GHOST_ALPHA,
  SceneContext,
} from '../src/scene.js';

function fixture(): Snapshot {
  const url = new URL('./fixtures/snapshot.fresh.json', import.meta.url);
  return JSON.parse(readFileSync(url, 'utf8')) as Snapshot;
}

const W = 800;
const H = 600;

describe('scene building', () => {
  it('projects the curve and control polygon into the viewport', () => {
    const snapshot = fixture();
    const scene = buildScene(snapshot, defaultView(), W, H);
    expect(scene.curve).toHaveLength(snapshot.curve_samples.length);
    expect(scene.polygon?.points).toHaveLength(snapshot.n);
    for (const [x, y] of scene.curve) {
      expect(x).toBeGreaterThanOrEqual(0);
      expect(x).toBeLessThanOrEqual(W);
      expect(y).toBeGreaterThanOrEqual(0);
      expect(y).toBeLessThanOrEqual(H);
    }
  });

  it('draws comb teeth for a curved snapshot', () => {
    const scene = buildScene(fixture(), defaultView(), W, H);
    expect(scene.combTeeth.length).toBeGreaterThan(0);
    expect(scene.combSpine.length).toBe(fixture().comb.samples.length);
  });

  it('leaves the comb layer empty when all teeth have zero length', () => {
    const snapshot = fixture();
    const flat: Snapshot = {
      ...snapshot,
      comb: {
        scale: snapshot.comb.scale,
        samples: snapshot.comb.samples.map((s) => ({
          ...s,
          tooth_end: [...s.point],
        })),
      },
    };
    const scene = buildScene(flat, defaultView(), W, H);
    expect(scene.combTeeth).toHaveLength(0);
    expect(scene.combSpine).toHaveLength(0);
  });

  it('skips hidden or unknown layers', () => {
    const view = defaultView();
    view.showComb = false;
    view.showPolygon = false;
    const scene = buildScene(fixture(), view, W, H);
    expect(scene.combTeeth).toHaveLength(0);
    expect(scene.polygon).toBeNull();
    expect(scene.dataPoints).toHaveLength(0); // data points unknown for models
  });

  it('includes the ghost overlay only when toggled on', () => {
    const snapshot = fixture();
    const view = defaultView();
    view.ghost = snapshot.curve_samples.map(([x, y]) => [x + 0.1, y]);
    expect(buildScene(snapshot, view, W, H).ghost).toHaveLength(0);
    view.showGhost = true;
    expect(buildScene(snapshot, view, W, H).ghost).toHaveLength(
      snapshot.curve_samples.length,
    );
  });

  it('gives a uniform weight vector a single color', () => {
    const snapshot = fixture();
    const scene = buildScene(snapshot, defaultView(), W, H);
    const colors = new Set(scene.polygon?.colors);
    expect(colors.size).toBe(1);

    const painted: Snapshot = {
      ...snapshot,
      omega: snapshot.omega.map((w, i) => (i >= 3 && i < 7 ? 3e-5 : w)),
    };
    const repainted = buildScene(painted, defaultView(), W, H);
    expect(new Set(repainted.polygon?.colors).size).toBe(2);
  });

  it('maps the low and high weights to distinct ends of the palette', () => {
    expect(omegaColor(0, 0, 1)).not.toBe(omegaColor(1, 0, 1));
    expect(omegaColor(0.5, 0.5, 0.5)).toBe(omegaColor(0.1, 0.1, 0.1));
  });
});

class RecordingContext implements SceneContext {
  ops: string[] = [];
  alphas: number[] = [];
  lineWidth = 1;
  strokeStyle: string | CanvasGradient | CanvasPattern = '';
  fillStyle: string | CanvasGradient | CanvasPattern = '';
  globalAlpha = 1;

  clearRect(): void {
    this.ops.push('clear');
  }
  beginPath(): void {
    this.ops.push('begin');
  }
  moveTo(): void {
    this.ops.push('move');
  }
  lineTo(): void {
    this.ops.push('line');
  }
  arc(): void {
    this.ops.push('arc');
  }
  rect(): void {
    this.ops.push('rect');
  }
  stroke(): void {
    this.ops.push(`stroke@${this.globalAlpha}`);
    this.alphas.push(this.globalAlpha);
  }
  fill(): void {
    this.ops.push('fill');
  }
  save(): void {
    this.ops.push('save');
  }
  restore(): void {
    this.globalAlpha = 1;
    this.ops.push('restore');
  }
}

describe('scene drawing', () => {
  it('draws the ghost at reduced opacity and everything else opaque', () => {
    const snapshot = fixture();
    const view = defaultView();
    view.showGhost = true;
    view.ghost = snapshot.curve_samples;
    const scene = buildScene(snapshot, view, W, H);
    const ctx = new RecordingContext();
    drawScene(ctx, scene, W, H);
    expect(ctx.alphas).toContain(GHOST_ALPHA);
    expect(Math.max(...ctx.alphas)).toBe(1);
    expect(ctx.ops[0]).toBe('clear');
  });

  it('emits no comb strokes for an empty comb layer', () => {
    const snapshot = fixture();
    const flat: Snapshot = {
      ...snapshot,
      comb: {
        scale: 1,
        samples: snapshot.comb.samples.map((s) => ({ ...s, tooth_end: [...s.point] })),
      },
    };
    const scene = buildScene(flat, defaultView(), W, H);
    const ctx = new RecordingContext();
    drawScene(ctx, scene, W, H);
    const full = buildScene(snapshot, defaultView(), W, H);
    const fullCtx = new RecordingContext();
    drawScene(fullCtx, full, W, H);
    const strokes = (ops: string[]) => ops.filter((op) => op.startsWith('stroke')).length;
    expect(strokes(fullCtx.ops) - strokes(ctx.ops)).toBe(
      snapshot.comb.samples.length + 1, // one per tooth plus the spine
    );
  });
});
