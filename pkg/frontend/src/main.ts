// Workbench wiring: DOM controls on the left, viewport in the middle,
// metrics and convergence chart on the right. All math lives server-side;
// this file only moves snapshots around.

import { ApiError, SessionClient, Snapshot, StopBody } from './api.js';
import { buildChart, drawChart, ChartContext } from './chart.js';
import { ActionLog } from './log.js';
import { renderMetricsPanel } from './metrics.js';
import {
  buildScene,
  defaultView,
  drawScene,
  ViewState,
} from './scene.js';

const POLL_MS = 300;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function labeled(label: string, input: HTMLElement): HTMLLabelElement {
  const wrap = el('label');
  wrap.append(label + ' ', input);
  return wrap;
}

class Workbench {
  private client: SessionClient;
  private log = new ActionLog();
  private snapshot: Snapshot | null = null;
  private view: ViewState = defaultView();
  private liveTrace: number[][] = [];
  private busy = false;
  private lastRound = -1;

  private viewport = el('canvas', { width: '760', height: '560' });
  private chartCanvas = el('canvas', { width: '380', height: '240' });
  private metricsPanel = el('div', { class: 'panel' });
  private statusLine = el('p', { class: 'status' });

  private modelInput = el('select');
  private samplesInput = el('input', { type: 'number', value: '100' });
  private nInput = el('input', { type: 'number', value: '34' });
  private rInput = el('input', { type: 'number', value: '2', min: '1', max: '3' });
  private baseOmegaInput = el('input', { value: '1e-5' });
  private pointsInput = el('textarea', {
    rows: '3',
    placeholder: 'optional: JSON array of [x, y] data points',
  });

  private fromInput = el('input', { type: 'number', value: '4', min: '1' });
  private toInput = el('input', { type: 'number', value: '7', min: '1' });
  private paintOmegaInput = el('input', { value: '1e-5' });

  private stepCountInput = el('input', { type: 'number', value: '1', min: '1' });
  private tolInput = el('input', { value: '1e-6' });
  private maxItersInput = el('input', { type: 'number', value: '10000' });

  private knotInput = el('input', { value: '0.5' });
  private combScaleInput = el('input', { value: '' });

  constructor(root: HTMLElement, base: string) {
    this.client = new SessionClient(base);
    root.append(
      this.buildControls(),
      this.buildViewport(),
      this.buildSidebar(),
    );
  }

  private buildControls(): HTMLElement {
    const controls = el('div', { class: 'controls' });

    for (const model of ['starfish', 'viviani']) {
      this.modelInput.append(el('option', { value: model }, model));
    }
    const createButton = el('button', {}, 'create session');
    createButton.addEventListener('click', () => this.createSession());
    controls.append(
      this.fieldset('session', [
        labeled('model', this.modelInput),
        labeled('samples', this.samplesInput),
        labeled('control points', this.nInput),
        labeled('energy order r', this.rInput),
        labeled('base ω', this.baseOmegaInput),
        this.pointsInput,
        createButton,
      ]),
    );

    const paintButton = el('button', {}, 'paint');
    paintButton.addEventListener('click', () => this.paint());
    controls.append(
      this.fieldset('weights', [
        labeled('from', this.fromInput),
        labeled('to', this.toInput),
        labeled('ω', this.paintOmegaInput),
        paintButton,
      ]),
    );

    const stepButton = el('button', {}, 'step');
    stepButton.addEventListener('click', () => this.step());
    const runButton = el('button', {}, 'run');
    runButton.addEventListener('click', () => this.run());
    controls.append(
      this.fieldset('iterate', [
        labeled('count', this.stepCountInput),
        stepButton,
        labeled('tol', this.tolInput),
        labeled('max iters', this.maxItersInput),
        runButton,
      ]),
    );

    const knotButton = el('button', {}, 'insert');
    knotButton.addEventListener('click', () => {
      void this.insertKnots([Number(this.knotInput.value)]);
    });
    controls.append(
      this.fieldset('knots', [
        labeled('u', this.knotInput),
        knotButton,
        el('small', {}, 'or double-click the curve'),
      ]),
    );

    const toggles = (['showData', 'showPolygon', 'showComb', 'showGhost'] as const).map(
      (key) => {
        const box = el('input', { type: 'checkbox' });
        box.checked = this.view[key];
        box.addEventListener('change', () => {
          this.view[key] = box.checked;
          this.redraw();
        });
        return labeled(key.replace('show', '').toLowerCase(), box);
      },
    );
    this.combScaleInput.addEventListener('change', () => {
      const value = Number(this.combScaleInput.value);
      this.view.combScale = Number.isFinite(value) && value > 0 ? value : null;
      void this.refreshComb();
    });
    controls.append(
      this.fieldset('view', [
        ...toggles,
        labeled('comb scale (blank = auto)', this.combScaleInput),
      ]),
    );

    const exportButton = el('button', {}, 'export action log');
    exportButton.addEventListener('click', () => this.exportLog());
    controls.append(this.fieldset('log', [exportButton]), this.statusLine);
    return controls;
  }

  private fieldset(title: string, children: HTMLElement[]): HTMLFieldSetElement {
    const box = el('fieldset');
    box.append(el('legend', {}, title), ...children);
    return box;
  }

  private buildViewport(): HTMLElement {
    const wrap = el('div', { class: 'viewport' });
    this.viewport.addEventListener('dblclick', (event) => {
      void this.insertKnotAt(event);
    });
    wrap.append(this.viewport);
    return wrap;
  }

  private buildSidebar(): HTMLElement {
    const side = el('div', { class: 'sidebar' });
    side.append(this.metricsPanel, this.chartCanvas);
    return side;
  }

  private setStatus(text: string, isError = false): void {
    this.statusLine.textContent = text;
    this.statusLine.classList.toggle('error', isError);
  }

  private async mutate(work: () => Promise<void>): Promise<void> {
    if (this.busy) {
      this.setStatus('busy: one mutation at a time', true);
      return;
    }
    this.busy = true;
    try {
      await work();
      this.setStatus(this.snapshot ? `session ${this.snapshot.id}` : '');
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.setStatus('server busy with a running iteration', true);
      } else {
        this.setStatus(String(error instanceof Error ? error.message : error), true);
      }
    } finally {
      this.busy = false;
    }
  }

  private async createSession(): Promise<void> {
    await this.mutate(async () => {
      const body: Record<string, unknown> = {
        n: Number(this.nInput.value),
        r: Number(this.rInput.value),
        base_omega: Number(this.baseOmegaInput.value),
      };
      const pasted = this.pointsInput.value.trim();
      if (pasted) {
        body.points = JSON.parse(pasted);
        this.view.dataPoints = body.points as number[][];
      } else {
        body.model = this.modelInput.value;
        body.samples = Number(this.samplesInput.value);
        this.view.dataPoints = null;
      }
      this.log = new ActionLog();
      this.log.recordCreate(body);
      this.view.ghost = null;
      this.liveTrace = [];
      this.lastRound = -1;
      this.apply(await this.client.createSession(body));
    });
  }

  private async paint(): Promise<void> {
    await this.mutate(async () => {
      if (!this.snapshot) return;
      const from = Number(this.fromInput.value);
      const to = Number(this.toInput.value);
      if (!(from >= 1 && to >= from)) {
        return; // empty selection is a no-op
      }
      const body = {
        ranges: [{ from, to, omega: Number(this.paintOmegaInput.value) }],
      };
      this.log.recordWeights(body);
      this.view.selection = [from, to];
      this.apply(await this.client.paintWeights(this.snapshot.id, body));
    });
  }

  private async step(): Promise<void> {
    await this.mutate(async () => {
      if (!this.snapshot) return;
      const count = Number(this.stepCountInput.value);
      this.log.recordStep(count);
      this.apply(await this.client.step(this.snapshot.id, count));
      await this.refreshTrace();
    });
  }

  private async run(): Promise<void> {
    await this.mutate(async () => {
      if (!this.snapshot) return;
      const stop: StopBody = {
        tol: Number(this.tolInput.value),
        max_iters: Number(this.maxItersInput.value),
      };
      this.log.recordRun(stop);
      const final = await this.client.runToCompletion(
        this.snapshot.id,
        stop,
        POLL_MS,
        (snapshot) => this.apply(snapshot),
      );
      this.apply(final);
      await this.refreshTrace();
    });
  }

  private async insertKnots(values: number[]): Promise<void> {
    await this.mutate(async () => {
      if (!this.snapshot) return;
      this.log.recordKnots(values);
      this.apply(await this.client.insertKnots(this.snapshot.id, values));
    });
  }

  private async insertKnotAt(event: MouseEvent): Promise<void> {
    if (!this.snapshot) return;
    // curve samples are uniform in parameter, so the nearest sample's
    // index is the click parameter up to sampling resolution
    const rect = this.viewport.getBoundingClientRect();
    const x = event.clientX - rect.left;
    const y = event.clientY - rect.top;
    const scene = buildScene(
      this.snapshot,
      this.view,
      this.viewport.width,
      this.viewport.height,
    );
    let best = -1;
    let bestDist = 20 * 20;
    scene.curve.forEach(([sx, sy], index) => {
      const d = (sx - x) ** 2 + (sy - y) ** 2;
      if (d < bestDist) {
        bestDist = d;
        best = index;
      }
    });
    if (best <= 0 || best >= scene.curve.length - 1) {
      return;
    }
    await this.insertKnots([best / (scene.curve.length - 1)]);
  }

  private async refreshComb(): Promise<void> {
    if (!this.snapshot) return;
    try {
      const comb = await this.client.getComb(
        this.snapshot.id,
        this.snapshot.comb.samples.length,
        this.view.combScale ?? undefined,
      );
      this.snapshot = { ...this.snapshot, comb };
      this.redraw();
    } catch (error) {
      this.setStatus(String(error instanceof Error ? error.message : error), true);
    }
  }

  private async refreshTrace(): Promise<void> {
    if (!this.snapshot) return;
    const history = await this.client.getHistory(this.snapshot.id);
    const last = history.rounds[history.rounds.length - 1];
    if (last) {
      this.liveTrace = last.trace;
      this.redraw();
    }
  }

  private apply(snapshot: Snapshot): void {
    if (this.snapshot && snapshot.round > this.lastRound && this.lastRound >= 0) {
      // a new round began: keep the previous curve as the ghost overlay
      this.view.ghost = this.snapshot.curve_samples;
    }
    this.lastRound = snapshot.round;
    if (snapshot.status === 'running') {
      const m = snapshot.metrics;
      this.liveTrace = [
        ...this.liveTrace,
        [m.fit_abs, m.energy_abs, m.fit_rel, m.energy_rel, m.iter_rel],
      ];
    }
    this.snapshot = snapshot;
    this.redraw();
  }

  private redraw(): void {
    if (!this.snapshot) return;
    const ctx = this.viewport.getContext('2d');
    if (ctx) {
      const scene = buildScene(
        this.snapshot,
        this.view,
        this.viewport.width,
        this.viewport.height,
      );
      drawScene(ctx, scene, this.viewport.width, this.viewport.height);
    }
    renderMetricsPanel(this.metricsPanel, this.snapshot);
    const chartCtx = this.chartCanvas.getContext('2d') as ChartContext | null;
    if (chartCtx) {
      drawChart(
        chartCtx,
        buildChart(this.liveTrace, this.chartCanvas.width, this.chartCanvas.height),
        this.chartCanvas.width,
        this.chartCanvas.height,
      );
    }
  }

  private exportLog(): void {
    const blob = new Blob([this.log.export()], { type: 'application/json' });
    const url = URL.createObjectURL(blob);
    const anchor = el('a', { href: url, download: 'fairing-actions.json' });
    anchor.click();
    URL.revokeObjectURL(url);
  }
}

const root = document.getElementById('app');
if (root) {
  const base = new URLSearchParams(window.location.search).get('server');
  new Workbench(root, base ?? 'http://127.0.0.1:8000');
}
