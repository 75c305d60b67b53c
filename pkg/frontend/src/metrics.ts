// Metrics panel contents. The panel is a straight projection of snapshot
// fields: each row names the field it came from so contract tests can
// check the displayed value against the raw response.

import type { Snapshot } from './api.js';

export interface MetricRow {
  field: string; // dotted path into the snapshot
  label: string;
  value: number | string;
  text: string;
}

export function formatValue(value: number | string): string {
  if (typeof value === 'string') {
    return value;
  }
  if (Number.isInteger(value)) {
    return String(value);
  }
  const magnitude = Math.abs(value);
  if (magnitude !== 0 && (magnitude < 1e-3 || magnitude >= 1e6)) {
    return value.toExponential(4);
  }
  return value.toPrecision(6);
}

function row(field: string, label: string, value: number | string): MetricRow {
  return { field, label, value, text: formatValue(value) };
}

export function metricRows(snapshot: Snapshot): MetricRow[] {
  const m = snapshot.metrics;
  return [
    row('metrics.k', 'iteration', m.k),
    row('round', 'round', snapshot.round),
    row('status', 'status', snapshot.status),
    row('n', 'control points', snapshot.n),
    row('metrics.fit_abs', 'fitting error', m.fit_abs),
    row('metrics.fit_rel', 'fitting error (rel)', m.fit_rel),
    row('metrics.energy_abs', 'energy', m.energy_abs),
    row('metrics.energy_rel', 'energy (rel)', m.energy_rel),
    row('metrics.iter_rel', 'iterate movement (rel)', m.iter_rel),
    row('diagnostics.inf_norm', 'contraction norm', snapshot.diagnostics.inf_norm),
    row(
      'diagnostics.spectral_radius',
      'spectral radius',
      snapshot.diagnostics.spectral_radius,
    ),
  ];
}

/** True when the snapshot deserves the "may not contract" warning. */
export function contractionWarning(snapshot: Snapshot): boolean {
  return snapshot.diagnostics.inf_norm >= 1.0;
}

export function lookupField(snapshot: Snapshot, field: string): unknown {
  let value: unknown = snapshot;
  for (const part of field.split('.')) {
    value = (value as Record<string, unknown>)[part];
  }
  return value;
}

export function renderMetricsPanel(element: HTMLElement, snapshot: Snapshot): void {
  element.textContent = '';
  const table = document.createElement('table');
  table.className = 'metrics';
  for (const entry of metricRows(snapshot)) {
    const tr = document.createElement('tr');
    const name = document.createElement('td');
    name.textContent = entry.label;
    const value = document.createElement('td');
    value.textContent = entry.text;
    value.dataset.field = entry.field;
    tr.append(name, value);
    table.append(tr);
  }
  element.append(table);
  if (contractionWarning(snapshot)) {
    const warning = document.createElement('p');
    warning.className = 'warning';
    warning.textContent =
      'iteration matrix is not provably contractive (|I - ΛA|∞ ≥ 1)';
    element.append(warning);
  }
  if (snapshot.status === 'diverged') {
    const note = document.createElement('p');
    note.className = 'warning';
    note.textContent = `diverged: ${snapshot.reason ?? 'unknown reason'}`;
    element.append(note);
  }
}
