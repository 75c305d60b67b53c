// Client-side action log: every session mutation the workbench issues is
// recorded so a whole round of interactive work can be exported and
// replayed against a fresh server. Replays are deterministic because the
// server applies the same actions to the same input.

import type {
  History,
  Snapshot,
  StopBody,
  WeightsBody,
  SessionClient,
} from './api.js';

export type ActionKind = 'create' | 'weights' | 'step' | 'run' | 'knots';

export interface Action {
  action: ActionKind;
  body: Record<string, unknown>;
}

const KINDS: readonly string[] = ['create', 'weights', 'step', 'run', 'knots'];

export class ActionLog {
  readonly actions: Action[] = [];

  record(action: ActionKind, body: Record<string, unknown>): void {
    this.actions.push({ action, body: structuredClone(body) });
  }

  recordCreate(body: Record<string, unknown>): void {
    this.record('create', body);
  }

  recordWeights(body: WeightsBody): void {
    this.record('weights', body as Record<string, unknown>);
  }

  recordStep(count: number): void {
    this.record('step', { count });
  }

  recordRun(stop: StopBody): void {
    this.record('run', stop as Record<string, unknown>);
  }

  recordKnots(values: number[]): void {
    this.record('knots', { values });
  }

  export(): string {
    return JSON.stringify({ version: 1, actions: this.actions }, null, 1);
  }

  static parse(text: string): ActionLog {
    const body = JSON.parse(text);
    if (!body || !Array.isArray(body.actions)) {
      throw new Error('action log must carry an "actions" array');
    }
    const log = new ActionLog();
    for (const entry of body.actions) {
      if (!entry || !KINDS.includes(entry.action) || typeof entry.body !== 'object') {
        throw new Error(`unrecognized action entry: ${JSON.stringify(entry)}`);
      }
      log.record(entry.action as ActionKind, entry.body);
    }
    return log;
  }

  /** The server's own history maps 1:1 onto a replayable log. */
  static fromHistory(history: History): ActionLog {
    const log = new ActionLog();
    for (const entry of history.history) {
      if (!KINDS.includes(entry.action)) {
        throw new Error(`history contains unreplayable action "${entry.action}"`);
      }
      log.record(entry.action as ActionKind, entry.body);
    }
    return log;
  }

  /**
   * Apply the log, in order, to a fresh session on the given server.
   * Runs are issued synchronously; the outcome does not depend on how the
   * original session waited for them.
   */
  async replay(client: SessionClient): Promise<Snapshot> {
    if (this.actions.length === 0 || this.actions[0].action !== 'create') {
      throw new Error('an action log must start with a create action');
    }
    let snapshot = await client.createSession(this.actions[0].body);
    for (const { action, body } of this.actions.slice(1)) {
      if (action === 'create') {
        throw new Error('only the first action may be a create');
      } else if (action === 'weights') {
        snapshot = await client.paintWeights(snapshot.id, body as WeightsBody);
      } else if (action === 'step') {
        snapshot = await client.step(snapshot.id, Number(body.count));
      } else if (action === 'run') {
        snapshot = await client.run(snapshot.id, body as StopBody);
      } else {
        snapshot = await client.insertKnots(snapshot.id, body.values as number[]);
      }
    }
    return snapshot;
  }
}
