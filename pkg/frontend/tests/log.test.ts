import { readFileSync } from 'node:fs';
import { describe, expect, it } from 'vitest';
import type { History } from '../src/api.js';
import { ActionLog } from '../src/log.js';

describe('action log', () => {
  it('round-trips through export and parse', () => {
    const log = new ActionLog();
    log.recordCreate({ model: 'starfish', samples: 100, n: 34, base_omega: 0 });
    log.recordWeights({ ranges: [{ from: 4, to: 7, omega: 1e-5 }] });
    log.recordRun({ tol: 1e-6, max_iters: 200 });
    log.recordStep(3);
    log.recordKnots([0.25, 0.75]);

    const parsed = ActionLog.parse(log.export());
    expect(parsed.actions).toEqual(log.actions);
  });

  it('recording copies bodies instead of referencing them', () => {
    const log = new ActionLog();
    const body = { ranges: [{ from: 1, to: 2, omega: 0.1 }] };
    log.recordWeights(body);
    body.ranges[0].omega = 0.9;
    expect((log.actions[0].body.ranges as { omega: number }[])[0].omega).toBe(0.1);
  });

  it('rejects logs that do not start with a create', async () => {
    const log = new ActionLog();
    log.recordStep(1);
    await expect(log.replay(null as never)).rejects.toThrow(/start with a create/);
  });

  it('rejects malformed exports', () => {
    expect(() => ActionLog.parse('{"actions": "nope"}')).toThrow(/actions/);
    expect(() => ActionLog.parse('{"actions": [{"action": "fly", "body": {}}]}'))
      .toThrow(/unrecognized/);
  });

  it('rebuilds a replayable log from the server history', () => {
    const url = new URL('./fixtures/history.json', import.meta.url);
    const history = JSON.parse(readFileSync(url, 'utf8')) as History;
    const log = ActionLog.fromHistory(history);
    expect(log.actions.map((a) => a.action)).toEqual(['create', 'weights', 'run']);
    expect(log.actions[0].body).toEqual(history.history[0].body);
  });
});
