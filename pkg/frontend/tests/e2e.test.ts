/**
 * End-to-end session against the real annotation service: the Python server
 * is spawned with a three-task fixture and the UI is driven through DOM
 * events only (type, tick, click), finishing on the done screen. The journal
 * export is then checked over the admin endpoint.
 */

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { bootstrap, type App } from '../src/main.js';

const ANNOTATOR = 'e2e-annotator';
const ADMIN_TOKEN = 'e2e-admin-token';

const TASKS = [
  { id: 'em-00001', kind: 'emotion-annotation', payload: { word: '開心' } },
  { id: 'em-00002', kind: 'emotion-annotation', payload: { word: '麻麻地' } },
  {
    id: 'tr-00001',
    kind: 'translation-validation',
    payload: { source_word: 'pretty', given_translation: '漂亮' },
  },
];

let proc: ChildProcess;
let baseUrl: string;
let app: App;

function startService(): Promise<string> {
  const dir = mkdtempSync(join(tmpdir(), 'cantolex-e2e-'));
  writeFileSync(
    join(dir, 'tasks.jsonl'),
    TASKS.map((t) => JSON.stringify(t)).join('\n') + '\n',
  );
  writeFileSync(
    join(dir, 'assignments.json'),
    JSON.stringify([
      {
        portion_index: 0,
        group: 'A',
        annotator_id: ANNOTATOR,
        task_ids: TASKS.map((t) => t.id),
      },
    ]),
  );
  proc = spawn(
    'python3',
    [
      '-m', 'cantolex.cli', 'serve',
      '--tasks', join(dir, 'tasks.jsonl'),
      '--assignments', join(dir, 'assignments.json'),
      '--journal', join(dir, 'journal.ndjson'),
      '--host', '127.0.0.1',
      '--port', '0',
    ],
    { env: { ...process.env, CANTOLEX_ADMIN_TOKEN: ADMIN_TOKEN } },
  );
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error('service did not start')), 15000);
    let buffer = '';
    proc.stdout!.on('data', (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    proc.stderr!.on('data', () => {});
    proc.on('exit', (code) => {
      clearTimeout(timer);
      reject(new Error(`service exited early with code ${code}`));
    });
  });
}

function view(): string {
  return document.querySelector('[data-view]')!.getAttribute('data-view')!;
}

function submitForm(id: string): void {
  document
    .querySelector<HTMLFormElement>(id)!
    .dispatchEvent(new Event('submit', { bubbles: true, cancelable: true }));
}

beforeAll(async () => {
  baseUrl = await startService();
  window.__CANTOLEX_TEST__ = true;
  document.body.innerHTML = '<main id="app"></main>';
  app = bootstrap(document, baseUrl);
  await app.whenIdle();
});

afterAll(() => {
  proc?.kill();
});

describe('three-task session', () => {
  it('asks for the annotator id first', () => {
    expect(view()).toBe('login');
  });

  it('logs in and shows the first emotion task', async () => {
    document.querySelector<HTMLInputElement>('#annotator-id')!.value = ANNOTATOR;
    submitForm('#login-form');
    await app.whenIdle();
    expect(view()).toBe('emotion');
    expect(document.querySelector('.word')!.textContent).toBe('開心');
  });

  it('submits labels for the first word', async () => {
    for (const value of ['joy', 'positive']) {
      document.querySelector<HTMLInputElement>(`input[value="${value}"]`)!.checked = true;
    }
    submitForm('#task-form');
    await app.whenIdle();
    expect(view()).toBe('emotion');
    expect(document.querySelector('.word')!.textContent).toBe('麻麻地');
  });

  it('a double submit advances exactly one task', async () => {
    document.querySelector<HTMLInputElement>('#wrong-word')!.checked = true;
    document.querySelector<HTMLInputElement>('#better-expression')!.value = '一般般';
    submitForm('#task-form');
    submitForm('#task-form'); // second click while in flight is ignored
    await app.whenIdle();
    expect(view()).toBe('translation');
    expect(document.querySelector('.source-word')!.textContent).toBe('pretty');
  });

  it('submits the translation answer and reaches the done screen', async () => {
    document.querySelector<HTMLInputElement>('#your-answer')!.value = '靚，正';
    submitForm('#task-form');
    await app.whenIdle();
    expect(view()).toBe('done');
    expect(document.body.textContent).toContain('3');
  });

  it('resuming with the stored id stays on the done screen', async () => {
    document.body.innerHTML = '<main id="app"></main>';
    const resumed = bootstrap(document, baseUrl);
    await resumed.whenIdle();
    expect(view()).toBe('done');
  });

  it('the journal export holds the three submitted records', async () => {
    const response = await fetch(`${baseUrl}/api/export`, {
      headers: { 'X-Admin-Token': ADMIN_TOKEN },
    });
    expect(response.status).toBe(200);
    const lines = (await response.text()).trim().split('\n').map((l) => JSON.parse(l));
    expect(lines).toHaveLength(3);
    const byTask = Object.fromEntries(lines.map((r) => [r.task_id, r]));
    expect(byTask['em-00001'].response.labels).toEqual(['joy', 'positive']);
    expect(byTask['em-00002'].response).toEqual({
      labels: [],
      wrong_word: true,
      better_expression: '一般般',
    });
    expect(byTask['tr-00001'].response.alternate_expressions).toEqual(['靚', '正']);
  });
});
