/**
 * View rendering for the two task screens, the login view, and the done
 * screen. Views are plain HTML strings; the flow controller injects them and
 * wires events.
 */

import { EMOTION_DIMENSIONS, type EmotionPayload, type Task, type TranslationPayload } from './schema.js';
import { parseAnswerExpressions } from './schema.js';
import type { ProgressCounts } from './api.js';

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function renderLoginView(): string {
  return `
    <section class="card" data-view="login">
      <h1>Annotation</h1>
      <p>Enter the annotator ID you were given to start or resume your task list.</p>
      <form id="login-form">
        <label for="annotator-id">Annotator ID</label>
        <input id="annotator-id" name="annotator-id" autocomplete="off" required />
        <button type="submit" id="login-button">Start</button>
      </form>
    </section>`;
}

export function renderTranslationView(task: Task): string {
  const { source_word, given_translation } = task.payload;
  return `
    <section class="card" data-view="translation" data-task-id="${escapeHtml(task.id)}">
      <h2 class="source-word">${escapeHtml(source_word)}</h2>
      <p class="given-translation">Translation: <strong>${escapeHtml(given_translation)}</strong></p>
      <form id="task-form">
        <label for="your-answer">Your answer</label>
        <input id="your-answer" name="your-answer" autocomplete="off"
               placeholder="Leave empty if the translation is fine" />
        <p class="hint">Separate several expressions with commas.</p>
        <div class="field-error" data-field="alternate_expressions"></div>
        <button type="submit" id="submit-button">Next</button>
      </form>
    </section>`;
}

export function renderEmotionView(task: Task): string {
  const checkboxes = EMOTION_DIMENSIONS.map(
    (dim, index) => `
        <label class="dimension">
          <input type="checkbox" name="label" value="${dim}" data-shortcut="${(index + 1) % 10}" />
          ${dim}
        </label>`,
  ).join('');
  return `
    <section class="card" data-view="emotion" data-task-id="${escapeHtml(task.id)}">
      <h2 class="word">${escapeHtml(task.payload.word)}</h2>
      <form id="task-form">
        <fieldset id="labels">
          <legend>Emotions</legend>
          ${checkboxes}
        </fieldset>
        <div class="field-error" data-field="labels"></div>
        <label class="wrong-word">
          <input type="checkbox" name="wrong-word" id="wrong-word" />
          Wrong word
        </label>
        <div class="field-error" data-field="wrong_word"></div>
        <label for="better-expression">Better colloquial expression</label>
        <input id="better-expression" name="better-expression" autocomplete="off" />
        <div class="field-error" data-field="better_expression"></div>
        <button type="submit" id="submit-button">Submit</button>
      </form>
    </section>`;
}

export function renderDoneView(progress: ProgressCounts): string {
  return `
    <section class="card" data-view="done">
      <h2>All done</h2>
      <p>You have submitted <strong>${progress.submitted}</strong> annotations.
         Nothing is pending. Thank you!</p>
    </section>`;
}

export function renderErrorBanner(message: string): string {
  return `
    <div class="banner error" data-view="error-banner">
      <span>${escapeHtml(message)}</span>
      <button id="retry-button">Retry</button>
    </div>`;
}

export function readEmotionForm(root: ParentNode): EmotionPayload {
  const labels = Array.from(
    root.querySelectorAll<HTMLInputElement>('input[name="label"]:checked'),
  ).map((input) => input.value) as EmotionPayload['labels'];
  const wrongWord = root.querySelector<HTMLInputElement>('#wrong-word')?.checked ?? false;
  const better = root.querySelector<HTMLInputElement>('#better-expression')?.value.trim() ?? '';
  return {
    labels,
    wrong_word: wrongWord,
    better_expression: better === '' ? null : better,
  };
}

export function readTranslationForm(root: ParentNode): TranslationPayload {
  const raw = root.querySelector<HTMLInputElement>('#your-answer')?.value ?? '';
  return { alternate_expressions: parseAnswerExpressions(raw) };
}

export function showFieldErrors(root: ParentNode, fields: Record<string, string>): void {
  for (const slot of root.querySelectorAll<HTMLElement>('.field-error')) {
    const field = slot.dataset.field ?? '';
    slot.textContent = fields[field] ?? '';
  }
}
