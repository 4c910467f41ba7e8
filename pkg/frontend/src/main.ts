/**
 * Flow controller: one task per screen, the server is the source of truth.
 * Refreshing the page resumes at the same pending task; the annotator id is
 * kept in session storage so it is entered once per browser session.
 */

import { ApiClient, ApiError, ValidationRejection } from './api.js';
import {
  validateEmotionPayload,
  validateTranslationPayload,
  type SubmissionPayload,
  type Task,
} from './schema.js';
import {
  readEmotionForm,
  readTranslationForm,
  renderDoneView,
  renderEmotionView,
  renderErrorBanner,
  renderLoginView,
  renderTranslationView,
  showFieldErrors,
} from './views.js';

const STORAGE_KEY = 'cantolex.annotator';

export class App {
  private annotatorId: string | null = null;
  private currentTask: Task | null = null;
  private submitting = false;
  private shortcutsBound = false;
  private pending: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly session: Storage,
  ) {}

  /** Resolves when no fetch/submit triggered by UI events is in flight. */
  whenIdle(): Promise<void> {
    return this.pending;
  }

  private track(work: Promise<void>): void {
    this.pending = this.pending.then(() => work).catch(() => {});
  }

  start(): Promise<void> {
    this.annotatorId = this.session.getItem(STORAGE_KEY);
    if (this.annotatorId) {
      const work = this.loadNext();
      this.track(work);
      return work;
    }
    this.renderLogin();
    return this.pending;
  }

  private renderLogin(): void {
    this.root.innerHTML = renderLoginView();
    const form = this.root.querySelector<HTMLFormElement>('#login-form')!;
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      const input = this.root.querySelector<HTMLInputElement>('#annotator-id')!;
      const id = input.value.trim();
      if (id === '') {
        return;
      }
      this.annotatorId = id;
      this.session.setItem(STORAGE_KEY, id);
      this.track(this.loadNext());
    });
  }

  private async loadNext(): Promise<void> {
    try {
      const task = await this.api.nextTask(this.annotatorId!);
      if (task === null) {
        const progress = await this.api.progress(this.annotatorId!);
        this.root.innerHTML = renderDoneView(progress);
        this.currentTask = null;
        return;
      }
      this.renderTask(task);
    } catch (error) {
      if (error instanceof ApiError && error.status === 404) {
        // unknown annotator: clear the stored id and ask again
        this.session.removeItem(STORAGE_KEY);
        this.renderLogin();
        return;
      }
      this.renderRetry(`Could not reach the annotation service: ${String(error)}`, () =>
        this.loadNext(),
      );
    }
  }

  private renderTask(task: Task): void {
    this.currentTask = task;
    this.root.innerHTML =
      task.kind === 'emotion-annotation' ? renderEmotionView(task) : renderTranslationView(task);
    const form = this.root.querySelector<HTMLFormElement>('#task-form')!;
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      this.track(this.submitCurrent());
    });
    if (task.kind === 'emotion-annotation') {
      this.bindShortcuts();
    }
  }

  /** Digit keys 1..9 and 0 toggle the ten emotion checkboxes. */
  private bindShortcuts(): void {
    if (this.shortcutsBound) {
      return; // one document-level handler; it queries the live view
    }
    this.shortcutsBound = true;
    this.root.ownerDocument.addEventListener('keydown', (event: KeyboardEvent) => {
      const target = event.target as HTMLElement | null;
      if (target && target.tagName === 'INPUT' && (target as HTMLInputElement).type === 'text') {
        return;
      }
      const box = this.root.querySelector<HTMLInputElement>(
        `input[name="label"][data-shortcut="${event.key}"]`,
      );
      if (box) {
        box.checked = !box.checked;
        event.preventDefault();
      }
    });
  }

  private async submitCurrent(): Promise<void> {
    if (this.submitting || this.currentTask === null) {
      return; // double-click guard: at most one in-flight submission
    }
    const task = this.currentTask;
    const payload: SubmissionPayload =
      task.kind === 'emotion-annotation'
        ? readEmotionForm(this.root)
        : readTranslationForm(this.root);
    const errors =
      task.kind === 'emotion-annotation'
        ? validateEmotionPayload(payload as never)
        : validateTranslationPayload(payload as never);
    if (Object.keys(errors).length > 0) {
      showFieldErrors(this.root, errors);
      return;
    }
    this.submitting = true;
    const button = this.root.querySelector<HTMLButtonElement>('#submit-button');
    if (button) {
      button.disabled = true;
    }
    try {
      await this.api.submit(this.annotatorId!, task.id, payload);
      await this.loadNext();
    } catch (error) {
      if (error instanceof ValidationRejection) {
        showFieldErrors(this.root, error.fields);
      } else {
        // keep the form and its state; offer a retry
        this.renderRetry(`Submission failed: ${String(error)}`, () => this.submitCurrent());
      }
      if (button) {
        button.disabled = false;
      }
    } finally {
      this.submitting = false;
    }
  }

  private renderRetry(message: string, action: () => Promise<void>): void {
    const existing = this.root.querySelector('[data-view="error-banner"]');
    if (existing) {
      existing.remove();
    }
    this.root.insertAdjacentHTML('afterbegin', renderErrorBanner(message));
    this.root.querySelector<HTMLButtonElement>('#retry-button')!.addEventListener('click', () => {
      this.root.querySelector('[data-view="error-banner"]')?.remove();
      this.track(action());
    });
  }
}

export function bootstrap(doc: Document, baseUrl = ''): App {
  const root = doc.getElementById('app');
  if (!root) {
    throw new Error('missing #app mount point');
  }
  const app = new App(root, new ApiClient(baseUrl), doc.defaultView!.sessionStorage);
  void app.start();
  return app;
}

declare global {
  interface Window {
    __CANTOLEX_TEST__?: boolean;
  }
}

if (typeof window !== 'undefined' && !window.__CANTOLEX_TEST__ && document.getElementById('app')) {
  bootstrap(document);
}
