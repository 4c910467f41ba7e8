/** Typed client for the annotation service HTTP+JSON API. */

import type { FieldErrors, SubmissionPayload, Task } from './schema.js';

export interface ProgressCounts {
  submitted: number;
  pending: number;
}

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

/** 422 from the service: per-field validation messages. */
export class ValidationRejection extends ApiError {
  constructor(
    message: string,
    public readonly fields: FieldErrors,
  ) {
    super(message, 422);
    this.name = 'ValidationRejection';
  }
}

async function errorMessage(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { error?: string };
    return body.error ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = '') {}

  /** Next pending task for the annotator, or null when the portion is done. */
  async nextTask(annotatorId: string): Promise<Task | null> {
    const response = await fetch(
      `${this.baseUrl}/api/tasks/next?annotator_id=${encodeURIComponent(annotatorId)}`,
    );
    if (response.status === 204) {
      return null;
    }
    if (!response.ok) {
      throw new ApiError(await errorMessage(response), response.status);
    }
    return (await response.json()) as Task;
  }

  async submit(annotatorId: string, taskId: string, payload: SubmissionPayload): Promise<void> {
    const response = await fetch(`${this.baseUrl}/api/annotations`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ annotator_id: annotatorId, task_id: taskId, payload }),
    });
    if (response.status === 422) {
      const body = (await response.json()) as { error: string; fields: FieldErrors };
      throw new ValidationRejection(body.error, body.fields);
    }
    if (!response.ok) {
      throw new ApiError(await errorMessage(response), response.status);
    }
  }

  async progress(annotatorId: string): Promise<ProgressCounts> {
    const response = await fetch(
      `${this.baseUrl}/api/progress?annotator_id=${encodeURIComponent(annotatorId)}`,
    );
    if (!response.ok) {
      throw new ApiError(await errorMessage(response), response.status);
    }
    return (await response.json()) as ProgressCounts;
  }
}
