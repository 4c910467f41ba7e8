/**
 * Shared task/payload types and the client-side mirror of the service's
 * payload validation. Keeping the checks identical means the UI can never
 * produce a submission the service rejects on schema grounds.
 */

export const EMOTION_DIMENSIONS = [
  'anger',
  'anticipation',
  'disgust',
  'fear',
  'joy',
  'negative',
  'positive',
  'sadness',
  'surprise',
  'trust',
] as const;

export type EmotionDimension = (typeof EMOTION_DIMENSIONS)[number];

export type TaskKind = 'translation-validation' | 'emotion-annotation';

export interface TranslationTaskPayload {
  source_word: string;
  given_translation: string;
}

export interface EmotionTaskPayload {
  word: string;
}

export interface Task {
  id: string;
  kind: TaskKind;
  payload: TranslationTaskPayload & EmotionTaskPayload;
}

export interface EmotionPayload {
  labels: EmotionDimension[];
  wrong_word: boolean;
  better_expression: string | null;
}

export interface TranslationPayload {
  alternate_expressions: string[];
}

export type SubmissionPayload = EmotionPayload | TranslationPayload;

const DIMENSION_SET = new Set<string>(EMOTION_DIMENSIONS);

export type FieldErrors = Record<string, string>;

export function validateEmotionPayload(payload: EmotionPayload): FieldErrors {
  const errors: FieldErrors = {};
  if (!Array.isArray(payload.labels)) {
    errors.labels = 'must be a list of emotion names';
  } else {
    const bad = payload.labels.filter((l) => !DIMENSION_SET.has(l));
    if (bad.length > 0) {
      errors.labels = `unknown emotion labels: ${bad.join(', ')}`;
    } else if (new Set(payload.labels).size !== payload.labels.length) {
      errors.labels = 'duplicate labels';
    }
  }
  if (typeof payload.wrong_word !== 'boolean') {
    errors.wrong_word = 'must be a boolean';
  }
  if (payload.better_expression !== null && typeof payload.better_expression !== 'string') {
    errors.better_expression = 'must be a string or null';
  }
  return errors;
}

export function validateTranslationPayload(payload: TranslationPayload): FieldErrors {
  const errors: FieldErrors = {};
  const ok =
    Array.isArray(payload.alternate_expressions) &&
    payload.alternate_expressions.every((e) => typeof e === 'string' && e.trim() !== '');
  if (!ok) {
    errors.alternate_expressions = 'must be a list of non-empty strings';
  }
  return errors;
}

/**
 * Parse the free-text "Your answer" field into expressions. Annotators may
 * give several alternatives separated by commas (ASCII or fullwidth) or
 * semicolons; an empty field means they agree with the given translation.
 */
export function parseAnswerExpressions(raw: string): string[] {
  const out: string[] = [];
  for (const piece of raw.split(/[,，;；]/)) {
    const trimmed = piece.trim();
    if (trimmed !== '' && !out.includes(trimmed)) {
      out.push(trimmed);
    }
  }
  return out;
}
