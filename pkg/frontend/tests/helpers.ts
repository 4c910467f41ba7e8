/** Re-exports plus small glue shared by the test files. */

import {
  validateEmotionPayload,
  validateTranslationPayload,
  type EmotionPayload,
  type FieldErrors,
  type SubmissionPayload,
  type TaskKind,
  type TranslationPayload,
} from '../src/schema.js';

export {
  readEmotionForm,
  readTranslationForm,
  renderDoneView,
  renderEmotionView,
  renderLoginView,
  renderTranslationView,
} from '../src/views.js';

export function validatePayloadsMatch(kind: TaskKind, payload: SubmissionPayload): FieldErrors {
  return kind === 'emotion-annotation'
    ? validateEmotionPayload(payload as EmotionPayload)
    : validateTranslationPayload(payload as TranslationPayload);
}
