"""Batch chat-completion annotation with strict response validation.

The two instruction texts are frozen byte-for-byte (golden files pin them);
a prompt is the instruction followed by the word list, one word per line.
Transports are pluggable: a live HTTP client for the usual chat-completion
endpoint shape, and a replay transport that serves canned responses keyed by
prompt digest for fully deterministic runs.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence

from .annotation import AnnotationRecord
from .lexicon import DIMENSION_SET

PROMPT_KINDS = ("translation", "emotion")

TRANSLATION_INSTRUCTION = (
    "As a native Cantonese speaker living in the United States, you are teaching the "
    "local people to speak Cantonese. I'll give you a list of English words. Please "
    "translate them into colloquial Cantonese expressions, and finally output them in "
    "JSON format, where the key is the original English word, and the value is the "
    "Cantonese word. Each word should be as concise as possible."
)

EMOTION_INSTRUCTION = (
    "As an expert in understanding Cantonese texts, you can recognize Cantonese words "
    "with distinct emotions and describe them with the following basic emotions: anger, "
    "anticipation, disgust, fear, joy, negative, positive, sadness, surprise, trust. I "
    "will give you a vocabulary list, and some of these words are just neutral while "
    "some can have more than one type of emotions. Please identify the words that have "
    "very distinct and clear emotions, and output in JSON format, where the key is the "
    "word, and the value is the list of emotions that the word has."
)

INSTRUCTIONS = {"translation": TRANSLATION_INSTRUCTION, "emotion": EMOTION_INSTRUCTION}

DEFAULT_BATCH_CAP = 50
DEFAULT_LLM_RATER_ID = "llm"

RECORD_KIND = {
    "translation": "translation-validation",
    "emotion": "emotion-annotation",
}


class LlmError(RuntimeError):
    pass


class TransportError(LlmError):
    """The transport could not produce a response."""


def build_prompt(kind: str, words: Sequence[str], batch_cap: int = DEFAULT_BATCH_CAP) -> str:
    """Instruction text followed by the words, one per line; byte-deterministic."""
    if kind not in PROMPT_KINDS:
        raise LlmError(f"unknown prompt kind {kind!r}")
    if not words:
        raise LlmError("cannot build a prompt for an empty word list")
    if len(words) > batch_cap:
        raise LlmError(f"batch of {len(words)} words exceeds the cap of {batch_cap}")
    return INSTRUCTIONS[kind] + "\n\n" + "\n".join(words)


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass
class GenerationParams:
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    max_tokens: Optional[int] = None


class CompletionTransport(Protocol):
    def send(self, prompt: str, params: GenerationParams) -> str: ...


class ReplayTransport:
    """Serves canned responses keyed by prompt digest; fully deterministic.

    The fixture file is a JSON object mapping sha256(prompt) to either a
    response string or a list of response strings consumed in order (the last
    repeats), which lets fixtures script a malformed reply followed by a
    clean retry.
    """

    def __init__(self, fixtures: dict[str, str | list[str]]):
        self._fixtures = dict(fixtures)
        self._cursor: dict[str, int] = {}
        self._lock = threading.Lock()

    @classmethod
    def load(cls, path: str | Path) -> "ReplayTransport":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def send(self, prompt: str, params: GenerationParams) -> str:
        digest = prompt_digest(prompt)
        entry = self._fixtures.get(digest)
        if entry is None:
            raise TransportError(f"no replay fixture for prompt digest {digest[:12]}…")
        if isinstance(entry, str):
            return entry
        with self._lock:
            index = self._cursor.get(digest, 0)
            self._cursor[digest] = index + 1
        return entry[min(index, len(entry) - 1)]


class HttpTransport:
    """Minimal client for the common chat-completion HTTP+JSON shape.

    The API key is read from an environment variable; requests are spaced to
    honor a requests-per-minute budget and share a lock so the transport is
    safe for concurrent callers.
    """

    def __init__(
        self,
        base_url: str,
        api_key_env: str = "LLM_API_KEY",
        timeout: float = 60.0,
        requests_per_minute: float = 60.0,
    ):
        import os

        self.base_url = base_url.rstrip("/")
        self.api_key = os.environ.get(api_key_env, "")
        self.timeout = timeout
        self._min_interval = 60.0 / requests_per_minute if requests_per_minute > 0 else 0.0
        self._last_request = 0.0
        self._lock = threading.Lock()

    def send(self, prompt: str, params: GenerationParams) -> str:
        body = {
            "model": params.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
        }
        if params.max_tokens is not None:
            body["max_tokens"] = params.max_tokens
        request = urllib.request.Request(
            f"{self.base_url}/chat/completions",
            data=json.dumps(body).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
            method="POST",
        )
        with self._lock:
            wait = self._min_interval - (time.monotonic() - self._last_request)
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as response:
                payload = json.loads(response.read().decode("utf-8"))
        except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as exc:
            raise TransportError(f"completion request failed: {exc}") from exc
        try:
            return payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"unexpected completion payload shape: {exc}") from exc


@dataclass
class ValidationOutcome:
    accepted: dict[str, object] = field(default_factory=dict)
    rejected_words: list[tuple[str, str]] = field(default_factory=list)
    unexpected_keys: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    malformed: bool = False


def _largest_json_object(text: str) -> Optional[dict]:
    """The largest decodable JSON object embedded anywhere in the text.

    Chat models habitually wrap JSON in prose, so candidates are tried at
    every opening brace and ranked by character span.
    """
    decoder = json.JSONDecoder()
    best = None
    best_span = -1
    for start, ch in enumerate(text):
        if ch != "{":
            continue
        try:
            obj, end = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict) and end - start > best_span:
            best = obj
            best_span = end - start
    return best


def validate_response(kind: str, requested: Sequence[str], response: str) -> ValidationOutcome:
    """Check a raw response against the requested batch; never raises.

    Keys outside the batch are set aside (the model is known to volunteer
    proper nouns and such). Emotion values are filtered to the closed label
    set and rejected when nothing survives; translation values must be a
    non-empty string or a list of them.
    """
    if kind not in PROMPT_KINDS:
        raise LlmError(f"unknown prompt kind {kind!r}")
    outcome = ValidationOutcome()
    obj = _largest_json_object(response)
    if obj is None:
        outcome.malformed = True
        return outcome
    requested_set = set(requested)
    for key, value in obj.items():
        if key not in requested_set:
            outcome.unexpected_keys.append(key)
            continue
        if kind == "emotion":
            raw = [value] if isinstance(value, str) else value
            if not isinstance(raw, list) or not all(isinstance(v, str) for v in raw):
                outcome.rejected_words.append((key, "value is not a list of emotion names"))
                continue
            labels = {v for v in raw if v in DIMENSION_SET}
            dropped = [v for v in raw if v not in DIMENSION_SET]
            for bad in dropped:
                outcome.notes.append(f"{key}: dropped unknown label {bad!r}")
            if not labels:
                outcome.rejected_words.append((key, "no valid emotion labels"))
                continue
            outcome.accepted[key] = frozenset(labels)
        else:
            raw = [value] if isinstance(value, str) else value
            if (
                not isinstance(raw, list)
                or not raw
                or not all(isinstance(v, str) and v for v in raw)
            ):
                outcome.rejected_words.append((key, "value is not a non-empty expression"))
                continue
            expressions = []
            for expr in raw:
                if expr not in expressions:
                    expressions.append(expr)
            outcome.accepted[key] = expressions
    return outcome


@dataclass
class BatchLog:
    batch_index: int
    words: list[str]
    attempts: int
    outcome: ValidationOutcome
    failed: bool = False


@dataclass
class AnnotationRun:
    records: list[AnnotationRecord]
    accepted: dict[str, object]
    rejected: dict[str, str]
    unannotated: list[str]
    logs: list[BatchLog]

    def report(self) -> dict:
        return {
            "accepted": len(self.accepted),
            "rejected": {w: reason for w, reason in sorted(self.rejected.items())},
            "unannotated": sorted(self.unannotated),
            "batches": len(self.logs),
            "retries": sum(log.attempts - 1 for log in self.logs),
            "failed_batches": sum(1 for log in self.logs if log.failed),
        }


def _chunk(words: Sequence[str], size: int) -> list[list[str]]:
    return [list(words[i : i + size]) for i in range(0, len(words), size)]


def annotate_batch(
    transport: CompletionTransport,
    kind: str,
    words: Sequence[str],
    retries: int = 2,
    batch_cap: int = DEFAULT_BATCH_CAP,
    params: Optional[GenerationParams] = None,
    rater_id: str = DEFAULT_LLM_RATER_ID,
    task_ids: Optional[dict[str, str]] = None,
    concurrency: int = 1,
) -> AnnotationRun:
    """Annotate a word list in capped batches and validate every response.

    Malformed responses are re-sent up to ``retries`` times; words that got no
    verdict at all are re-queued once in fresh batches. Records are emitted in
    input word order regardless of completion order, attributed to the single
    LLM rater id; each word's task id defaults to the word itself. Accepted,
    rejected, and unannotated words always partition the request.
    """
    if not words:
        raise LlmError("no words to annotate")
    if kind not in PROMPT_KINDS:
        raise LlmError(f"unknown prompt kind {kind!r}")
    if len(set(words)) != len(words):
        raise LlmError("word list contains duplicates")
    params = params or GenerationParams()

    accepted: dict[str, object] = {}
    rejected: dict[str, str] = {}
    logs: list[BatchLog] = []

    def run_round(pending: list[str], base_index: int) -> list[str]:
        batches = _chunk(pending, batch_cap)

        def process(item: tuple[int, list[str]]) -> BatchLog:
            index, batch = item
            prompt = build_prompt(kind, batch, batch_cap)
            attempts = 0
            outcome = ValidationOutcome(malformed=True)
            while attempts <= retries:
                attempts += 1
                try:
                    response = transport.send(prompt, params)
                except TransportError:
                    if attempts > retries:
                        return BatchLog(index, batch, attempts, outcome, failed=True)
                    continue
                outcome = validate_response(kind, batch, response)
                if not outcome.malformed:
                    return BatchLog(index, batch, attempts, outcome)
            return BatchLog(index, batch, attempts, outcome, failed=True)

        items = list(enumerate(batches, start=base_index))
        if concurrency > 1 and len(items) > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                round_logs = list(pool.map(process, items))
        else:
            round_logs = [process(item) for item in items]

        missing: list[str] = []
        for batch_log in sorted(round_logs, key=lambda l: l.batch_index):
            logs.append(batch_log)
            for word, payload in batch_log.outcome.accepted.items():
                accepted.setdefault(word, payload)
            for word, reason in batch_log.outcome.rejected_words:
                rejected.setdefault(word, reason)
            for word in batch_log.words:
                if word not in accepted and word not in rejected:
                    missing.append(word)
        return missing

    missing = run_round(list(words), base_index=0)
    if missing:
        missing = run_round(missing, base_index=len(logs))

    if logs and all(log.failed for log in logs):
        raise LlmError("every batch failed after retries")

    records = []
    for word in words:
        if word not in accepted:
            continue
        payload = accepted[word]
        if kind == "emotion":
            response = {
                "labels": sorted(payload),
                "wrong_word": False,
                "better_expression": None,
            }
        else:
            response = {"alternate_expressions": list(payload)}
        records.append(
            AnnotationRecord(
                annotator_id=rater_id,
                task_id=(task_ids or {}).get(word, word),
                kind=RECORD_KIND[kind],
                response=response,
            )
        )
    unannotated = [w for w in words if w not in accepted and w not in rejected]
    return AnnotationRun(
        records=records,
        accepted=accepted,
        rejected=rejected,
        unannotated=unannotated,
        logs=logs,
    )
