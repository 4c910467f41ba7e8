"""HTTP service that serves assigned tasks and records submissions durably.

State is a pure fold of an append-only NDJSON journal: every acknowledged
submission is one journal line, appends are serialized through a single
writer lock and fsynced before the acknowledgment is sent, and a restart
replays the journal to reproduce identical behavior. Task serving is strictly
sequential within each annotator's assigned portion.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
import urllib.parse
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .annotation import AnnotationRecord, Task, records_to_jsonl
from .lexicon import DIMENSION_SET

log = logging.getLogger(__name__)

ADMIN_TOKEN_ENV = "CANTOLEX_ADMIN_TOKEN"


class ServiceError(Exception):
    pass


class UnknownAnnotatorError(ServiceError):
    pass


class NotAssignedError(ServiceError):
    pass


class PayloadError(ServiceError):
    def __init__(self, errors: dict[str, str]):
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(errors.items())))
        self.errors = errors


def validate_payload(kind: str, payload: object) -> dict:
    """Schema-check a submission payload, returning its normalized form.

    Field-level problems are collected into a PayloadError so the client can
    render them next to the offending inputs.
    """
    errors: dict[str, str] = {}
    if not isinstance(payload, dict):
        raise PayloadError({"payload": "must be an object"})
    if kind == "emotion-annotation":
        allowed = {"labels", "wrong_word", "better_expression"}
        for key in payload.keys() - allowed:
            errors[key] = "unknown field"
        labels = payload.get("labels", [])
        if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
            errors["labels"] = "must be a list of emotion names"
        else:
            bad = [l for l in labels if l not in DIMENSION_SET]
            if bad:
                errors["labels"] = f"unknown emotion labels: {bad}"
            elif len(set(labels)) != len(labels):
                errors["labels"] = "duplicate labels"
        wrong = payload.get("wrong_word", False)
        if not isinstance(wrong, bool):
            errors["wrong_word"] = "must be a boolean"
        better = payload.get("better_expression")
        if better is not None and not isinstance(better, str):
            errors["better_expression"] = "must be a string or null"
        if errors:
            raise PayloadError(errors)
        return {
            "labels": sorted(set(labels)),
            "wrong_word": wrong,
            "better_expression": better if better else None,
        }
    # translation-validation: an empty expression list means agreement
    allowed = {"alternate_expressions"}
    for key in payload.keys() - allowed:
        errors[key] = "unknown field"
    expressions = payload.get("alternate_expressions", [])
    if not isinstance(expressions, list) or not all(
        isinstance(e, str) and e.strip() for e in expressions
    ):
        errors["alternate_expressions"] = "must be a list of non-empty strings"
    if errors:
        raise PayloadError(errors)
    deduped = []
    for expr in expressions:
        if expr not in deduped:
            deduped.append(expr)
    return {"alternate_expressions": deduped}


class SessionStore:
    """Assignment-aware task queue folded from the submission journal."""

    def __init__(
        self,
        tasks: dict[str, Task],
        assignments: dict[str, list[str]],
        journal_path: str | Path,
    ):
        for annotator, task_ids in assignments.items():
            for task_id in task_ids:
                if task_id not in tasks:
                    raise ServiceError(
                        f"assignment for {annotator!r} references unknown task {task_id!r}"
                    )
        self.tasks = dict(tasks)
        self.assignments = {a: list(ts) for a, ts in assignments.items()}
        self.journal_path = Path(journal_path)
        self._lock = threading.Lock()
        # latest submission per (annotator, task); journal keeps every version
        self._latest: dict[tuple[str, str], dict] = {}
        self._journal_file = None
        self._replay()
        self._journal_file = open(self.journal_path, "a", encoding="utf-8")

    def _replay(self) -> None:
        if not self.journal_path.exists():
            return
        with open(self.journal_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    key = (entry["annotator_id"], entry["task_id"])
                    payload = entry["payload"]
                except (json.JSONDecodeError, KeyError, TypeError):
                    # torn tail from a crash mid-append; everything before it
                    # was acknowledged and is intact
                    log.warning(
                        "journal %s:%d: skipping unparseable entry", self.journal_path, line_no
                    )
                    continue
                self._latest[key] = payload

    def close(self) -> None:
        if self._journal_file is not None:
            self._journal_file.close()
            self._journal_file = None

    def _portion(self, annotator_id: str) -> list[str]:
        try:
            return self.assignments[annotator_id]
        except KeyError:
            raise UnknownAnnotatorError(f"unknown annotator {annotator_id!r}") from None

    def next_task(self, annotator_id: str) -> Optional[Task]:
        """Lowest-indexed unsubmitted task of the annotator's portion, or None."""
        with self._lock:
            for task_id in self._portion(annotator_id):
                if (annotator_id, task_id) not in self._latest:
                    return self.tasks[task_id]
        return None

    def submit(self, annotator_id: str, task_id: str, payload: object) -> dict:
        """Validate, append to the journal, and acknowledge once durable."""
        with self._lock:
            portion = self._portion(annotator_id)
            if task_id not in portion:
                raise NotAssignedError(
                    f"task {task_id!r} is not assigned to annotator {annotator_id!r}"
                )
            normalized = validate_payload(self.tasks[task_id].kind, payload)
            entry = {
                "ts": time.time(),
                "annotator_id": annotator_id,
                "task_id": task_id,
                "payload": normalized,
            }
            self._journal_file.write(json.dumps(entry, ensure_ascii=False, sort_keys=True) + "\n")
            self._journal_file.flush()
            os.fsync(self._journal_file.fileno())
            self._latest[(annotator_id, task_id)] = normalized
        return {"status": "ok", "annotator_id": annotator_id, "task_id": task_id}

    def progress(self, annotator_id: Optional[str] = None) -> dict:
        with self._lock:
            if annotator_id is not None:
                portion = self._portion(annotator_id)
                submitted = sum(1 for t in portion if (annotator_id, t) in self._latest)
                return {"submitted": submitted, "pending": len(portion) - submitted}
            per_annotator = {}
            total_submitted = 0
            total_pending = 0
            for annotator in sorted(self.assignments):
                portion = self.assignments[annotator]
                submitted = sum(1 for t in portion if (annotator, t) in self._latest)
                per_annotator[annotator] = {
                    "submitted": submitted,
                    "pending": len(portion) - submitted,
                }
                total_submitted += submitted
                total_pending += len(portion) - submitted
            return {
                "annotators": per_annotator,
                "total": {"submitted": total_submitted, "pending": total_pending},
            }

    def export_records(self) -> list[AnnotationRecord]:
        """Latest submission per (annotator, task), deterministically ordered."""
        with self._lock:
            items = sorted(self._latest.items())
        return [
            AnnotationRecord(
                annotator_id=annotator_id,
                task_id=task_id,
                kind=self.tasks[task_id].kind,
                response=payload,
            )
            for (annotator_id, task_id), payload in items
        ]

    def export_to_file(self, path: str | Path) -> int:
        records = self.export_records()
        records_to_jsonl(records, path)
        return len(records)


def load_assignment_manifest(path: str | Path) -> dict[str, list[str]]:
    """Flatten a manifest of {portion_index, group, annotator_id, task_ids}
    rows into annotator -> ordered task id list."""
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    assignments: dict[str, list[str]] = {}
    for row in rows:
        annotator = row["annotator_id"]
        if annotator in assignments:
            raise ServiceError(f"annotator {annotator!r} appears in multiple manifest rows")
        assignments[annotator] = list(row["task_ids"])
    return assignments


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    store: SessionStore
    static_dir: Optional[Path] = None
    admin_token: Optional[str] = None

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, obj: object) -> None:
        body = json.dumps(obj, ensure_ascii=False, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        parsed = urllib.parse.urlparse(self.path)
        query = urllib.parse.parse_qs(parsed.query)
        if parsed.path == "/api/tasks/next":
            annotator = query.get("annotator_id", [""])[0]
            if not annotator:
                self._send_json(400, {"error": "annotator_id query parameter required"})
                return
            try:
                task = self.store.next_task(annotator)
            except UnknownAnnotatorError as exc:
                self._send_json(404, {"error": str(exc)})
                return
            if task is None:
                self.send_response(204)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            self._send_json(200, task.to_dict())
        elif parsed.path == "/api/progress":
            annotator = query.get("annotator_id", [None])[0]
            try:
                self._send_json(200, self.store.progress(annotator))
            except UnknownAnnotatorError as exc:
                self._send_json(404, {"error": str(exc)})
        elif parsed.path == "/api/export":
            token = self.headers.get("X-Admin-Token", "")
            if not self.admin_token or token != self.admin_token:
                self._send_json(403, {"error": "admin token required"})
                return
            lines = "".join(
                json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n"
                for r in self.store.export_records()
            )
            body = lines.encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/x-ndjson; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)
        else:
            self._serve_static(parsed.path)

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_json(404, {"error": "not found"})
            return
        name = path.lstrip("/") or "index.html"
        target = (self.static_dir / name).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": "not found"})
            return
        content_type = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".json": "application/json; charset=utf-8",
        }.get(target.suffix, "application/octet-stream")
        body = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:
        parsed = urllib.parse.urlparse(self.path)
        if parsed.path != "/api/annotations":
            self._send_json(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._send_json(400, {"error": "request body is not valid JSON"})
            return
        annotator = body.get("annotator_id", "")
        task_id = body.get("task_id", "")
        payload = body.get("payload")
        if self.store.tasks.get(task_id) is None:
            self._send_json(404, {"error": f"unknown task {task_id!r}"})
            return
        try:
            ack = self.store.submit(annotator, task_id, payload)
        except UnknownAnnotatorError as exc:
            self._send_json(404, {"error": str(exc)})
        except NotAssignedError as exc:
            self._send_json(403, {"error": str(exc)})
        except PayloadError as exc:
            self._send_json(422, {"error": "payload failed validation", "fields": exc.errors})
        else:
            self._send_json(200, ack)


def make_server(
    store: SessionStore,
    host: str = "127.0.0.1",
    port: int = 0,
    static_dir: Optional[str | Path] = None,
    admin_token: Optional[str] = None,
) -> ThreadingHTTPServer:
    """Build the threaded HTTP server; port 0 picks a free port."""
    handler = type(
        "BoundHandler",
        (_Handler,),
        {
            "store": store,
            "static_dir": Path(static_dir) if static_dir else None,
            "admin_token": admin_token
            if admin_token is not None
            else os.environ.get(ADMIN_TOKEN_ENV),
        },
    )
    return ThreadingHTTPServer((host, port), handler)
