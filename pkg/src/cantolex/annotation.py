"""Annotation task management and multi-rater label aggregation.

Covers the word-list side of the pipeline: splitting items into portions for
annotator groups, sampling the subset sent to humans, majority-vote label
aggregation, and selecting the most consistent annotator trio from a demo
round.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, TypeVar

from .fileio import read_ndjson, write_ndjson
from .lexicon import DIMENSION_SET
from .reliability import (
    DegenerateDataError,
    build_reliability_matrix,
    krippendorff_alpha,
)

T = TypeVar("T")

TASK_KINDS = ("translation-validation", "emotion-annotation")


class AnnotationError(ValueError):
    pass


@dataclass(frozen=True)
class Task:
    id: str
    kind: str
    payload: dict

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise AnnotationError(f"unknown task kind {self.kind!r}")
        required = (
            ("source_word", "given_translation")
            if self.kind == "translation-validation"
            else ("word",)
        )
        for key in required:
            if not self.payload.get(key):
                raise AnnotationError(f"task {self.id!r}: payload field {key!r} missing or empty")

    @property
    def word(self) -> str:
        if self.kind == "emotion-annotation":
            return self.payload["word"]
        return self.payload["source_word"]

    def to_dict(self) -> dict:
        return {"id": self.id, "kind": self.kind, "payload": self.payload}

    @classmethod
    def from_dict(cls, obj: dict) -> "Task":
        return cls(id=obj["id"], kind=obj["kind"], payload=obj["payload"])


@dataclass(frozen=True)
class AnnotationRecord:
    annotator_id: str
    task_id: str
    kind: str
    response: dict

    def __post_init__(self) -> None:
        if self.kind not in TASK_KINDS:
            raise AnnotationError(f"unknown record kind {self.kind!r}")
        if self.kind == "emotion-annotation":
            labels = set(self.response.get("labels", ()))
            bad = labels - DIMENSION_SET
            if bad:
                raise AnnotationError(f"labels outside the emotion dimension set: {sorted(bad)}")

    def to_dict(self) -> dict:
        response = dict(self.response)
        if self.kind == "emotion-annotation":
            response["labels"] = sorted(self.response.get("labels", ()))
            response.setdefault("wrong_word", False)
            response.setdefault("better_expression", None)
        return {
            "annotator_id": self.annotator_id,
            "task_id": self.task_id,
            "kind": self.kind,
            "response": response,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "AnnotationRecord":
        return cls(
            annotator_id=obj["annotator_id"],
            task_id=obj["task_id"],
            kind=obj["kind"],
            response=obj["response"],
        )


@dataclass(frozen=True)
class Assignment:
    portion_index: int
    annotators: dict[str, str]  # group -> annotator id


def make_portions(items: Sequence[T], k: int, seed: int) -> list[list[T]]:
    """Shuffle items with a seeded PRNG and split into k portions.

    The first (n mod k) portions get ceil(n/k) items and the rest floor(n/k),
    so the portions partition the input exactly.
    """
    n = len(items)
    if k <= 0:
        raise AnnotationError(f"portion count must be positive, got {k}")
    if k > n:
        raise AnnotationError(f"cannot split {n} items into {k} portions")
    shuffled = list(items)
    random.Random(seed).shuffle(shuffled)
    big = n % k
    size_big = -(-n // k)  # ceil
    size_small = n // k
    portions = []
    pos = 0
    for i in range(k):
        size = size_big if i < big else size_small
        portions.append(shuffled[pos : pos + size])
        pos += size
    return portions


def build_assignments(
    portions: Sequence[Sequence[T]], groups: Mapping[str, Sequence[str]]
) -> list[Assignment]:
    """Assign portion i to the i-th annotator of every group."""
    for group, annotators in groups.items():
        if len(annotators) != len(portions):
            raise AnnotationError(
                f"group {group!r} has {len(annotators)} annotators for {len(portions)} portions"
            )
    return [
        Assignment(
            portion_index=i,
            annotators={group: groups[group][i] for group in groups},
        )
        for i in range(len(portions))
    ]


def sample_half(items: Sequence[T], seed: int) -> list[T]:
    """Seeded sample of floor(n/2) items, preserving their input order."""
    if not items:
        raise AnnotationError("cannot sample from an empty list")
    n = len(items)
    picked = sorted(random.Random(seed).sample(range(n), n // 2))
    return [items[i] for i in picked]


@dataclass(frozen=True)
class MajorityOutcome:
    labels: frozenset[str]
    dropped: bool
    votes: dict[str, int] = field(default_factory=dict, compare=False)


def aggregate_majority(records: Sequence[AnnotationRecord], raters: int) -> MajorityOutcome:
    """Majority-vote aggregation of one word's emotion records.

    A label survives iff selected by strictly more than raters/2 of the k
    raters; the wrong-word flag is aggregated by the same rule and a dropped
    word contributes nothing to the lexicon. An empty surviving label set
    means the word is neutral. The records may come from fewer than ``raters``
    raters (absent raters simply cast no votes) but never more, and never
    twice from the same rater.
    """
    if not records:
        raise AnnotationError("no records to aggregate")
    if raters <= 0:
        raise AnnotationError("rater count must be positive")
    seen: set[str] = set()
    votes: dict[str, int] = {}
    wrong_votes = 0
    for record in records:
        if record.kind != "emotion-annotation":
            raise AnnotationError("majority aggregation applies to emotion-annotation records")
        if record.annotator_id in seen:
            raise AnnotationError(f"duplicate rater {record.annotator_id!r} for the same word")
        seen.add(record.annotator_id)
        if record.response.get("wrong_word"):
            wrong_votes += 1
        for label in set(record.response.get("labels", ())):
            votes[label] = votes.get(label, 0) + 1
    if len(seen) > raters:
        raise AnnotationError(f"{len(seen)} distinct raters exceed the declared {raters}")
    threshold = raters / 2
    labels = frozenset(l for l, v in votes.items() if v > threshold)
    return MajorityOutcome(labels=labels, dropped=wrong_votes > threshold, votes=votes)


@dataclass(frozen=True)
class TrioSelection:
    trio: tuple[str, str, str]
    alpha: float


def select_annotator_trio(
    demo_records: Sequence[AnnotationRecord],
    words: Optional[Sequence[str]] = None,
) -> TrioSelection:
    """Pick the trio of demo candidates with the highest Krippendorff's alpha.

    Resubmissions overwrite (the last record per candidate and word wins).
    Candidates who did not respond to every demo word are excluded with a
    warning. All C-choose-3 trios of the remaining candidates are scored on
    their binarized annotations; ties break toward the lexicographically
    smallest id triple. Trios whose pooled values are degenerate (no
    disagreement is even expressible) are unscorable and skipped.
    """
    latest: dict[tuple[str, str], AnnotationRecord] = {}
    for record in demo_records:
        latest[(record.annotator_id, record.task_id)] = record
    candidates = sorted({cand for cand, _ in latest})
    word_list = list(words) if words is not None else sorted({w for _, w in latest})
    if not word_list:
        raise AnnotationError("no demo words to score")

    complete = []
    for cand in candidates:
        missing = [w for w in word_list if (cand, w) not in latest]
        if missing:
            warnings.warn(
                f"demo candidate {cand!r} skipped {len(missing)} of {len(word_list)} words; excluded"
            )
        else:
            complete.append(cand)
    if len(complete) < 3:
        raise AnnotationError(
            f"need at least 3 candidates with full demo coverage, have {len(complete)}"
        )

    records = [latest[(cand, word)] for cand in complete for word in word_list]
    matrix = build_reliability_matrix(records, raters=complete)
    best: Optional[TrioSelection] = None
    for trio in combinations(complete, 3):
        try:
            report = krippendorff_alpha(matrix.subset_raters(trio))
        except DegenerateDataError:
            continue
        if best is None or report.coefficient > best.alpha:
            best = TrioSelection(trio=trio, alpha=report.coefficient)
    if best is None:
        raise DegenerateDataError("every candidate trio has degenerate demo data")
    return best


def tasks_to_jsonl(tasks: Iterable[Task], path: str | Path) -> None:
    write_ndjson(path, (t.to_dict() for t in tasks))


def tasks_from_jsonl(path: str | Path) -> list[Task]:
    tasks = []
    seen = set()
    for line_no, obj in read_ndjson(path):
        task = Task.from_dict(obj)
        if task.id in seen:
            raise AnnotationError(f"{path}:{line_no}: duplicate task id {task.id!r}")
        seen.add(task.id)
        tasks.append(task)
    return tasks


def records_to_jsonl(records: Iterable[AnnotationRecord], path: str | Path) -> None:
    write_ndjson(path, (r.to_dict() for r in records))


def records_from_jsonl(path: str | Path) -> list[AnnotationRecord]:
    return [AnnotationRecord.from_dict(obj) for _, obj in read_ndjson(path)]
