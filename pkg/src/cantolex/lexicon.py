"""Emotion lexicons in the NRC word-level TSV format.

A lexicon maps surface terms to subsets of the ten emotion dimensions
(eight basic emotions plus the two polarities). Files are UTF-8 TSV with
one ``term<TAB>dimension<TAB>flag`` row per (term, dimension) pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional

# Canonical order is alphabetical; every serialization follows it.
EMOTION_DIMENSIONS: tuple[str, ...] = (
    "anger",
    "anticipation",
    "disgust",
    "fear",
    "joy",
    "negative",
    "positive",
    "sadness",
    "surprise",
    "trust",
)

DIMENSION_SET = frozenset(EMOTION_DIMENSIONS)

PROVENANCE_CLASSES = ("nrc-translated", "llm", "human", "merged")


class LexiconError(ValueError):
    """Malformed lexicon data or an operation on an invalid lexicon."""


@dataclass
class LexiconEntry:
    term: str
    labels: frozenset[str] = frozenset()
    provenance: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.term:
            raise LexiconError("lexicon entry term must be non-empty")
        bad = set(self.labels) - DIMENSION_SET
        if bad:
            raise LexiconError(f"unknown emotion dimensions: {sorted(bad)}")
        self.labels = frozenset(self.labels)
        self.provenance = frozenset(self.provenance)

    @property
    def neutral(self) -> bool:
        return not self.labels


@dataclass
class Lexicon:
    name: str
    entries: dict[str, LexiconEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for term, entry in self.entries.items():
            if entry.term != term:
                raise LexiconError(f"entry key {term!r} does not match entry term {entry.term!r}")

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, term: str) -> bool:
        return term in self.entries

    def add(self, term: str, labels: Iterable[str], provenance: Iterable[str] = ()) -> None:
        """Insert or extend an entry; labels and provenance are unioned on collision."""
        new_labels = frozenset(labels)
        new_prov = frozenset(provenance)
        existing = self.entries.get(term)
        if existing is None:
            self.entries[term] = LexiconEntry(term, new_labels, new_prov)
        else:
            existing.labels = existing.labels | new_labels
            existing.provenance = existing.provenance | new_prov

    def terms(self) -> list[str]:
        return sorted(self.entries)


class TranslationMap:
    """Per source word, the ordered deduplicated list of target expressions.

    The original given translation is added first; later duplicates only
    extend the expression's contributor set. Contributors are provenance
    classes ("nrc-translated", "llm", "human"), used by the expansion
    statistics to attribute who supplied which expression.
    """

    def __init__(self) -> None:
        self._expressions: dict[str, list[str]] = {}
        self._contributors: dict[tuple[str, str], set[str]] = {}

    def add(self, source: str, expression: str, provenance: str) -> None:
        if not expression:
            raise LexiconError(f"empty expression for source word {source!r}")
        if provenance not in PROVENANCE_CLASSES:
            raise LexiconError(f"unknown provenance class {provenance!r}")
        order = self._expressions.setdefault(source, [])
        if expression not in order:
            order.append(expression)
        self._contributors.setdefault((source, expression), set()).add(provenance)

    def sources(self) -> list[str]:
        return list(self._expressions)

    def expressions(self, source: str) -> list[str]:
        return list(self._expressions.get(source, []))

    def contributors(self, source: str, expression: str) -> frozenset[str]:
        return frozenset(self._contributors.get((source, expression), ()))

    def additional_expressions(self, source: str) -> list[str]:
        """Expressions supplied by annotators, i.e. beyond the given translation."""
        extra = []
        for expr in self._expressions.get(source, []):
            if self.contributors(source, expr) - {"nrc-translated"}:
                extra.append(expr)
        return extra

    def __len__(self) -> int:
        return len(self._expressions)

    def to_json(self) -> str:
        payload = {
            src: [
                {"expression": e, "contributors": sorted(self.contributors(src, e))}
                for e in self._expressions[src]
            ]
            for src in sorted(self._expressions)
        }
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TranslationMap":
        tmap = cls()
        for src, exprs in json.loads(text).items():
            for item in exprs:
                for contributor in item["contributors"]:
                    tmap.add(src, item["expression"], contributor)
        return tmap


def parse_lexicon(path: str | Path, name: Optional[str] = None) -> Lexicon:
    """Read an NRC-style TSV file into a Lexicon.

    Flag 1 adds the dimension to the term's label set, flag 0 adds nothing;
    a term whose rows are all 0 is kept as a neutral entry. Blank lines are
    skipped. Errors report 1-based row numbers.
    """
    path = Path(path)
    lex = Lexicon(name=name or path.stem)
    seen: dict[str, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for row_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise LexiconError(f"{path}:{row_no}: expected 3 tab-separated fields, got {len(parts)}")
            term, dimension, flag = parts
            if not term:
                raise LexiconError(f"{path}:{row_no}: empty term")
            if dimension not in DIMENSION_SET:
                raise LexiconError(f"{path}:{row_no}: unknown dimension {dimension!r}")
            if flag not in ("0", "1"):
                raise LexiconError(f"{path}:{row_no}: flag must be 0 or 1, got {flag!r}")
            labels = seen.setdefault(term, set())
            if flag == "1":
                labels.add(dimension)
    for term, labels in seen.items():
        lex.entries[term] = LexiconEntry(term, frozenset(labels))
    return lex


def write_lexicon(lex: Lexicon, path: str | Path) -> None:
    """Write the NRC-style TSV: terms in code-point order, dimensions canonical.

    Every term gets exactly ten rows. Provenance is in-memory metadata and is
    not serialized. Output is byte-deterministic.
    """
    from .fileio import atomic_write

    lines = []
    for term in sorted(lex.entries):
        labels = lex.entries[term].labels
        for dim in EMOTION_DIMENSIONS:
            lines.append(f"{term}\t{dim}\t{1 if dim in labels else 0}\n")
    atomic_write(path, "".join(lines))


def merge_expressions(base: Lexicon, tmap: TranslationMap) -> Lexicon:
    """Extend a lexicon with the annotator-supplied expressions of its words.

    Each target expression becomes (or extends) an entry carrying the source
    word's labels. Collisions union labels and add the "merged" provenance;
    labels are never removed.
    """
    unknown = [s for s in tmap.sources() if s not in base.entries]
    if unknown:
        raise LexiconError(f"translation map sources not in base lexicon: {sorted(unknown)[:5]}")
    merged = Lexicon(name=base.name, entries={
        t: LexiconEntry(t, e.labels, e.provenance) for t, e in base.entries.items()
    })
    for source in tmap.sources():
        source_labels = base.entries[source].labels
        for expr in tmap.expressions(source):
            contributors = tmap.contributors(source, expr)
            if expr in merged.entries:
                entry = merged.entries[expr]
                entry.labels = entry.labels | source_labels
                entry.provenance = entry.provenance | contributors | {"merged"}
            else:
                merged.entries[expr] = LexiconEntry(expr, source_labels, contributors)
    return merged


def filter_non_neutral(lex: Lexicon) -> Lexicon:
    """Drop entries with empty label sets; idempotent."""
    return Lexicon(
        name=lex.name,
        entries={t: e for t, e in lex.entries.items() if not e.neutral},
    )


@dataclass
class ExpansionStats:
    base_words: int
    gained_any: int
    gained_exactly_1: int
    gained_exactly_2: int
    gained_3_plus: int
    provenance_contribution: dict[str, int]

    def pct(self, count: int) -> float:
        return 100.0 * count / self.base_words if self.base_words else 0.0


@dataclass
class StatsReport:
    lexicon_name: str
    total_entries: int
    label_counts: dict[str, int]
    label_proportions: dict[str, float]
    base_total: Optional[int] = None
    expansion: Optional[ExpansionStats] = None

    def to_dict(self) -> dict:
        out: dict = {
            "lexicon": self.lexicon_name,
            "total_entries": self.total_entries,
            "label_proportions": {
                d: round(self.label_proportions[d], 4) for d in EMOTION_DIMENSIONS
            },
        }
        if self.base_total is not None:
            out["base_total_entries"] = self.base_total
        if self.expansion is not None:
            ex = self.expansion
            out["expansion"] = {
                "base_words": ex.base_words,
                "gained_any": {"count": ex.gained_any, "pct": round(ex.pct(ex.gained_any), 1)},
                "gained_exactly_1": {
                    "count": ex.gained_exactly_1,
                    "pct": round(ex.pct(ex.gained_exactly_1), 1),
                },
                "gained_exactly_2": {
                    "count": ex.gained_exactly_2,
                    "pct": round(ex.pct(ex.gained_exactly_2), 1),
                },
                "gained_3_plus": {
                    "count": ex.gained_3_plus,
                    "pct": round(ex.pct(ex.gained_3_plus), 1),
                },
                "provenance_contribution": {
                    cls: {"count": n, "pct": round(ex.pct(n), 1)}
                    for cls, n in sorted(ex.provenance_contribution.items())
                },
            }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2, sort_keys=True)

    def to_table(self) -> str:
        """Aligned two-column text table in the shape of a proportions table."""
        rows = [("Emotion label", "Proportion")]
        for dim in EMOTION_DIMENSIONS:
            rows.append((dim, f"{self.label_proportions[dim]:.3f}"))
        width = max(len(r[0]) for r in rows) + 2
        lines = [f"{left:<{width}}{right}" for left, right in rows]
        lines.append("")
        lines.append(f"total entries: {self.total_entries}")
        if self.base_total is not None:
            lines.append(f"base entries:  {self.base_total}")
        if self.expansion is not None:
            ex = self.expansion
            lines.append(f"base words considered: {ex.base_words}")
            for label, n in (
                ("gained exactly 1 expression", ex.gained_exactly_1),
                ("gained exactly 2 expressions", ex.gained_exactly_2),
                ("gained 3+ expressions", ex.gained_3_plus),
            ):
                lines.append(f"{label}: {n} ({ex.pct(n):.1f}%)")
            for cls, n in sorted(ex.provenance_contribution.items()):
                lines.append(f"expressions contributed by {cls}: {n} words ({ex.pct(n):.1f}%)")
        return "\n".join(lines) + "\n"


def lexicon_stats(
    lex: Lexicon,
    base: Optional[Lexicon] = None,
    tmap: Optional[TranslationMap] = None,
) -> StatsReport:
    """Per-dimension label proportions, plus expansion statistics when a base
    lexicon and translation map are given.

    Proportions are (entries carrying the label) / (total entries); they need
    not sum to 1 since entries may carry several labels. Expansion buckets
    count base words (non-neutral ones, matching how the source lexicon counts
    "words with emotions") by how many annotator-supplied expressions they
    gained: exactly 1, exactly 2, or 3+.
    """
    if not lex.entries:
        raise LexiconError("cannot compute statistics of an empty lexicon")
    total = len(lex.entries)
    counts = {d: 0 for d in EMOTION_DIMENSIONS}
    for entry in lex.entries.values():
        for label in entry.labels:
            counts[label] += 1
    report = StatsReport(
        lexicon_name=lex.name,
        total_entries=total,
        label_counts=counts,
        label_proportions={d: counts[d] / total for d in EMOTION_DIMENSIONS},
    )
    if base is not None:
        report.base_total = len(base.entries)
    if base is not None and tmap is not None:
        considered = [t for t, e in base.entries.items() if not e.neutral]
        buckets = {1: 0, 2: 0, 3: 0}
        contribution = {"llm": 0, "human": 0}
        gained_any = 0
        for term in considered:
            extra = tmap.additional_expressions(term)
            if extra:
                gained_any += 1
                buckets[min(len(extra), 3)] += 1
            classes = set()
            for expr in extra:
                classes |= tmap.contributors(term, expr)
            for cls in ("llm", "human"):
                if cls in classes:
                    contribution[cls] += 1
        report.expansion = ExpansionStats(
            base_words=len(considered),
            gained_any=gained_any,
            gained_exactly_1=buckets[1],
            gained_exactly_2=buckets[2],
            gained_3_plus=buckets[3],
            provenance_contribution=contribution,
        )
    return report
