"""Consistency-based lexicon evaluation against a baseline extraction run.

Each candidate lexicon is run over its language version of every parallel
dataset; agreement with the English-baseline run is scored with Cohen's
kappa over the pooled (document x dimension) presence indicators, yielding
one coefficient per (lexicon, dataset) cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .extractor import LexiconMatcher, extract
from .fileio import read_ndjson
from .lexicon import EMOTION_DIMENSIONS, Lexicon
from .reliability import AgreementReport, cohens_kappa

LANGUAGE_TAGS = ("en", "zh", "yue")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ParallelDoc:
    id: str
    versions: dict[str, str]
    gold: Optional[list[str]] = None


@dataclass(frozen=True)
class ParallelDataset:
    name: str
    docs: tuple[ParallelDoc, ...]

    @property
    def languages(self) -> frozenset[str]:
        return frozenset(self.docs[0].versions) if self.docs else frozenset()


@dataclass(frozen=True)
class ExtractionRun:
    dataset: str
    lexicon: str
    language: str
    presence: dict[str, frozenset[str]]  # doc id -> dimensions present


def load_dataset(path: str | Path, name: Optional[str] = None) -> ParallelDataset:
    """Read a newline-delimited JSON parallel dataset.

    Records are {"id", "versions": {lang: text}, "gold": optional}. Every
    document must carry the same language versions; gold labels are carried
    through but unused by the consistency protocol.
    """
    path = Path(path)
    docs: list[ParallelDoc] = []
    seen: set[str] = set()
    declared: Optional[frozenset[str]] = None
    for line_no, obj in read_ndjson(path):
        doc_id = str(obj.get("id", ""))
        if not doc_id:
            raise EvaluationError(f"{path}:{line_no}: document missing id")
        if doc_id in seen:
            raise EvaluationError(f"{path}:{line_no}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        versions = obj.get("versions")
        if not isinstance(versions, dict) or not versions:
            raise EvaluationError(f"{path}:{line_no}: document {doc_id!r} has no versions")
        unknown = set(versions) - set(LANGUAGE_TAGS)
        if unknown:
            raise EvaluationError(
                f"{path}:{line_no}: document {doc_id!r} has unknown language tags {sorted(unknown)}"
            )
        langs = frozenset(versions)
        if declared is None:
            declared = langs
        elif langs != declared:
            missing = sorted(declared ^ langs)
            raise EvaluationError(
                f"{path}:{line_no}: document {doc_id!r} version mismatch on {missing}"
            )
        docs.append(ParallelDoc(id=doc_id, versions=dict(versions), gold=obj.get("gold")))
    if not docs:
        raise EvaluationError(f"{path}: dataset has no documents")
    return ParallelDataset(name=name or path.stem, docs=tuple(docs))


def run_lexicon(
    dataset: ParallelDataset, lexicon: Lexicon, language: str, mode: str
) -> ExtractionRun:
    """Extract with one lexicon over one language version of every document."""
    if language not in dataset.languages:
        raise EvaluationError(
            f"dataset {dataset.name!r} has no {language!r} version (has {sorted(dataset.languages)})"
        )
    matcher = LexiconMatcher(lexicon)
    presence = {
        doc.id: extract(doc.versions[language], matcher, mode).present_dimensions
        for doc in dataset.docs
    }
    return ExtractionRun(
        dataset=dataset.name, lexicon=lexicon.name, language=language, presence=presence
    )


def pooled_indicators(run: ExtractionRun, doc_ids: Sequence[str]) -> list[int]:
    return [
        1 if dim in run.presence[doc_id] else 0
        for doc_id in doc_ids
        for dim in EMOTION_DIMENSIONS
    ]


def agreement(candidate: ExtractionRun, baseline: ExtractionRun) -> AgreementReport:
    """Cohen's kappa between two runs over pooled binary presence indicators.

    Both runs must cover the same dataset and document ids; each document
    contributes one indicator per dimension to the pooled sequences.
    """
    if candidate.dataset != baseline.dataset:
        raise EvaluationError(
            f"runs cover different datasets: {candidate.dataset!r} vs {baseline.dataset!r}"
        )
    if set(candidate.presence) != set(baseline.presence):
        raise EvaluationError("runs cover different document id sets")
    doc_ids = sorted(candidate.presence)
    return cohens_kappa(
        pooled_indicators(candidate, doc_ids), pooled_indicators(baseline, doc_ids)
    )


def per_dimension_kappas(
    candidate: ExtractionRun, baseline: ExtractionRun
) -> dict[str, Optional[float]]:
    """Diagnostic only: kappa per dimension, None where degenerate. Not the
    canonical pooled score."""
    from .reliability import DegenerateDataError

    doc_ids = sorted(candidate.presence)
    out: dict[str, Optional[float]] = {}
    for dim in EMOTION_DIMENSIONS:
        a = [1 if dim in candidate.presence[d] else 0 for d in doc_ids]
        b = [1 if dim in baseline.presence[d] else 0 for d in doc_ids]
        try:
            out[dim] = cohens_kappa(a, b).coefficient
        except DegenerateDataError:
            out[dim] = None
    return out


@dataclass
class EvaluationReport:
    """Kappa per (lexicon, dataset) cell, plus grid metadata."""

    baseline: str
    lexicons: list[str]
    datasets: list[str]
    grid: dict[tuple[str, str], float] = field(default_factory=dict)
    doc_counts: dict[str, int] = field(default_factory=dict)

    def kappa(self, lexicon: str, dataset: str) -> float:
        return self.grid[(lexicon, dataset)]

    def relative_change(self, reference: str) -> dict[tuple[str, str], float]:
        """Percent change of each cell against the reference lexicon's cell on
        the same dataset: 100 * (k_cand - k_ref) / k_ref."""
        if reference not in self.lexicons:
            raise EvaluationError(f"reference lexicon {reference!r} not in report")
        out = {}
        for lexicon in self.lexicons:
            for dataset in self.datasets:
                ref = self.grid[(reference, dataset)]
                if ref == 0:
                    raise EvaluationError(
                        f"reference kappa is zero on dataset {dataset!r}; relative change undefined"
                    )
                out[(lexicon, dataset)] = 100.0 * (self.grid[(lexicon, dataset)] - ref) / ref
        return out

    def to_dict(self, reference: Optional[str] = None) -> dict:
        cells = {
            lexicon: {dataset: round(self.grid[(lexicon, dataset)], 6) for dataset in self.datasets}
            for lexicon in self.lexicons
        }
        out: dict = {
            "baseline": self.baseline,
            "datasets": self.datasets,
            "dimensions": list(EMOTION_DIMENSIONS),
            "doc_counts": self.doc_counts,
            "kappa": cells,
        }
        if reference is not None:
            rel = self.relative_change(reference)
            out["reference"] = reference
            out["relative_change_pct"] = {
                lexicon: {
                    dataset: round(rel[(lexicon, dataset)], 1) for dataset in self.datasets
                }
                for lexicon in self.lexicons
            }
        return out

    def to_json(self, reference: Optional[str] = None) -> str:
        return json.dumps(self.to_dict(reference), ensure_ascii=False, indent=2, sort_keys=True)

    def to_table(self, reference: Optional[str] = None) -> str:
        """Fixed-width text table, lexicons as rows and datasets as columns."""
        header = ["Lexicon"] + list(self.datasets)
        rows = [header]
        for lexicon in self.lexicons:
            rows.append(
                [lexicon] + [f"{self.grid[(lexicon, d)]:.3f}" for d in self.datasets]
            )
        if reference is not None:
            rel = self.relative_change(reference)
            for lexicon in self.lexicons:
                if lexicon == reference:
                    continue
                rows.append(
                    [f"{lexicon} vs {reference}"]
                    + [f"{rel[(lexicon, d)]:+.1f}%" for d in self.datasets]
                )
        widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
        lines = []
        for row in rows:
            lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        return "\n".join(lines) + "\n"


def evaluate_matrix(
    datasets: Sequence[ParallelDataset],
    lexicons: Sequence[tuple[Lexicon, str, str]],
    baseline: tuple[Lexicon, str, str],
) -> EvaluationReport:
    """Score every (lexicon, dataset) cell against the baseline run.

    ``lexicons`` and ``baseline`` are (lexicon, language, mode) triples. A
    failing run aborts the whole grid, naming the offending cell.
    """
    base_lex, base_lang, base_mode = baseline
    report = EvaluationReport(
        baseline=base_lex.name,
        lexicons=[lex.name for lex, _, _ in lexicons],
        datasets=[ds.name for ds in datasets],
    )
    if len(set(report.lexicons)) != len(report.lexicons):
        raise EvaluationError("duplicate lexicon names in evaluation")
    for dataset in datasets:
        report.doc_counts[dataset.name] = len(dataset.docs)
        try:
            baseline_run = run_lexicon(dataset, base_lex, base_lang, base_mode)
        except Exception as exc:
            raise EvaluationError(
                f"baseline run failed on dataset {dataset.name!r}: {exc}"
            ) from exc
        for lex, lang, mode in lexicons:
            try:
                candidate_run = run_lexicon(dataset, lex, lang, mode)
                report.grid[(lex.name, dataset.name)] = agreement(
                    candidate_run, baseline_run
                ).coefficient
            except Exception as exc:
                raise EvaluationError(
                    f"evaluation cell ({lex.name!r}, {dataset.name!r}) failed: {exc}"
                ) from exc
    return report
