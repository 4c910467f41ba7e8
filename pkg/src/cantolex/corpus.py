"""Thread corpus ingestion, dictionary segmentation, and TF-IDF term mining.

A document is a thread topic concatenated with its replies. Segmentation is
forward maximum matching over a user-supplied POS-tagged dictionary: at each
position the longest dictionary term wins; otherwise a run of whitespace or
of non-Han script is emitted whole, and a lone Han character falls back to a
single-character token. Out-of-dictionary tokens carry the fallback tag "x".
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .fileio import atomic_write, read_ndjson

log = logging.getLogger(__name__)

FALLBACK_POS = "x"

# POS categories observed to be rich in emotion-bearing words; nouns and the
# fallback tag are deliberately absent.
DEFAULT_POS_FILTER = frozenset(
    ["a", "ad", "ag", "an", "b", "g", "h", "i", "j", "l", "q", "v", "vn", "z"]
)

DEFAULT_TOP_K = 20000

_HAN_RANGES = (
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2EBEF),
)


def _is_han(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _HAN_RANGES)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class Document:
    id: str
    text: str


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]

    def __post_init__(self) -> None:
        ids = [d.id for d in self.documents]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise CorpusError(f"duplicate document ids: {dupes[:5]}")

    def __len__(self) -> int:
        return len(self.documents)


@dataclass(frozen=True)
class Token:
    surface: str
    pos: str


class SegmenterDictionary:
    """Surface term -> POS tag map with the max term length precomputed."""

    def __init__(self, entries: dict[str, str]):
        if not entries:
            raise CorpusError("segmenter dictionary is empty")
        for term in entries:
            if not term:
                raise CorpusError("dictionary contains an empty term")
            if any(ch.isspace() for ch in term):
                raise CorpusError(f"dictionary term {term!r} contains whitespace")
        self.entries = dict(entries)
        self.max_len = max(len(t) for t in entries)

    def __len__(self) -> int:
        return len(self.entries)

    def pos_of(self, term: str) -> str:
        return self.entries.get(term, FALLBACK_POS)

    @classmethod
    def load(cls, path: str | Path) -> "SegmenterDictionary":
        """Read a UTF-8 TSV of ``term<TAB>pos`` rows."""
        entries: dict[str, str] = {}
        with open(path, encoding="utf-8") as fh:
            for row_no, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise CorpusError(f"{path}:{row_no}: expected 'term<TAB>pos'")
                entries[parts[0]] = parts[1]
        return cls(entries)


@dataclass(frozen=True)
class TermScore:
    term: str
    pos: str
    tf_sum: float
    idf: float
    tfidf: float


@dataclass(frozen=True)
class TfidfBreakdown:
    tf: float
    idf: float
    tfidf: float


def load_corpus(path: str | Path) -> Corpus:
    """Read newline-delimited JSON thread records into a corpus.

    Each record is {"id", "topic", "replies": [...]}. The document text is
    the topic and its replies joined by single newlines.
    """
    documents = []
    seen: set[str] = set()
    for line_no, obj in read_ndjson(path):
        if not isinstance(obj, dict):
            raise CorpusError(f"{path}:{line_no}: record is not an object")
        for key in ("id", "topic", "replies"):
            if key not in obj:
                raise CorpusError(f"{path}:{line_no}: record missing field {key!r}")
        if not isinstance(obj["replies"], list):
            raise CorpusError(f"{path}:{line_no}: 'replies' must be a list")
        doc_id = str(obj["id"])
        if doc_id in seen:
            raise CorpusError(f"{path}:{line_no}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        text = "\n".join([obj["topic"], *obj["replies"]])
        documents.append(Document(id=doc_id, text=text))
    if not documents:
        log.warning("corpus file %s contains no records", path)
    return Corpus(documents=tuple(documents))


def segment_text(text: str, dictionary: SegmenterDictionary) -> list[Token]:
    """Forward-maximum-matching segmentation; lossless over the input.

    At each position: the longest dictionary match wins; otherwise a maximal
    whitespace run, or a maximal run of non-Han non-whitespace characters
    (stopping at whitespace or a Han character), or a single Han character,
    is emitted with the fallback tag.
    """
    tokens: list[Token] = []
    n = len(text)
    i = 0
    while i < n:
        matched = None
        for length in range(min(dictionary.max_len, n - i), 0, -1):
            candidate = text[i : i + length]
            if candidate in dictionary.entries:
                matched = candidate
                break
        if matched is not None:
            tokens.append(Token(matched, dictionary.entries[matched]))
            i += len(matched)
            continue
        ch = text[i]
        if ch.isspace():
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
        elif not _is_han(ch):
            j = i + 1
            while j < n and not text[j].isspace() and not _is_han(text[j]):
                j += 1
        else:
            j = i + 1
        tokens.append(Token(text[i:j], FALLBACK_POS))
        i = j
    return tokens


class CorpusIndex:
    """Per-document token counts and document frequencies, segmented once."""

    def __init__(self, corpus: Corpus, dictionary: SegmenterDictionary):
        self.corpus = corpus
        self.doc_counts: dict[str, dict[str, int]] = {}
        self.doc_totals: dict[str, int] = {}
        self.df: dict[str, int] = {}
        self.pos: dict[str, str] = {}
        for doc in corpus.documents:
            counts: dict[str, int] = {}
            for token in segment_text(doc.text, dictionary):
                counts[token.surface] = counts.get(token.surface, 0) + 1
                if token.surface not in self.pos:
                    self.pos[token.surface] = token.pos
            self.doc_counts[doc.id] = counts
            self.doc_totals[doc.id] = sum(counts.values())
            for term in counts:
                self.df[term] = self.df.get(term, 0) + 1

    @property
    def n_documents(self) -> int:
        return len(self.corpus.documents)

    def tf(self, term: str, doc_id: str) -> float:
        total = self.doc_totals[doc_id]
        if total == 0:
            raise CorpusError(f"document {doc_id!r} has no tokens; term frequency is undefined")
        return self.doc_counts[doc_id].get(term, 0) / total

    def idf(self, term: str) -> float:
        # Natural log; the 1+df smoothing makes idf negative for terms
        # present in every document.
        return math.log(self.n_documents / (1 + self.df.get(term, 0)))

    def tfidf(self, term: str, doc_id: str) -> TfidfBreakdown:
        tf = self.tf(term, doc_id)
        idf = self.idf(term)
        return TfidfBreakdown(tf=tf, idf=idf, tfidf=tf * idf)


def tfidf(
    term: str, doc: Document, corpus: Corpus, dictionary: SegmenterDictionary
) -> TfidfBreakdown:
    """TF-IDF of a term in one document against the whole corpus.

    tf is the term's share of the document's tokens; idf is
    log(N / (1 + df)) over the corpus. A document with zero tokens has no
    defined term frequency and raises.
    """
    if not corpus.documents:
        raise CorpusError("corpus is empty")
    if all(d.id != doc.id for d in corpus.documents):
        raise CorpusError(f"document {doc.id!r} is not part of the corpus")
    return CorpusIndex(corpus, dictionary).tfidf(term, doc.id)


def mine_terms(
    corpus: Corpus,
    dictionary: SegmenterDictionary,
    allowed_pos: Optional[Iterable[str]] = None,
    top_k: int = DEFAULT_TOP_K,
    aggregate: str = "sum",
) -> list[TermScore]:
    """Rank corpus terms by aggregated TF-IDF and keep the top-k.

    The per-term corpus score is the sum over documents of TF*IDF (or the
    max over documents containing the term, with aggregate="max"). Terms are
    filtered to the allowed POS set before truncation. Sorting is score
    descending with ties broken by term code-point order, so reruns are
    byte-identical.
    """
    if top_k < 1:
        raise CorpusError(f"top_k must be at least 1, got {top_k}")
    if aggregate not in ("sum", "max"):
        raise CorpusError(f"aggregate must be 'sum' or 'max', got {aggregate!r}")
    if not corpus.documents:
        raise CorpusError("corpus is empty")
    pos_filter = DEFAULT_POS_FILTER if allowed_pos is None else frozenset(allowed_pos)

    index = CorpusIndex(corpus, dictionary)
    tf_sums: dict[str, float] = {}
    tf_maxes: dict[str, float] = {}
    for doc in corpus.documents:
        total = index.doc_totals[doc.id]
        if total == 0:
            continue
        for term, count in index.doc_counts[doc.id].items():
            tf = count / total
            tf_sums[term] = tf_sums.get(term, 0.0) + tf
            if term not in tf_maxes or tf > tf_maxes[term]:
                tf_maxes[term] = tf

    scores = []
    for term, tf_sum in tf_sums.items():
        pos = index.pos[term]
        if pos not in pos_filter:
            continue
        idf = index.idf(term)
        if aggregate == "sum":
            score = tf_sum * idf
        else:
            # max over documents containing the term; sign follows idf
            extreme = tf_maxes[term] if idf >= 0 else min(
                count / index.doc_totals[d]
                for d, counts in index.doc_counts.items()
                if (count := counts.get(term, 0)) > 0
            )
            score = extreme * idf
        scores.append(TermScore(term=term, pos=pos, tf_sum=tf_sum, idf=idf, tfidf=score))

    scores.sort(key=lambda s: (-s.tfidf, s.term))
    return scores[:top_k]


def write_term_scores(scores: Sequence[TermScore], path: str | Path) -> None:
    """TSV output ``term<TAB>pos<TAB>tfidf`` in ranking order."""
    atomic_write(path, "".join(f"{s.term}\t{s.pos}\t{s.tfidf!r}\n" for s in scores))
