"""Lexicon-driven keyword matching over text.

Two matching modes serve the two script families: ``token`` splits on
whitespace and looks tokens up exactly (space-delimited languages), while
``substring`` runs forward maximum matching of lexicon terms over the raw
character sequence (Han-script text). The mode is a per-dataset config
choice, never guessed from content.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

from .lexicon import EMOTION_DIMENSIONS, Lexicon

MODES = ("token", "substring")


class ExtractionError(ValueError):
    pass


@dataclass
class EmotionProfile:
    presence: dict[str, bool]
    counts: dict[str, int]
    matched_terms: list[tuple[str, frozenset[str]]] = field(default_factory=list)
    # (start, end) per match; token-mode spans cover the raw whitespace token
    spans: list[tuple[int, int]] = field(default_factory=list)

    @property
    def present_dimensions(self) -> frozenset[str]:
        return frozenset(d for d, p in self.presence.items() if p)

    def to_dict(self) -> dict:
        return {
            "presence": {d: self.presence[d] for d in EMOTION_DIMENSIONS},
            "counts": {d: self.counts[d] for d in EMOTION_DIMENSIONS},
            "matched_terms": [
                {"term": t, "labels": sorted(labels)} for t, labels in self.matched_terms
            ],
        }


class _TrieNode:
    __slots__ = ("children", "term")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.term: str | None = None


class LexiconMatcher:
    """Prefix tree over a lexicon's terms, built once and shareable."""

    def __init__(self, lexicon: Lexicon):
        if not lexicon.entries:
            raise ExtractionError("cannot match against an empty lexicon")
        self.lexicon = lexicon
        self._root = _TrieNode()
        for term in lexicon.entries:
            node = self._root
            for ch in term:
                node = node.children.setdefault(ch, _TrieNode())
            node.term = term

    def longest_match(self, text: str, start: int) -> str | None:
        node = self._root
        best = None
        for i in range(start, len(text)):
            node = node.children.get(text[i])
            if node is None:
                break
            if node.term is not None:
                best = node.term
        return best


def _strip_punct(token: str) -> str:
    chars = list(token)
    while chars and unicodedata.category(chars[0]).startswith("P"):
        chars.pop(0)
    while chars and unicodedata.category(chars[-1]).startswith("P"):
        chars.pop()
    return "".join(chars)


def extract(text: str, lexicon: Lexicon | LexiconMatcher, mode: str) -> EmotionProfile:
    """Match lexicon terms in the text and profile the emotions they carry.

    Each matched occurrence adds one to every dimension in its entry's label
    set; presence is exactly counts > 0. Token mode strips leading/trailing
    punctuation and case-folds each whitespace token before an exact lookup
    (lexicon terms are expected in folded form). Substring mode matches
    non-overlapping spans left to right, longest term first, advancing one
    character when nothing matches.
    """
    if mode not in MODES:
        raise ExtractionError(f"unknown extraction mode {mode!r}")
    matcher = lexicon if isinstance(lexicon, LexiconMatcher) else LexiconMatcher(lexicon)
    entries = matcher.lexicon.entries
    counts = {d: 0 for d in EMOTION_DIMENSIONS}
    matched: list[tuple[str, frozenset[str]]] = []
    spans: list[tuple[int, int]] = []

    def hit(term: str, start: int, end: int) -> None:
        labels = entries[term].labels
        matched.append((term, labels))
        spans.append((start, end))
        for label in labels:
            counts[label] += 1

    if mode == "token":
        pos = 0
        for raw in text.split():
            start = text.index(raw, pos)
            pos = start + len(raw)
            token = _strip_punct(raw).casefold()
            if token and token in entries:
                hit(token, start, pos)
    else:
        i = 0
        n = len(text)
        while i < n:
            term = matcher.longest_match(text, i)
            if term is None:
                i += 1
            else:
                hit(term, i, i + len(term))
                i += len(term)

    presence = {d: counts[d] > 0 for d in EMOTION_DIMENSIONS}
    return EmotionProfile(presence=presence, counts=counts, matched_terms=matched, spans=spans)
