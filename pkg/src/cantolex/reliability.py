"""Inter-rater reliability: Krippendorff's alpha and Cohen's kappa.

Alpha is the nominal-metric form computed from the coincidence matrix and
tolerates missing cells; kappa compares two label sequences. Multi-label
emotion annotations are binarized into one unit per (word, dimension) before
alpha is computed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Optional, Sequence

from .fileio import atomic_write
from .lexicon import EMOTION_DIMENSIONS

Value = Hashable


class DegenerateDataError(ValueError):
    """Expected disagreement is zero: the data cannot support a coefficient."""


class ReliabilityError(ValueError):
    """Structurally invalid reliability data."""


@dataclass(frozen=True)
class AgreementReport:
    """Chance-corrected agreement coefficient with its ingredients.

    For alpha, observed/expected are disagreements (D_o, D_e) and n is the
    number of scorable units; for kappa they are agreements (p_o, p_e) and n
    is the number of items.
    """

    method: str
    coefficient: float
    observed: float
    expected: float
    n: int

    def to_dict(self) -> dict:
        if self.method == "krippendorff_alpha":
            return {
                "method": self.method,
                "alpha": self.coefficient,
                "observed_disagreement": self.observed,
                "expected_disagreement": self.expected,
                "n_units": self.n,
            }
        return {
            "method": self.method,
            "kappa": self.coefficient,
            "observed_agreement": self.observed,
            "expected_agreement": self.expected,
            "n_items": self.n,
        }


@dataclass
class ReliabilityMatrix:
    """Units x raters grid of nominal values with missing cells.

    ``values`` maps (unit_id, rater_id) to a nominal value; absent keys are
    missing cells. Units with fewer than two present values carry no pairable
    information and are skipped by alpha.
    """

    units: list[str]
    raters: list[str]
    values: dict[tuple[str, str], Value]

    def __post_init__(self) -> None:
        if len(self.raters) < 2:
            raise ReliabilityError("a reliability matrix needs at least 2 raters")
        known = set(self.units)
        known_raters = set(self.raters)
        for unit, rater in self.values:
            if unit not in known:
                raise ReliabilityError(f"value for unknown unit {unit!r}")
            if rater not in known_raters:
                raise ReliabilityError(f"value for unknown rater {rater!r}")

    def unit_values(self, unit: str) -> list[Value]:
        return [
            self.values[(unit, r)] for r in self.raters if (unit, r) in self.values
        ]

    def subset_raters(self, raters: Sequence[str]) -> "ReliabilityMatrix":
        keep = set(raters)
        return ReliabilityMatrix(
            units=list(self.units),
            raters=[r for r in self.raters if r in keep],
            values={k: v for k, v in self.values.items() if k[1] in keep},
        )


def krippendorff_alpha(matrix: ReliabilityMatrix) -> AgreementReport:
    """Nominal Krippendorff's alpha via the coincidence-matrix construction.

    Each unit with m >= 2 present values contributes 1/(m-1) per ordered value
    pair to the coincidence counts. With o_ck the coincidences and n_c the
    value marginals, D_o sums off-diagonal coincidences over n and D_e is the
    chance rate n_c*n_k / (n*(n-1)); alpha = 1 - D_o/D_e.
    """
    coincidence: Counter[tuple[Value, Value]] = Counter()
    scorable = 0
    for unit in matrix.units:
        vals = matrix.unit_values(unit)
        m = len(vals)
        if m < 2:
            continue
        scorable += 1
        weight = 1.0 / (m - 1)
        for i, vi in enumerate(vals):
            for j, vj in enumerate(vals):
                if i != j:
                    coincidence[(vi, vj)] += weight
    if scorable == 0:
        raise ReliabilityError("no unit has two or more present values")

    n = sum(coincidence.values())
    marginals: Counter[Value] = Counter()
    for (vi, _vj), c in coincidence.items():
        marginals[vi] += c

    observed_off_diag = sum(c for (vi, vj), c in coincidence.items() if vi != vj)
    expected_off_diag = sum(
        marginals[c1] * marginals[c2]
        for c1 in marginals
        for c2 in marginals
        if c1 != c2
    ) / (n - 1)
    if expected_off_diag == 0:
        raise DegenerateDataError(
            "degenerate data: all present values identical, expected disagreement is zero"
        )
    d_o = observed_off_diag / n
    d_e = expected_off_diag / n
    return AgreementReport(
        method="krippendorff_alpha",
        coefficient=1.0 - d_o / d_e,
        observed=d_o,
        expected=d_e,
        n=scorable,
    )


def cohens_kappa(a: Sequence[Value], b: Sequence[Value]) -> AgreementReport:
    """Cohen's kappa between two equal-length nominal sequences."""
    if len(a) != len(b):
        raise ReliabilityError(f"sequence length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ReliabilityError("empty sequences")
    n = len(a)
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    count_a = Counter(a)
    count_b = Counter(b)
    p_e = sum(count_a[c] * count_b.get(c, 0) for c in count_a) / (n * n)
    if p_e == 1.0:
        raise DegenerateDataError(
            "degenerate data: both sequences are the same constant, expected agreement is 1"
        )
    return AgreementReport(
        method="cohens_kappa",
        coefficient=(p_o - p_e) / (1.0 - p_e),
        observed=p_o,
        expected=p_e,
        n=n,
    )


def unit_id(word: str, dimension: str) -> str:
    return f"{word}::{dimension}"


def build_reliability_matrix(
    records: Iterable,
    raters: Sequence[str],
    word_of: Optional[Mapping[str, str]] = None,
) -> ReliabilityMatrix:
    """Binarize emotion annotation records into a units x raters matrix.

    One binary unit per (word, dimension), ten per word. A rater's cell is 1
    if they selected the dimension and 0 if they responded without selecting
    it; it is missing when the rater skipped the word or flagged it as a wrong
    word. Later records from the same rater on the same word overwrite earlier
    ones. ``word_of`` maps record task ids to words; by default the task id is
    taken as the word itself.
    """
    rater_list = list(raters)
    rater_set = set(rater_list)
    per_word: dict[str, dict[str, object]] = {}
    word_order: list[str] = []
    for record in records:
        if record.annotator_id not in rater_set:
            raise ReliabilityError(f"record from unknown rater {record.annotator_id!r}")
        word = word_of.get(record.task_id, record.task_id) if word_of else record.task_id
        if word not in per_word:
            per_word[word] = {}
            word_order.append(word)
        per_word[word][record.annotator_id] = record
    units = [unit_id(w, d) for w in word_order for d in EMOTION_DIMENSIONS]
    values: dict[tuple[str, str], Value] = {}
    for word in word_order:
        for rater, record in per_word[word].items():
            response = record.response
            if response.get("wrong_word"):
                continue
            labels = set(response.get("labels", ()))
            for dim in EMOTION_DIMENSIONS:
                values[(unit_id(word, dim), rater)] = 1 if dim in labels else 0
    return ReliabilityMatrix(units=units, raters=rater_list, values=values)


def write_matrix(matrix: ReliabilityMatrix, path: str | Path) -> None:
    """TSV interchange: header of rater ids, one row per unit, empty cell = missing."""
    lines = ["unit\t" + "\t".join(matrix.raters) + "\n"]
    for unit in matrix.units:
        cells = [
            str(matrix.values[(unit, r)]) if (unit, r) in matrix.values else ""
            for r in matrix.raters
        ]
        lines.append(unit + "\t" + "\t".join(cells) + "\n")
    atomic_write(path, "".join(lines))


def read_matrix(path: str | Path) -> ReliabilityMatrix:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header:
            raise ReliabilityError(f"{path}: empty matrix file")
        raters = header.split("\t")[1:]
        units: list[str] = []
        values: dict[tuple[str, str], Value] = {}
        for row_no, raw in enumerate(fh, start=2):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            cells = line.split("\t")
            if len(cells) != len(raters) + 1:
                raise ReliabilityError(
                    f"{path}:{row_no}: expected {len(raters) + 1} columns, got {len(cells)}"
                )
            unit = cells[0]
            units.append(unit)
            for rater, cell in zip(raters, cells[1:]):
                if cell != "":
                    values[(unit, rater)] = cell
    return ReliabilityMatrix(units=units, raters=raters, values=values)
