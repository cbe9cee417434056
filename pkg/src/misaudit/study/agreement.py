"""Inter-annotator agreement statistics and the human-vs-machine report.

Both kappas run on exact rationals so the undefined-agreement guard
(expected agreement exactly 1) is an integer test, not a float epsilon.
"""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from ..categories import QuestionCategory
from ..errors import DomainError, UndefinedAgreementError
from ..registry import ModalityRegistry

HIGH_CONFIDENCE_FLOOR = 4  # bucket split: high is confidence > 3


def fleiss_kappa(ratings: Sequence[Sequence[int]]) -> Fraction:
    """Fleiss' kappa from an items x categories matrix of rater counts.

    Every row must sum to the same rater count n >= 2.
    """
    if len(ratings) < 2:
        raise DomainError("need at least 2 items")
    rows = [tuple(row) for row in ratings]
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise DomainError("ragged ratings matrix")
    if any(cell < 0 for row in rows for cell in row):
        raise DomainError("negative rater count")
    n = sum(rows[0])
    if n < 2:
        raise DomainError("need at least 2 raters per item")
    if any(sum(row) != n for row in rows):
        raise DomainError("every item must be rated by the same number of raters")

    items = len(rows)
    column_totals = [sum(row[j] for row in rows) for j in range(width)]
    if max(column_totals) == items * n:
        raise UndefinedAgreementError("all ratings fall in a single category")

    # P_i = (sum of squared cell counts - n) / (n (n - 1)); P_e = sum p_j^2
    p_bar = Fraction(
        sum(sum(cell * cell for cell in row) - n for row in rows),
        items * n * (n - 1),
    )
    p_e = sum(
        Fraction(total, items * n) ** 2 for total in column_totals
    )
    return (p_bar - p_e) / (1 - p_e)


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> Fraction:
    """Unweighted Cohen's kappa between two equal-length label sequences."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise DomainError("label sequences differ in length")
    n = len(a)
    if n < 2:
        raise DomainError("need at least 2 paired labels")

    categories = sorted(set(a) | set(b), key=str)
    counts_a = {c: a.count(c) for c in categories}
    counts_b = {c: b.count(c) for c in categories}
    # expected agreement 1 exactly iff sum n_a(c) n_b(c) == n^2
    expected_numerator = sum(counts_a[c] * counts_b[c] for c in categories)
    if expected_numerator == n * n:
        raise UndefinedAgreementError("expected agreement is 1")

    observed = Fraction(sum(1 for x, y in zip(a, b) if x == y), n)
    expected = Fraction(expected_numerator, n * n)
    return (observed - expected) / (1 - expected)


@dataclass(frozen=True)
class BucketStats:
    """Max/min/mean of per-annotator accuracies inside one bucket."""

    max_accuracy: Fraction
    min_accuracy: Fraction
    mean_accuracy: Fraction

    def to_record(self) -> dict:
        return {
            "max": str(self.max_accuracy),
            "min": str(self.min_accuracy),
            "mean": str(self.mean_accuracy),
        }


@dataclass(frozen=True)
class AgreementReport:
    """Human/machine comparison bundle.

    ``fleiss`` and ``cohen`` are None when agreement is undefined; absent
    confidence buckets are None, never zero-filled stats.
    """

    fleiss: Fraction | None
    cohen: Fraction | None
    combined_accuracy: BucketStats | None
    high_confidence: BucketStats | None
    low_confidence: BucketStats | None
    confusion: dict[str, dict[str, int]]

    def to_record(self) -> dict:
        record: dict = {
            "fleiss_kappa": None if self.fleiss is None else float(self.fleiss),
            "cohen_kappa": None if self.cohen is None else float(self.cohen),
            "confusion": {
                human: dict(sorted(row.items()))
                for human, row in sorted(self.confusion.items())
            },
            "confidence_buckets": {},
        }
        if self.combined_accuracy is not None:
            record["combined_accuracy"] = self.combined_accuracy.to_record()
        if self.high_confidence is not None:
            record["confidence_buckets"]["high"] = self.high_confidence.to_record()
        if self.low_confidence is not None:
            record["confidence_buckets"]["low"] = self.low_confidence.to_record()
        return record


def _bucket_stats(records, correct_of: Mapping[str, int]) -> BucketStats | None:
    per_annotator: dict[str, list[int]] = {}
    for record in records:
        per_annotator.setdefault(record.annotator_id, []).append(
            1 if record.chosen_index == correct_of[record.question_id] else 0
        )
    if not per_annotator:
        return None
    accuracies = [
        Fraction(sum(bits), len(bits)) for bits in per_annotator.values()
    ]
    return BucketStats(
        max_accuracy=max(accuracies),
        min_accuracy=min(accuracies),
        mean_accuracy=sum(accuracies, Fraction(0)) / len(accuracies),
    )


def _fleiss_matrix(combined_records, questions):
    """Option-count matrix over questions rated by every combined-condition
    annotator; questions with partial coverage are left out."""
    annotators = {r.annotator_id for r in combined_records}
    n = len(annotators)
    if n < 2:
        return []
    width = max(len(q.choices) for q in questions)
    by_question: dict[str, list] = {}
    for record in combined_records:
        by_question.setdefault(record.question_id, []).append(record)
    matrix = []
    for question in sorted(questions, key=lambda q: q.question_id):
        group = by_question.get(question.question_id, [])
        if len(group) != n:
            continue
        row = [0] * width
        for record in group:
            row[record.chosen_index] += 1
        matrix.append(row)
    return matrix


def agreement_report(
    records,
    questions,
    human_categories: Mapping[str, QuestionCategory],
    machine_categories: Mapping[str, QuestionCategory],
    registry: ModalityRegistry,
) -> AgreementReport:
    """Assemble kappas, combined-condition accuracy buckets, and the
    human x machine confusion matrix.

    Categories are compared on the question ids present in both mappings.
    Records for questions outside ``questions`` are ignored, so callers can
    report on a filtered subset (e.g. unanimous questions only). Undefined
    kappas are reported as None rather than raised.
    """
    correct_of = {q.question_id: q.correct_index for q in questions}
    full_mask = registry.full_set().mask
    combined = [
        r
        for r in records
        if r.condition.mask == full_mask and r.question_id in correct_of
    ]

    matrix = _fleiss_matrix(combined, questions)
    fleiss: Fraction | None = None
    if len(matrix) >= 2:
        try:
            fleiss = fleiss_kappa(matrix)
        except UndefinedAgreementError:
            fleiss = None

    aligned = sorted(set(human_categories) & set(machine_categories))
    confusion: dict[str, dict[str, int]] = {}
    for question_id in aligned:
        human = human_categories[question_id].token(registry)
        machine = machine_categories[question_id].token(registry)
        confusion.setdefault(human, {}).setdefault(machine, 0)
        confusion[human][machine] += 1

    cohen: Fraction | None = None
    if len(aligned) >= 2:
        try:
            cohen = cohen_kappa(
                [human_categories[qid].token(registry) for qid in aligned],
                [machine_categories[qid].token(registry) for qid in aligned],
            )
        except UndefinedAgreementError:
            cohen = None

    high = [r for r in combined if r.confidence >= HIGH_CONFIDENCE_FLOOR]
    low = [r for r in combined if r.confidence < HIGH_CONFIDENCE_FLOOR]
    return AgreementReport(
        fleiss=fleiss,
        cohen=cohen,
        combined_accuracy=_bucket_stats(combined, correct_of),
        high_confidence=_bucket_stats(high, correct_of),
        low_confidence=_bucket_stats(low, correct_of),
        confusion=confusion,
    )
