"""Confidence-weighted accuracy, human profiles, unanimity filtering.

All accuracy arithmetic is exact: confidences weight as conf/5 and the
rounding threshold is strictly greater than 1/2, so a value of exactly 1/2
rounds down.
"""

from fractions import Fraction

from ..errors import DomainError, IntegrityError
from ..profiles import AccuracyProfile
from ..registry import ModalityRegistry, ModalitySubset

CONFIDENCE_DENOMINATOR = 5


def weighted_modality_accuracy(records, correct_index: int) -> tuple[Fraction, int]:
    """(value, rounded) for one (question, condition) group of records.

    value = mean over submitters of correctness * confidence/5; rounded is
    1 only when the value exceeds 1/2.
    """
    records = list(records)
    if not records:
        raise DomainError("no records for this (question, condition)")
    total = Fraction(0)
    for record in records:
        accuracy = 1 if record.chosen_index == correct_index else 0
        total += Fraction(accuracy * record.confidence, CONFIDENCE_DENOMINATOR)
    value = total / len(records)
    return value, int(value > Fraction(1, 2))


def _grouped(records):
    groups: dict[tuple[str, int], list] = {}
    for record in records:
        groups.setdefault((record.question_id, record.condition.mask), []).append(
            record
        )
    return groups


def human_profiles(
    records, questions, registry: ModalityRegistry
) -> list[AccuracyProfile]:
    """One binary profile per question from rounded weighted accuracies."""
    groups = _grouped(records)
    k = registry.k
    masks = list(range(1, 1 << k))
    missing = []
    for question in questions:
        for mask in masks:
            if (question.question_id, mask) not in groups:
                missing.append(
                    f"{question.question_id}/{ModalitySubset(mask).label(registry)}"
                )
    if missing:
        raise IntegrityError(
            "no annotation records for: " + ", ".join(sorted(missing))
        )
    profiles = []
    for question in sorted(questions, key=lambda q: q.question_id):
        bits = []
        for mask in masks:
            _, rounded = weighted_modality_accuracy(
                groups[(question.question_id, mask)], question.correct_index
            )
            bits.append(rounded)
        profiles.append(AccuracyProfile.from_bits(question.question_id, k, bits))
    return profiles


def unanimous_filter(records, questions) -> list:
    """Questions where every answered condition shows one shared correctness
    bit across its annotators. Questions without any records are dropped."""
    groups = _grouped(records)
    kept = []
    for question in questions:
        condition_groups = [
            recs
            for (question_id, _), recs in groups.items()
            if question_id == question.question_id
        ]
        if not condition_groups:
            continue
        unanimous = all(
            len({r.chosen_index == question.correct_index for r in recs}) == 1
            for recs in condition_groups
        )
        if unanimous:
            kept.append(question)
    return kept
