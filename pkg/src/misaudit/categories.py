"""Question categorization from importance scores.

Five mutually exclusive classes cover every profile:

* agnostic-correct / agnostic-incorrect: every subset answers right / wrong;
* complementary: every modality has strictly positive importance (with two
  modalities: answerable only when both are provided together);
* biased toward one modality j: importance >= 0 for j and <= 0 (and unequal
  to j's) for every other modality, i.e. answerable from j alone;
* none: everything unmatched, e.g. mutual interference (correct alone,
  wrong together).

Comparisons are exact rational zero-tests; no floats are involved.
"""

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError
from .profiles import AccuracyProfile
from .registry import ModalityRegistry
from .scoring import MISVector, mis_vector

_ONE = Fraction(1)
_ZERO = Fraction(0)


class CategoryKind(enum.Enum):
    BIASED = "biased"
    COMPLEMENTARY = "complementary"
    AGNOSTIC_CORRECT = "agnostic_correct"
    AGNOSTIC_INCORRECT = "agnostic_incorrect"
    NONE = "none"


@dataclass(frozen=True)
class QuestionCategory:
    """Tagged category; ``modality`` is set only for the biased kind."""

    kind: CategoryKind
    modality: int | None = None

    def __post_init__(self):
        if self.kind is CategoryKind.BIASED:
            if self.modality is None:
                raise DomainError("biased category requires a modality index")
        elif self.modality is not None:
            raise DomainError(f"{self.kind.value} category carries no modality")

    @classmethod
    def biased(cls, modality: int) -> "QuestionCategory":
        return cls(CategoryKind.BIASED, modality)

    @classmethod
    def complementary(cls) -> "QuestionCategory":
        return cls(CategoryKind.COMPLEMENTARY)

    @classmethod
    def agnostic_correct(cls) -> "QuestionCategory":
        return cls(CategoryKind.AGNOSTIC_CORRECT)

    @classmethod
    def agnostic_incorrect(cls) -> "QuestionCategory":
        return cls(CategoryKind.AGNOSTIC_INCORRECT)

    @classmethod
    def none(cls) -> "QuestionCategory":
        return cls(CategoryKind.NONE)

    def token(self, registry: ModalityRegistry | None = None) -> str:
        """Stable label for logs and agreement statistics."""
        if self.kind is CategoryKind.BIASED:
            name = (
                registry.names[self.modality]
                if registry is not None
                else str(self.modality)
            )
            return f"biased:{name}"
        return self.kind.value

    def to_json(self, registry: ModalityRegistry | None = None) -> dict:
        record: dict = {"kind": self.kind.value}
        if self.kind is CategoryKind.BIASED:
            record["modality"] = self.modality
            if registry is not None:
                record["modality_name"] = registry.names[self.modality]
        return record

    @classmethod
    def from_json(cls, record: dict) -> "QuestionCategory":
        return cls(CategoryKind(record["kind"]), record.get("modality"))


def categorize(
    profile: AccuracyProfile, vector: MISVector | None = None
) -> QuestionCategory:
    """Classify one question; total over all complete profiles.

    Rules are evaluated in order: uniform-correct, uniform-incorrect,
    all-positive (complementary), single-dominant (biased), otherwise none.
    """
    if vector is None:
        vector = mis_vector(profile)
    values = profile.values.values()
    if all(v == _ONE for v in values):
        return QuestionCategory.agnostic_correct()
    if all(v == _ZERO for v in values):
        return QuestionCategory.agnostic_incorrect()
    if all(s > 0 for s in vector.scores):
        return QuestionCategory.complementary()
    for j, score in enumerate(vector.scores):
        if score < 0:
            continue
        if all(
            other <= 0 and other != score
            for i, other in enumerate(vector.scores)
            if i != j
        ):
            # At most one index can qualify: a second one would force both
            # scores to be 0 and equal, violating the inequality.
            return QuestionCategory.biased(j)
    return QuestionCategory.none()
