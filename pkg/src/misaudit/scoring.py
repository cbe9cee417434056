"""Modality importance scoring.

The importance of a modality is the difference between average performance
over the subset families that include it (beyond its own singleton) and the
families that exclude it. Scores live in [-1, 1]: positive means the modality
adds signal, negative means it interferes, zero means it adds nothing beyond
the other modalities.

All computation is exact rational arithmetic.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .errors import DomainError, IntegrityError
from .profiles import AccuracyProfile
from .registry import ModalitySubset


def perf(profile: AccuracyProfile, family: Iterable[ModalitySubset]) -> Fraction:
    """Average performance over a family of non-empty subsets."""
    members = list(family)
    if not members:
        raise DomainError("performance over an empty family is undefined")
    total = Fraction(0)
    for subset in members:
        total += profile.value(subset)
    return total / len(members)


def positive_family(k: int, j: int) -> list[ModalitySubset]:
    """Subsets containing modality j with at least one other modality."""
    return [
        ModalitySubset(mask)
        for mask in range(1, 1 << k)
        if mask >> j & 1 and mask != 1 << j
    ]


def negative_family(k: int, j: int) -> list[ModalitySubset]:
    """Non-empty subsets excluding modality j."""
    return [ModalitySubset(mask) for mask in range(1, 1 << k) if not mask >> j & 1]


def mis(profile: AccuracyProfile, j: int) -> Fraction:
    """Importance score of modality j for one question; result in [-1, 1]."""
    k = profile.k
    if not 0 <= j < k:
        raise DomainError(f"modality index {j} outside registry of size {k}")
    included = positive_family(k, j)
    excluded = negative_family(k, j)
    expected = (1 << (k - 1)) - 1
    if len(included) != expected or len(excluded) != expected:
        raise IntegrityError(          # pragma: no cover - enumeration is total
            f"family sizes {len(included)}/{len(excluded)} != {expected} for k={k}"
        )
    score = perf(profile, included) - perf(profile, excluded)
    assert -1 <= score <= 1
    return score


@dataclass(frozen=True)
class MISVector:
    """Per-modality importance scores for one question."""

    question_id: str
    scores: tuple[Fraction, ...]

    def __len__(self) -> int:
        return len(self.scores)

    def __getitem__(self, j: int) -> Fraction:
        return self.scores[j]


def mis_vector(profile: AccuracyProfile) -> MISVector:
    """Importance score of every modality, in registry order."""
    return MISVector(
        question_id=profile.question_id,
        scores=tuple(mis(profile, j) for j in range(profile.k)),
    )


def mis_group(profile: AccuracyProfile, group: ModalitySubset) -> Fraction:
    """Importance of a modality combination (1 <= |group| <= k-1).

    Generalizes the single-modality score: the positive family is every
    strict superset of the group, the negative family is every non-empty
    subset disjoint from it.
    """
    k = profile.k
    full_mask = (1 << k) - 1
    if group.mask > full_mask:
        raise DomainError(f"group mask {group.mask} outside k={k}")
    if group.mask == full_mask:
        raise DomainError("group cannot be the full modality set (nothing excludes it)")
    included = [
        ModalitySubset(mask)
        for mask in range(1, 1 << k)
        if mask & group.mask == group.mask and mask != group.mask
    ]
    excluded = [
        ModalitySubset(mask) for mask in range(1, 1 << k) if mask & group.mask == 0
    ]
    return perf(profile, included) - perf(profile, excluded)
