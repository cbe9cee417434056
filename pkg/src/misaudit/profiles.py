"""Per-question accuracy profiles.

An :class:`AccuracyProfile` maps every non-empty modality subset to an exact
rational performance value in [0, 1]. The default probing pipeline produces
binary values (correct / incorrect), but fractional metrics are accepted so
the same math covers generalized performance measures.

All arithmetic downstream is exact: values are :class:`fractions.Fraction`,
never floats. Floats are rejected at construction because they silently break
the exact zero-tests used by categorization.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import DomainError, IntegrityError
from .registry import ModalitySubset

_ONE = Fraction(1)
_ZERO = Fraction(0)


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    raise DomainError(
        f"profile values must be int or Fraction, got {type(value).__name__}; "
        "floats are not accepted (exact arithmetic required)"
    )


@dataclass(frozen=True)
class AccuracyProfile:
    """Total map from every non-empty subset of a k-modality set to [0, 1]."""

    question_id: str
    k: int
    values: Mapping[ModalitySubset, Fraction] = field(repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise DomainError(f"k must be positive, got {self.k}")
        expected = (1 << self.k) - 1
        checked: dict[ModalitySubset, Fraction] = {}
        for subset, value in self.values.items():
            if subset.mask >= 1 << self.k:
                raise IntegrityError(
                    f"profile {self.question_id!r}: subset mask {subset.mask} "
                    f"outside k={self.k}"
                )
            frac = _as_fraction(value)
            if not _ZERO <= frac <= _ONE:
                raise IntegrityError(
                    f"profile {self.question_id!r}: value {frac} for mask "
                    f"{subset.mask} outside [0, 1]"
                )
            checked[subset] = frac
        if len(checked) != expected:
            missing = [
                m for m in range(1, 1 << self.k) if ModalitySubset(m) not in checked
            ]
            raise IntegrityError(
                f"profile {self.question_id!r}: expected {expected} subsets, "
                f"got {len(checked)} (missing masks {missing[:8]})"
            )
        object.__setattr__(self, "values", checked)

    def value(self, subset: ModalitySubset) -> Fraction:
        try:
            return self.values[subset]
        except KeyError:
            raise IntegrityError(
                f"profile {self.question_id!r} has no value for mask {subset.mask}"
            )

    def is_binary(self) -> bool:
        return all(v in (_ZERO, _ONE) for v in self.values.values())

    @classmethod
    def from_bits(cls, question_id: str, k: int, bits) -> "AccuracyProfile":
        """Build a binary profile from bits listed in ascending-mask order."""
        masks = range(1, 1 << k)
        bits = list(bits)
        if len(bits) != len(masks):
            raise IntegrityError(
                f"expected {len(masks)} bits for k={k}, got {len(bits)}"
            )
        values = {ModalitySubset(m): Fraction(int(b)) for m, b in zip(masks, bits)}
        return cls(question_id, k, values)

    def to_record(self) -> dict:
        """Serializable record: {question_id, k, values: [{mask, num, den}]}."""
        return {
            "question_id": self.question_id,
            "k": self.k,
            "values": [
                {"mask": s.mask, "num": v.numerator, "den": v.denominator}
                for s, v in sorted(self.values.items())
            ],
        }

    @classmethod
    def from_record(cls, record: dict) -> "AccuracyProfile":
        values = {
            ModalitySubset(entry["mask"]): Fraction(entry["num"], entry["den"])
            for entry in record["values"]
        }
        return cls(record["question_id"], record["k"], values)
