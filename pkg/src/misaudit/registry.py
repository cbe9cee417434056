"""Modality registry and subsets.

A registry fixes the ordered set of modality labels for an analysis run;
subsets of it are represented as bitmasks (bit ``i`` set means modality ``i``
is present). Only non-empty subsets exist: the empty combination is never a
valid answering condition.
"""

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ConfigurationError, DomainError

MIN_MODALITIES = 2
MAX_MODALITIES = 16

SUBSET_LABEL_SEP = "+"


@dataclass(frozen=True, order=True)
class ModalitySubset:
    """A non-empty set of modality indices, encoded as a bitmask."""

    mask: int

    def __post_init__(self):
        if self.mask <= 0:
            raise DomainError("modality subset must be non-empty")

    @classmethod
    def of(cls, *indices: int) -> "ModalitySubset":
        if not indices:
            raise DomainError("modality subset must be non-empty")
        mask = 0
        for i in indices:
            if i < 0:
                raise DomainError(f"negative modality index: {i}")
            mask |= 1 << i
        return cls(mask)

    def indices(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.mask.bit_length()) if self.mask >> i & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __contains__(self, index: int) -> bool:
        return index >= 0 and self.mask >> index & 1 == 1

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def issubset(self, other: "ModalitySubset") -> bool:
        return self.mask & other.mask == self.mask

    def isdisjoint(self, other: "ModalitySubset") -> bool:
        return self.mask & other.mask == 0

    def label(self, registry: "ModalityRegistry") -> str:
        """Human/wire label, e.g. ``video+subtitle``."""
        names = registry.names
        return SUBSET_LABEL_SEP.join(names[i] for i in self.indices())


@dataclass(frozen=True)
class ModalityRegistry:
    """Ordered list of modality labels; index <-> name is stable for a run."""

    names: tuple[str, ...]

    def __init__(self, names: Iterable[str]):
        object.__setattr__(self, "names", tuple(names))
        k = len(self.names)
        if not MIN_MODALITIES <= k <= MAX_MODALITIES:
            raise ConfigurationError(
                f"registry needs {MIN_MODALITIES}..{MAX_MODALITIES} modalities, got {k}"
            )
        if any(not n for n in self.names):
            raise ConfigurationError("modality names must be non-empty")
        if len(set(self.names)) != k:
            raise ConfigurationError(f"modality names must be unique: {self.names}")

    @property
    def k(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise DomainError(f"unknown modality {name!r}; registry has {self.names}")

    def subset_of(self, *names: str) -> ModalitySubset:
        return ModalitySubset.of(*(self.index(n) for n in names))

    def full_set(self) -> ModalitySubset:
        return ModalitySubset((1 << self.k) - 1)

    def validate_subset(self, subset: ModalitySubset) -> ModalitySubset:
        if subset.mask >= 1 << self.k:
            raise DomainError(
                f"subset mask {subset.mask} has indices outside registry of size {self.k}"
            )
        return subset

    def parse_label(self, label: str) -> ModalitySubset:
        parts = label.split(SUBSET_LABEL_SEP)
        return self.subset_of(*parts)


def enumerate_subsets(registry: ModalityRegistry) -> list[ModalitySubset]:
    """All 2^k - 1 non-empty subsets in canonical order (ascending mask)."""
    return [ModalitySubset(mask) for mask in range(1, 1 << registry.k)]
