"""Probe result log: per-(question, condition) outcomes plus aggregation.

The log is serialized as JSON Lines with a schema header. It carries no
timestamps and is written in sorted order, so rebuilding a run from cached
responses reproduces the file byte for byte.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DomainError, IntegrityError
from ..profiles import AccuracyProfile
from ..registry import ModalityRegistry, ModalitySubset
from .parsing import ProbeOutcome

LOG_SCHEMA = "misaudit/response-log@1"


def aggregate_segments(outcomes, correct_index: int) -> int:
    """1 iff any segment named the correct choice.

    A letter accompanied by a random-guess admission still counts when it
    happens to be right; answers without a letter never do.
    """
    outcomes = list(outcomes)
    if not outcomes:
        raise DomainError("cannot aggregate zero outcomes")
    return int(any(o.chosen_index == correct_index for o in outcomes))


@dataclass(frozen=True)
class QuestionConditionResult:
    question_id: str
    condition_mask: int
    correct: int
    outcomes: tuple[ProbeOutcome, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if not self.outcomes:
            raise IntegrityError(
                f"{self.question_id}: every probed pair needs at least one outcome"
            )
        if self.correct not in (0, 1):
            raise IntegrityError(f"correct must be 0 or 1, got {self.correct!r}")

    def to_record(self) -> dict:
        return {
            "question_id": self.question_id,
            "condition_mask": self.condition_mask,
            "correct": self.correct,
            "outcomes": [o.to_record() for o in self.outcomes],
        }

    @classmethod
    def from_record(cls, record: dict) -> "QuestionConditionResult":
        return cls(
            question_id=record["question_id"],
            condition_mask=record["condition_mask"],
            correct=record["correct"],
            outcomes=tuple(ProbeOutcome.from_record(o) for o in record["outcomes"]),
        )


@dataclass
class ResponseLog:
    run_id: str
    dataset: str
    model_name: str
    modalities: tuple[str, ...]
    entries: list[QuestionConditionResult] = field(default_factory=list)

    def sorted_entries(self) -> list[QuestionConditionResult]:
        return sorted(self.entries, key=lambda e: (e.question_id, e.condition_mask))

    def write(self, path: Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "schema": LOG_SCHEMA,
                "run_id": self.run_id,
                "dataset": self.dataset,
                "model_name": self.model_name,
                "modalities": list(self.modalities),
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for entry in self.sorted_entries():
                fh.write(json.dumps(entry.to_record(), sort_keys=True) + "\n")

    @classmethod
    def read(cls, path: Path) -> "ResponseLog":
        with open(path, encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        if not lines or lines[0].get("schema") != LOG_SCHEMA:
            raise IntegrityError(f"{path}: not a {LOG_SCHEMA} file")
        header = lines[0]
        return cls(
            run_id=header["run_id"],
            dataset=header["dataset"],
            model_name=header["model_name"],
            modalities=tuple(header["modalities"]),
            entries=[QuestionConditionResult.from_record(r) for r in lines[1:]],
        )


def score_profiles(log: ResponseLog, registry: ModalityRegistry) -> list[AccuracyProfile]:
    """Fold aggregated bits into one binary profile per question."""
    if tuple(log.modalities) != registry.names:
        raise IntegrityError(
            f"log modalities {log.modalities} do not match registry {registry.names}"
        )
    k = registry.k
    expected_masks = list(range(1, (1 << k)))
    by_question: dict[str, dict[int, int]] = {}
    for entry in log.entries:
        slot = by_question.setdefault(entry.question_id, {})
        if entry.condition_mask in slot:
            raise IntegrityError(
                f"{entry.question_id}: duplicate condition mask {entry.condition_mask}"
            )
        slot[entry.condition_mask] = entry.correct

    profiles = []
    for question_id in sorted(by_question):
        bits_by_mask = by_question[question_id]
        unknown = [m for m in bits_by_mask if not 1 <= m <= expected_masks[-1]]
        if unknown:
            raise IntegrityError(f"{question_id}: unknown condition masks {unknown}")
        missing = [m for m in expected_masks if m not in bits_by_mask]
        if missing:
            labels = ", ".join(ModalitySubset(m).label(registry) for m in missing)
            raise IntegrityError(f"{question_id}: missing condition(s) {labels}")
        bits = [bits_by_mask[m] for m in expected_masks]
        profiles.append(AccuracyProfile.from_bits(question_id, k, bits))
    return profiles
