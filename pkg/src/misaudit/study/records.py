"""Study definition, annotation records, and the append-only record store."""

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DomainError, IngestionError, IntegrityError
from ..registry import ModalityRegistry, ModalitySubset

STUDY_SCHEMA = "misaudit/study@1"

CONFIDENCE_RANGE = (1, 5)


@dataclass(frozen=True)
class AnnotationRecord:
    """One submitted answer: who, what, under which condition, how sure."""

    annotator_id: str
    question_id: str
    condition: ModalitySubset
    chosen_index: int
    confidence: int
    submitted_at: float

    def __post_init__(self):
        if not self.annotator_id:
            raise DomainError("annotator_id must be non-empty")
        if not self.question_id:
            raise DomainError("question_id must be non-empty")
        if self.chosen_index < 0:
            raise DomainError(f"chosen_index {self.chosen_index} negative")
        lo, hi = CONFIDENCE_RANGE
        if not lo <= self.confidence <= hi:
            raise DomainError(
                f"confidence {self.confidence} outside {lo}..{hi}"
            )

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.annotator_id, self.question_id, self.condition.mask)

    def to_record(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "question_id": self.question_id,
            "condition_mask": self.condition.mask,
            "chosen_index": self.chosen_index,
            "confidence": self.confidence,
            "submitted_at": self.submitted_at,
        }

    @classmethod
    def from_record(cls, record: dict) -> "AnnotationRecord":
        return cls(
            annotator_id=record["annotator_id"],
            question_id=record["question_id"],
            condition=ModalitySubset(record["condition_mask"]),
            chosen_index=record["chosen_index"],
            confidence=record["confidence"],
            submitted_at=record["submitted_at"],
        )


@dataclass(frozen=True)
class GroupAssignment:
    """Split-group design: per group one singleton condition, then everyone
    answers the combined (full) condition."""

    groups: dict  # group_id -> {"annotators": tuple[str], "condition": ModalitySubset}
    second_condition: ModalitySubset

    def validate(self, registry: ModalityRegistry) -> None:
        if self.second_condition != registry.full_set():
            raise IntegrityError("second condition must be the full modality set")
        seen_annotators: set[str] = set()
        seen_conditions: set[int] = set()
        for group_id, group in self.groups.items():
            condition = group["condition"]
            if len(condition) != 1:
                raise IntegrityError(
                    f"group {group_id}: first condition must be a single modality"
                )
            if condition.mask in seen_conditions:
                raise IntegrityError(
                    f"group {group_id}: duplicate first condition"
                )
            seen_conditions.add(condition.mask)
            if not group["annotators"]:
                raise IntegrityError(f"group {group_id}: no annotators")
            for annotator in group["annotators"]:
                if annotator in seen_annotators:
                    raise IntegrityError(
                        f"annotator {annotator!r} appears in two groups"
                    )
                seen_annotators.add(annotator)
        if len(seen_conditions) != registry.k:
            raise IntegrityError(
                f"need one group per modality ({registry.k}), got {len(seen_conditions)}"
            )

    def annotators(self) -> list[str]:
        out = []
        for group_id in sorted(self.groups):
            out.extend(self.groups[group_id]["annotators"])
        return out

    def first_condition_of(self, annotator_id: str) -> ModalitySubset:
        for group in self.groups.values():
            if annotator_id in group["annotators"]:
                return group["condition"]
        raise KeyError(annotator_id)


@dataclass(frozen=True)
class StudyDefinition:
    """Frozen description of one study: who annotates what, in which order."""

    modalities: tuple[str, ...]
    question_ids: tuple[str, ...]
    assignment: GroupAssignment
    seed: int
    dataset_root: str | None = None

    def registry(self) -> ModalityRegistry:
        return ModalityRegistry(self.modalities)

    @classmethod
    def load(cls, path) -> "StudyDefinition":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise IngestionError(f"missing study definition {path}", path=str(path))
        except json.JSONDecodeError as exc:
            raise IngestionError(
                f"invalid JSON in {path}: {exc.msg}", path=str(path), line=exc.lineno
            )
        if data.get("schema") != STUDY_SCHEMA:
            raise IngestionError(f"{path}: expected schema {STUDY_SCHEMA}")
        registry = ModalityRegistry(tuple(data["modalities"]))
        groups = {}
        for group_id, group in data["groups"].items():
            groups[group_id] = {
                "annotators": tuple(group["annotators"]),
                "condition": registry.parse_label(group["condition"]),
            }
        assignment = GroupAssignment(
            groups=groups, second_condition=registry.full_set()
        )
        assignment.validate(registry)
        question_ids = tuple(data["question_ids"])
        if len(set(question_ids)) != len(question_ids):
            raise IngestionError(f"{path}: duplicate question ids")
        return cls(
            modalities=registry.names,
            question_ids=question_ids,
            assignment=assignment,
            seed=int(data.get("seed", 0)),
            dataset_root=data.get("dataset_root"),
        )


class RecordStore:
    """Append-only JSONL store; the in-memory snapshot keeps the latest
    record per (annotator, question, condition)."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._snapshot: dict[tuple[str, str, int], AnnotationRecord] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        record = AnnotationRecord.from_record(json.loads(line))
                        self._snapshot[record.key] = record
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def add(self, record: AnnotationRecord) -> None:
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record.to_record(), sort_keys=True) + "\n")
                fh.flush()
            self._snapshot[record.key] = record

    def records(self) -> list[AnnotationRecord]:
        with self._lock:
            return sorted(self._snapshot.values(), key=lambda r: r.key)

    def __len__(self) -> int:
        with self._lock:
            return len(self._snapshot)
