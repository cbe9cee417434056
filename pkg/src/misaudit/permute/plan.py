"""Donor-clip assignment for feature permutation runs."""

import json
import random
import warnings
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

from ..categories import CategoryKind, QuestionCategory
from ..errors import IngestionError, PlanningError

PLAN_SCHEMA = "misaudit/permutation-plan@1"


def select_biased(categories: Mapping[str, QuestionCategory]) -> dict:
    """Per modality index, the question ids categorized Biased(j), sorted."""
    selected: dict[int, list[str]] = {}
    for question_id in sorted(categories):
        category = categories[question_id]
        if category.kind is CategoryKind.BIASED:
            selected.setdefault(category.modality, []).append(question_id)
    return selected


@dataclass(frozen=True)
class PermutationPlan:
    """question_id -> donor clip whose target-modality content replaces the
    question's own. cross_source records whether the donor had to come from
    a different source (show/channel), not merely a different clip."""

    target_modality: int
    entries: dict  # question_id -> donor_clip_id
    seed: int
    cross_source: bool

    def to_json(self) -> dict:
        return {
            "schema": PLAN_SCHEMA,
            "target_modality": self.target_modality,
            "seed": self.seed,
            "cross_source": self.cross_source,
            "entries": dict(sorted(self.entries.items())),
        }

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path) -> "PermutationPlan":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise IngestionError(f"missing plan {path}", path=str(path))
        if data.get("schema") != PLAN_SCHEMA:
            raise IngestionError(f"{path}: expected schema {PLAN_SCHEMA}")
        return cls(
            target_modality=data["target_modality"],
            entries=dict(data["entries"]),
            seed=data["seed"],
            cross_source=data["cross_source"],
        )


def build_permutation_plan(
    questions,
    assets: Mapping[str, object],
    target_modality: int,
    seed: int,
    *,
    cross_source: bool | None = None,
) -> PermutationPlan:
    """Seeded donor assignment: every question gets a donor clip different
    from its own, from a different source when the pool allows it.

    cross_source=None resolves automatically: active when the donor pool
    spans more than one source, otherwise relaxed to cross-clip with a
    warning. Forcing True on a single-source pool is a planning error.
    """
    questions = sorted(questions, key=lambda q: q.question_id)
    if not questions:
        raise PlanningError("no questions to plan for")
    clip_ids = sorted(assets)
    if len(clip_ids) < 2:
        raise PlanningError("donor pool needs at least 2 distinct clips")
    sources = {clip_id: assets[clip_id].source_id for clip_id in clip_ids}
    distinct_sources = set(sources.values())

    if cross_source is None:
        cross_source = len(distinct_sources) > 1
        if not cross_source:
            warnings.warn(
                "single-source asset pool: relaxing the cross-source "
                "constraint to cross-clip",
                stacklevel=2,
            )
    if cross_source and len(distinct_sources) < 2:
        raise PlanningError(
            "cross-source constraint requires at least 2 distinct sources, "
            f"got {len(distinct_sources)}"
        )

    rng = random.Random(seed)
    entries: dict[str, str] = {}
    for question in questions:
        own_clip = question.clip_id
        if cross_source:
            own_source = sources.get(own_clip)
            candidates = [c for c in clip_ids if sources[c] != own_source]
            constraint = "different source"
        else:
            candidates = [c for c in clip_ids if c != own_clip]
            constraint = "different clip"
        if not candidates:
            raise PlanningError(
                f"{question.question_id}: no donor clip satisfies the "
                f"{constraint} constraint"
            )
        entries[question.question_id] = rng.choice(candidates)
    return PermutationPlan(
        target_modality=target_modality,
        entries=entries,
        seed=seed,
        cross_source=cross_source,
    )
