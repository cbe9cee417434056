"""Run adapters over original or permuted inputs and render delta tables."""

import json
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..dataset import FRAME_LIMIT_VIDEO_WITH_SUBTITLE, frame_plan, subtitle_window
from ..errors import ContractError, IngestionError, PlanningError
from ..registry import ModalityRegistry
from .adapters import AdapterRequest
from .plan import PermutationPlan

VIDEO_MODALITY = "video"

# evaluation aborts when more than this share of invocations fail
FAILURE_ABORT_FRACTION = Fraction(1, 5)

RESULT_SCHEMA = "misaudit/permutation-result@1"


@dataclass(frozen=True)
class QuestionOutcome:
    question_id: str
    chosen_index: int | None
    correct: bool
    failed: bool


@dataclass(frozen=True)
class EvaluationResult:
    adapter_name: str
    variant: str  # "original" or "permuted:<modality name>"
    outcomes: tuple[QuestionOutcome, ...]

    @property
    def accuracy(self) -> Fraction:
        if not self.outcomes:
            raise PlanningError("no outcomes to score")
        return Fraction(
            sum(1 for o in self.outcomes if o.correct), len(self.outcomes)
        )

    @property
    def failures(self) -> int:
        return sum(1 for o in self.outcomes if o.failed)

    def question_ids(self) -> tuple[str, ...]:
        return tuple(o.question_id for o in self.outcomes)

    def to_json(self) -> dict:
        return {
            "schema": RESULT_SCHEMA,
            "adapter": self.adapter_name,
            "variant": self.variant,
            "accuracy": [self.accuracy.numerator, self.accuracy.denominator],
            "outcomes": [
                {
                    "question_id": o.question_id,
                    "chosen_index": o.chosen_index,
                    "correct": o.correct,
                    "failed": o.failed,
                }
                for o in self.outcomes
            ],
        }

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path) -> "EvaluationResult":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IngestionError(f"cannot read result: {exc}", path=str(path))
        if not isinstance(data, dict) or data.get("schema") != RESULT_SCHEMA:
            raise IngestionError(
                f"expected schema {RESULT_SCHEMA}", path=str(path)
            )
        outcomes = tuple(
            QuestionOutcome(
                question_id=rec["question_id"],
                chosen_index=rec["chosen_index"],
                correct=rec["correct"],
                failed=rec["failed"],
            )
            for rec in data["outcomes"]
        )
        return cls(
            adapter_name=data["adapter"], variant=data["variant"], outcomes=outcomes
        )


def _subtitle_source(question, assets, plan, subtitle_indices):
    """Genuine subtitle text, unless the plan permutes a subtitle-channel
    modality; donor text is windowed by the donor's own window of the same
    duration, anchored at the donor clip's start."""
    if plan is not None and plan.target_modality in subtitle_indices:
        donor = assets[plan.entries[question.question_id]]
        duration = question.window[1] - question.window[0]
        return subtitle_window(donor, (0.0, duration))
    return subtitle_window(assets[question.clip_id], question.window)


def _frame_source(question, assets, plan, video_index):
    if plan is not None and plan.target_modality == video_index:
        donor = assets[plan.entries[question.question_id]]
        duration = question.window[1] - question.window[0]
        source, window = donor, (0.0, duration)
    else:
        source, window = assets[question.clip_id], question.window
    selected = frame_plan(source, window, FRAME_LIMIT_VIDEO_WITH_SUBTITLE)
    return tuple(
        str(source.frame_path(source.frames[i])) for i in selected.frame_indices
    )


def adapter_request(
    question,
    assets: Mapping,
    registry: ModalityRegistry,
    plan: PermutationPlan | None = None,
) -> AdapterRequest:
    """Assemble the adapter inputs, substituting the donor clip's content
    for the plan's target modality while the other channel stays genuine."""
    if plan is not None and question.question_id not in plan.entries:
        raise PlanningError(
            f"{question.question_id}: not covered by the permutation plan"
        )
    video_index = (
        registry.names.index(VIDEO_MODALITY)
        if VIDEO_MODALITY in registry.names
        else -1
    )
    subtitle_indices = {
        i for i, name in enumerate(registry.names) if name != VIDEO_MODALITY
    }
    return AdapterRequest(
        question_id=question.question_id,
        question=question.text,
        choices=question.choices,
        subtitle_text=_subtitle_source(question, assets, plan, subtitle_indices),
        frames=_frame_source(question, assets, plan, video_index),
    )


def evaluate(
    adapter,
    questions: Sequence,
    assets: Mapping,
    registry: ModalityRegistry,
    plan: PermutationPlan | None = None,
    *,
    parallelism: int = 4,
) -> EvaluationResult:
    """Invoke the adapter per question; failures count as incorrect and are
    flagged, and more than 20% of them aborts the run."""
    questions = sorted(questions, key=lambda q: q.question_id)
    if not questions:
        raise PlanningError("no questions to evaluate")
    requests_ = [adapter_request(q, assets, registry, plan) for q in questions]

    def run_one(pair):
        question, request = pair
        try:
            chosen = adapter.invoke(request)
        except Exception as exc:
            return QuestionOutcome(
                question.question_id, None, correct=False, failed=True
            ), str(exc)
        return (
            QuestionOutcome(
                question.question_id,
                chosen,
                correct=chosen == question.correct_index,
                failed=False,
            ),
            None,
        )

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        settled = list(pool.map(run_one, zip(questions, requests_)))
    outcomes = tuple(outcome for outcome, _ in settled)
    errors = [err for _, err in settled if err is not None]
    if Fraction(len(errors), len(outcomes)) > FAILURE_ABORT_FRACTION:
        sample = "; ".join(errors[:3])
        raise ContractError(
            f"adapter {adapter.name!r} failed on {len(errors)}/{len(outcomes)} "
            f"questions (> 20%): {sample}"
        )
    if plan is None:
        variant = "original"
    else:
        variant = f"permuted:{registry.names[plan.target_modality]}"
    return EvaluationResult(
        adapter_name=adapter.name, variant=variant, outcomes=outcomes
    )
