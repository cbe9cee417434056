"""Prompt construction.

The system text below is rendered byte-for-byte (including its trailing
spaces) with two placeholders swapped per condition: "[Input Modality]"
becomes the modality phrase and "[Input Modality's Content Segment]" the
evidence phrase ("timestamp ranges", "image numbers", or both). The user
turn appends each question with lettered answer choices and, when the
condition includes subtitles, the subtitle text overlapping the question's
localized window. Images are attached out of band by the client, in segment
order.
"""

from dataclasses import dataclass

from ..dataset.model import ClipAssets, NormalizedQuestion, SegmentPlan
from ..errors import ContractError
from ..registry import ModalityRegistry, ModalitySubset
from .conditions import ConditionSpec, condition_spec

ANSWER_LETTERS = "abcde"

_TEMPLATE_LINES = [
    "You are tasked with answering a question with five multiple-choice options for a clip. For each clip, you will be given a question and five answer choices, along with the subtitles from the video.",
    "",
    "Select the most likely answer from the given choices based solely on the information provided in the [Input Modality]. Do not make assumptions or rely on external knowledge. If the [Input Modality] do not contain enough information to confidently answer the question, choose the answer that is most plausible given the limited context.",
    "",
    "In addition to selecting the most likely answer, specify the [Input Modality's Content Segment] where the relevant information for the correct answer can be found. Also, state the reason you chose the answer. The reason should be no longer than two sentences. If you made a random guess because you were not able to select any plausible answer, then put 'None' in the [Input Modality's Content Segment] but keep the random answer and state the reason as \"Could not find answer, I selected random answer.\".  ",
    "",
    "For each video clip, format your output as follows: ",
    '"{ "Question ID 1": {',
    '            "Q":"How did ~?", ',
    '            "Answer Candidates" : {',
    '                "a": "", "b": "", "c": "", "d": "", "e": "" ',
    "            },",
    '            "Answer": "b",',
    "            \"[Input Modality's Content Segment]\": [],",
    '            "Reason": "The answer ..."',
    "        },",
    '    "Question ID 2": {}',
    '}"',
]
SYSTEM_TEMPLATE = "\n".join(_TEMPLATE_LINES)

MODALITY_PLACEHOLDER = "[Input Modality]"
SEGMENT_PLACEHOLDER = "[Input Modality's Content Segment]"


@dataclass(frozen=True)
class PromptParams:
    """Decoding settings; top_p and seed are fixed for reproducibility."""

    model_name: str
    max_tokens: int = 1024
    top_p: float = 0.0
    seed: int = 123
    image_detail: str = "auto"

    def to_record(self) -> dict:
        return {
            "model_name": self.model_name,
            "max_tokens": self.max_tokens,
            "top_p": self.top_p,
            "seed": self.seed,
            "image_detail": self.image_detail,
        }


@dataclass(frozen=True)
class PromptItem:
    question_id: str
    block: str
    subtitle_text: str | None = None
    image_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class PromptDocument:
    condition: ModalitySubset
    system_text: str
    items: tuple[PromptItem, ...]
    params: PromptParams
    segment_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ContractError("prompt must carry at least one item")
        with_images = [it for it in self.items if it.image_refs]
        if with_images and len(self.items) != 1:
            raise ContractError("prompts carrying images must hold exactly one item")
        if not with_images and len(self.items) > 5:
            raise ContractError(
                f"text-only prompts batch at most 5 items, got {len(self.items)}"
            )

    @property
    def image_refs(self) -> tuple[str, ...]:
        return self.items[0].image_refs if self.items else ()


def render_system_text(spec: ConditionSpec) -> str:
    text = SYSTEM_TEMPLATE.replace(SEGMENT_PLACEHOLDER, spec.segment_phrase)
    return text.replace(MODALITY_PLACEHOLDER, spec.modality_phrase)


def format_seconds(value: float) -> str:
    """Compact timestamp: two decimals max, trailing zeros dropped."""
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    return text if text else "0"


def _question_block(question: NormalizedQuestion, subtitle_text: str | None) -> str:
    if len(question.choices) > len(ANSWER_LETTERS):
        raise ContractError(
            f"{question.question_id}: at most {len(ANSWER_LETTERS)} choices supported"
        )
    lines = [
        f"Question ID: {question.question_id}",
        f"Q: {question.text}",
        "Answer Candidates:",
    ]
    for letter, choice in zip(ANSWER_LETTERS, question.choices):
        lines.append(f"{letter}: {choice}")
    if subtitle_text is not None:
        lines.append("Subtitles:")
        if subtitle_text:
            lines.append(subtitle_text)
    return "\n".join(lines)


def _windowed_subtitles(assets: ClipAssets, question: NormalizedQuestion) -> str:
    parts = []
    start, end = question.window
    for entry in assets.subtitles:
        if entry.start <= end and entry.end >= start:
            stamp = f"[{format_seconds(entry.start)}-{format_seconds(entry.end)}]"
            parts.append(f"{stamp} {entry.rendered()}")
    return "\n".join(parts)


def build_prompt(
    questions,
    condition: ModalitySubset,
    assets,
    *,
    registry: ModalityRegistry,
    params: PromptParams,
    plan: SegmentPlan | None = None,
    segment_index: int = 0,
) -> PromptDocument:
    """Render one prompt for a batch of questions under a condition.

    `assets` is either the single clip shared by all questions or a mapping
    clip_id -> ClipAssets (text-only batches may span clips). Image-bearing
    conditions require a SegmentPlan and exactly one question; the document
    references the plan's segment_index-th chunk of frames.
    """
    questions = list(questions)
    if not questions:
        raise ContractError("no questions to prompt")
    spec = condition_spec(condition, registry)
    if len(questions) > spec.batch_size:
        raise ContractError(
            f"{spec.label}: at most {spec.batch_size} question(s) per prompt, "
            f"got {len(questions)}"
        )

    def assets_for(question: NormalizedQuestion) -> ClipAssets:
        if isinstance(assets, ClipAssets):
            return assets
        return assets[question.clip_id]

    image_refs: tuple[str, ...] = ()
    if spec.wants_images:
        if plan is None:
            raise ContractError(f"{spec.label}: image condition requires a frame plan")
        if not 0 <= segment_index < len(plan.segments):
            raise ContractError(
                f"segment_index {segment_index} out of range for {len(plan.segments)}"
            )
        clip = assets_for(questions[0])
        segment = plan.segments[segment_index]
        if len(segment) > spec.image_limit:
            raise ContractError(
                f"{spec.label}: segment of {len(segment)} frames exceeds "
                f"limit {spec.image_limit}"
            )
        image_refs = tuple(str(clip.frame_path(clip.frames[i])) for i in segment)
    elif plan is not None:
        raise ContractError(f"{spec.label}: text-only condition takes no frame plan")

    items = []
    for question in questions:
        subtitle_text = None
        if spec.wants_subtitles:
            subtitle_text = _windowed_subtitles(assets_for(question), question)
        items.append(
            PromptItem(
                question_id=question.question_id,
                block=_question_block(question, subtitle_text),
                subtitle_text=subtitle_text,
                image_refs=image_refs if spec.wants_images else (),
            )
        )
    return PromptDocument(
        condition=condition,
        system_text=render_system_text(spec),
        items=tuple(items),
        params=params,
        segment_index=segment_index if spec.wants_images else 0,
    )


def user_text(doc: PromptDocument) -> str:
    return "\n\n".join(item.block for item in doc.items)


def prompt_text(doc: PromptDocument) -> str:
    """Canonical full text of the prompt; cache keys hash this."""
    return doc.system_text + "\n\n" + user_text(doc)
