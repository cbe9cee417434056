"""Model-output parsing: JSON keyed by question id, one object per question."""

import json
from dataclasses import dataclass

from ..errors import DomainError, ResponseParseError
from .prompts import ANSWER_LETTERS, SEGMENT_PLACEHOLDER

RANDOM_GUESS_PHRASE = "Could not find answer, I selected random answer."


@dataclass(frozen=True)
class ProbeOutcome:
    """One model verdict for (question, condition, segment)."""

    question_id: str
    condition_mask: int
    segment_index: int
    chosen_index: int | None
    evidence: tuple | None
    reason: str
    raw: str
    answered_random: bool

    def __post_init__(self):
        if self.chosen_index is not None and self.chosen_index < 0:
            raise DomainError(f"chosen_index {self.chosen_index} negative")
        if self.evidence is not None:
            object.__setattr__(self, "evidence", tuple(self.evidence))

    def to_record(self) -> dict:
        return {
            "question_id": self.question_id,
            "condition_mask": self.condition_mask,
            "segment_index": self.segment_index,
            "chosen_index": self.chosen_index,
            "evidence": list(self.evidence) if self.evidence is not None else None,
            "reason": self.reason,
            "raw": self.raw,
            "answered_random": self.answered_random,
        }

    @classmethod
    def from_record(cls, record: dict) -> "ProbeOutcome":
        evidence = record["evidence"]
        return cls(
            question_id=record["question_id"],
            condition_mask=record["condition_mask"],
            segment_index=record["segment_index"],
            chosen_index=record["chosen_index"],
            evidence=tuple(evidence) if evidence is not None else None,
            reason=record["reason"],
            raw=record["raw"],
            answered_random=record["answered_random"],
        )


def _candidate_payloads(raw: str):
    yield raw
    stripped = raw.strip()
    yield stripped
    if stripped.startswith("```"):
        inner = stripped.strip("`")
        if inner.startswith("json"):
            inner = inner[4:]
        yield inner.strip()
    if stripped.startswith('"') and stripped.endswith('"') and len(stripped) > 1:
        # the instructed format wraps the whole object in quotes
        yield stripped[1:-1]
    first, last = stripped.find("{"), stripped.rfind("}")
    if 0 <= first < last:
        yield stripped[first : last + 1]


def _decode(raw: str) -> dict:
    last_error = "empty response"
    for candidate in _candidate_payloads(raw):
        if not candidate:
            continue
        try:
            decoded = json.loads(candidate)
        except json.JSONDecodeError as exc:
            last_error = exc.msg
            continue
        if isinstance(decoded, dict):
            return decoded
        last_error = f"expected a JSON object, got {type(decoded).__name__}"
    raise ResponseParseError(f"unparseable model output: {last_error}")


def _evidence_from(record: dict, segment_key: str | None):
    for key in (segment_key, SEGMENT_PLACEHOLDER):
        if key is not None and key in record:
            return record[key]
    for key in record:
        if "Content Segment" in key:
            return record[key]
    return None


def _letter_index(answer: str) -> int | None:
    normalized = answer.strip().strip(".()").lower()
    if len(normalized) == 1 and normalized in ANSWER_LETTERS:
        return ANSWER_LETTERS.index(normalized)
    return None


def try_parse(
    raw: str,
    expected: dict[str, int],
    condition_mask: int,
    segment_index: int = 0,
    segment_key: str | None = None,
) -> list[ProbeOutcome]:
    """Parse or raise; `expected` maps question_id -> number of choices.

    An answer of "None", a missing/invalid letter, or a letter past the
    choice count yields no chosen_index and flags a random answer. A valid
    letter is kept even when the reason admits guessing; the flag still
    goes up so scoring can tell the difference.
    """
    decoded = _decode(raw)
    outcomes = []
    for question_id, n_choices in expected.items():
        record = decoded.get(question_id)
        if not isinstance(record, dict):
            outcomes.append(
                ProbeOutcome(
                    question_id=question_id,
                    condition_mask=condition_mask,
                    segment_index=segment_index,
                    chosen_index=None,
                    evidence=None,
                    reason="missing from response",
                    raw=raw,
                    answered_random=True,
                )
            )
            continue
        answer = record.get("Answer")
        reason = str(record.get("Reason", ""))
        evidence = _evidence_from(record, segment_key)

        chosen = None
        answered_random = False
        if isinstance(answer, str) and answer.strip().lower() != "none":
            index = _letter_index(answer)
            if index is not None and index < n_choices:
                chosen = index
            else:
                answered_random = True
        else:
            answered_random = True
        if RANDOM_GUESS_PHRASE in reason:
            answered_random = True
        if isinstance(evidence, str) and evidence.strip().lower() == "none":
            answered_random = True
            evidence = None
        if isinstance(evidence, (list, tuple)):
            if any(str(e).strip().lower() == "none" for e in evidence):
                answered_random = True
            evidence = tuple(evidence)
        elif evidence is not None:
            evidence = (evidence,)

        outcomes.append(
            ProbeOutcome(
                question_id=question_id,
                condition_mask=condition_mask,
                segment_index=segment_index,
                chosen_index=chosen,
                evidence=evidence,
                reason=reason,
                raw=raw,
                answered_random=answered_random,
            )
        )
    return outcomes


def failure_outcomes(
    raw: str,
    expected: dict[str, int],
    condition_mask: int,
    segment_index: int = 0,
    reason: str = "unparseable response",
) -> list[ProbeOutcome]:
    """Total fallback: every expected question scored as unanswered."""
    return [
        ProbeOutcome(
            question_id=question_id,
            condition_mask=condition_mask,
            segment_index=segment_index,
            chosen_index=None,
            evidence=None,
            reason=reason,
            raw=raw,
            answered_random=False,
        )
        for question_id in expected
    ]


def parse_response(
    raw: str,
    expected: dict[str, int],
    condition_mask: int,
    segment_index: int = 0,
    segment_key: str | None = None,
) -> list[ProbeOutcome]:
    """Like try_parse but never raises; parse failure scores as unanswered."""
    try:
        return try_parse(raw, expected, condition_mask, segment_index, segment_key)
    except ResponseParseError as exc:
        return failure_outcomes(
            raw, expected, condition_mask, segment_index, reason=str(exc)
        )
