"""Probe execution: plan work units, fetch completions, aggregate bits.

Work is decomposed deterministically (conditions by mask, questions by id,
segments in order) before being handed to a bounded worker pool. Every
completion is looked up in the content-addressed cache first, so re-running
a finished probe performs zero network calls and reproduces the same log.
"""

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..dataset.model import ClipAssets, NormalizedQuestion, SegmentPlan
from ..dataset.windows import frame_plan
from ..errors import IntegrityError, ResponseParseError
from ..registry import ModalityRegistry, ModalitySubset
from .cache import ResponseCache, file_sha256
from .client import ChatClient, RequestFailed, chat_payload
from .conditions import ConditionSpec, condition_spec
from .logs import QuestionConditionResult, ResponseLog, aggregate_segments
from .parsing import ProbeOutcome, failure_outcomes, parse_response, try_parse
from .prompts import PromptParams, build_prompt, prompt_text

REFORMAT_SUFFIX = (
    "\n\nYour previous response was not valid JSON. Output valid JSON only."
)

DEFAULT_PARALLELISM = 4


@dataclass(frozen=True)
class _Unit:
    order: int
    condition: ModalitySubset
    spec: ConditionSpec
    questions: tuple[NormalizedQuestion, ...]
    plan: SegmentPlan | None
    segment_index: int


def plan_units(
    questions,
    assets: dict[str, ClipAssets],
    conditions,
    registry: ModalityRegistry,
) -> list[_Unit]:
    ordered = sorted(questions, key=lambda q: q.question_id)
    missing = sorted({q.clip_id for q in ordered} - set(assets))
    if missing:
        raise IntegrityError("no assets for clip(s): " + ", ".join(missing))
    units: list[_Unit] = []
    for condition in sorted(conditions, key=lambda c: c.mask):
        spec = condition_spec(condition, registry)
        if spec.wants_images:
            for question in ordered:
                plan = frame_plan(
                    assets[question.clip_id], question.window, spec.image_limit
                )
                for segment_index in range(len(plan.segments)):
                    units.append(
                        _Unit(
                            order=len(units),
                            condition=condition,
                            spec=spec,
                            questions=(question,),
                            plan=plan,
                            segment_index=segment_index,
                        )
                    )
        else:
            for i in range(0, len(ordered), spec.batch_size):
                units.append(
                    _Unit(
                        order=len(units),
                        condition=condition,
                        spec=spec,
                        questions=tuple(ordered[i : i + spec.batch_size]),
                        plan=None,
                        segment_index=0,
                    )
                )
    return units


def _with_suffix(payload: dict, suffix: str) -> dict:
    clone = json.loads(json.dumps(payload))
    clone["messages"][1]["content"][0]["text"] += suffix
    return clone


class _ProbeSession:
    def __init__(self, assets, client, cache, registry, params, raw_dir):
        self.assets = assets
        self.client = client
        self.cache = cache
        self.registry = registry
        self.params = params
        self.raw_dir = Path(raw_dir) if raw_dir else None
        if self.raw_dir:
            self.raw_dir.mkdir(parents=True, exist_ok=True)

    def _archive(self, key: str, exchange: dict) -> None:
        if self.raw_dir is None:
            return
        try:
            with open(self.raw_dir / f"{key}.json", "x", encoding="utf-8") as fh:
                json.dump(exchange, fh, ensure_ascii=False)
        except FileExistsError:
            pass

    def _fetch(self, key: str, payload: dict, events: list) -> str | None:
        cached = self.cache.get(key)
        if cached is not None:
            events.append({"event": "cache_hit", "key": key, "ts": time.time()})
            return cached["response_text"]
        try:
            text, body, exchange = self.client.complete(payload)
        except RequestFailed as exc:
            events.append(
                {
                    "event": "request_failed",
                    "key": key,
                    "detail": str(exc),
                    "ts": time.time(),
                }
            )
            return None
        self.cache.put(
            key,
            {
                "key": key,
                "params": self.params.to_record(),
                "response_text": text,
                "response_body": body,
            },
        )
        self._archive(key, exchange)
        events.append(
            {
                "event": "network_call",
                "key": key,
                "attempts": exchange["attempts"],
                "ts": time.time(),
            }
        )
        return text

    def execute(self, unit: _Unit) -> tuple[list[ProbeOutcome], list[dict]]:
        events: list[dict] = []
        doc = build_prompt(
            unit.questions,
            unit.condition,
            self.assets,
            registry=self.registry,
            params=self.params,
            plan=unit.plan,
            segment_index=unit.segment_index,
        )
        payload = chat_payload(doc)
        image_hashes = [file_sha256(ref) for ref in doc.image_refs]
        text = prompt_text(doc)
        key = self.cache.key(
            self.params.model_name, self.params.to_record(), text, image_hashes
        )
        expected = {q.question_id: len(q.choices) for q in unit.questions}
        mask = unit.condition.mask
        segment_key = unit.spec.segment_phrase

        response = self._fetch(key, payload, events)
        if response is None:
            return (
                failure_outcomes(
                    "",
                    expected,
                    mask,
                    unit.segment_index,
                    reason="request failed after retries",
                ),
                events,
            )
        try:
            return (
                try_parse(response, expected, mask, unit.segment_index, segment_key),
                events,
            )
        except ResponseParseError:
            events.append({"event": "reformat_retry", "key": key, "ts": time.time()})
            retry_key = self.cache.key(
                self.params.model_name,
                self.params.to_record(),
                text + REFORMAT_SUFFIX,
                image_hashes,
            )
            retry = self._fetch(
                retry_key, _with_suffix(payload, REFORMAT_SUFFIX), events
            )
            if retry is None:
                return (
                    failure_outcomes(
                        response,
                        expected,
                        mask,
                        unit.segment_index,
                        reason="request failed after retries",
                    ),
                    events,
                )
            return (
                parse_response(retry, expected, mask, unit.segment_index, segment_key),
                events,
            )


def run_probe(
    questions,
    assets: dict[str, ClipAssets],
    conditions,
    *,
    registry: ModalityRegistry,
    client: ChatClient,
    cache: ResponseCache,
    params: PromptParams,
    run_id: str,
    dataset_tag: str,
    raw_dir=None,
    events_path=None,
    parallelism: int = DEFAULT_PARALLELISM,
) -> ResponseLog:
    """Probe every (question, condition) pair and aggregate to binary bits.

    Transport failures and unparseable responses mark the affected pairs
    incorrect and the run continues; only an authentication rejection
    aborts.
    """
    questions = list(questions)
    units = plan_units(questions, assets, conditions, registry)
    session = _ProbeSession(assets, client, cache, registry, params, raw_dir)

    results: dict[int, tuple[list[ProbeOutcome], list[dict]]] = {}
    if parallelism < 1:
        raise IntegrityError(f"parallelism {parallelism} must be >= 1")
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = {pool.submit(session.execute, unit): unit for unit in units}
        for future, unit in futures.items():
            results[unit.order] = future.result()

    if events_path is not None:
        events_path = Path(events_path)
        events_path.parent.mkdir(parents=True, exist_ok=True)
        with open(events_path, "w", encoding="utf-8") as fh:
            for order in sorted(results):
                for event in results[order][1]:
                    fh.write(json.dumps(event, sort_keys=True) + "\n")

    by_pair: dict[tuple[str, int], list[ProbeOutcome]] = {}
    for order in sorted(results):
        for outcome in results[order][0]:
            by_pair.setdefault(
                (outcome.question_id, outcome.condition_mask), []
            ).append(outcome)

    correct_index = {q.question_id: q.correct_index for q in questions}
    entries = []
    for (question_id, mask), outcomes in sorted(by_pair.items()):
        outcomes.sort(key=lambda o: o.segment_index)
        entries.append(
            QuestionConditionResult(
                question_id=question_id,
                condition_mask=mask,
                correct=aggregate_segments(outcomes, correct_index[question_id]),
                outcomes=tuple(outcomes),
            )
        )
    return ResponseLog(
        run_id=run_id,
        dataset=dataset_tag,
        model_name=params.model_name,
        modalities=registry.names,
        entries=entries,
    )
