from .conditions import ConditionSpec, condition_spec, default_registry, standard_conditions
from .prompts import (
    PromptDocument,
    PromptItem,
    PromptParams,
    SYSTEM_TEMPLATE,
    build_prompt,
    prompt_text,
)
from .parsing import RANDOM_GUESS_PHRASE, ProbeOutcome, parse_response, try_parse
from .logs import QuestionConditionResult, ResponseLog, aggregate_segments, score_profiles
from .cache import ResponseCache
from .client import ChatClient, ClientConfig, RequestFailed
from .runner import run_probe
from .stub import StubServer

__all__ = [
    "ChatClient",
    "ClientConfig",
    "ConditionSpec",
    "PromptDocument",
    "PromptItem",
    "PromptParams",
    "ProbeOutcome",
    "QuestionConditionResult",
    "RANDOM_GUESS_PHRASE",
    "RequestFailed",
    "ResponseCache",
    "ResponseLog",
    "SYSTEM_TEMPLATE",
    "StubServer",
    "aggregate_segments",
    "build_prompt",
    "condition_spec",
    "default_registry",
    "parse_response",
    "prompt_text",
    "run_probe",
    "score_profiles",
    "standard_conditions",
    "try_parse",
]
