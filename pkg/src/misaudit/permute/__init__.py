from .adapters import (
    ADAPTER_REQUEST_SCHEMA,
    AdapterRequest,
    CallableAdapter,
    HTTPAdapter,
    ReplayAdapter,
    SubprocessAdapter,
    validate_response,
)
from .deltas import DeltaReport, PermutationRuns, delta_cell, delta_table
from .evaluate import EvaluationResult, QuestionOutcome, adapter_request, evaluate
from .plan import PermutationPlan, build_permutation_plan, select_biased

__all__ = [
    "ADAPTER_REQUEST_SCHEMA",
    "AdapterRequest",
    "CallableAdapter",
    "DeltaReport",
    "EvaluationResult",
    "HTTPAdapter",
    "PermutationPlan",
    "PermutationRuns",
    "QuestionOutcome",
    "ReplayAdapter",
    "SubprocessAdapter",
    "adapter_request",
    "build_permutation_plan",
    "delta_cell",
    "delta_table",
    "evaluate",
    "select_biased",
    "validate_response",
]
