"""misaudit: modality-importance auditing for multiple-choice VidQA datasets.

Core surface: exact-rational importance scoring over per-question accuracy
profiles, question categorization, dataset normalization, MLLM probing with
caching, a human perception study service, and feature-permutation model
evaluation. See the CLI (``misaudit --help``) for the pipeline stages.
"""

from .categories import CategoryKind, QuestionCategory, categorize
from .errors import MisauditError
from .profiles import AccuracyProfile
from .registry import ModalityRegistry, ModalitySubset, enumerate_subsets
from .scoring import MISVector, mis, mis_group, mis_vector, perf

__all__ = [
    "AccuracyProfile",
    "CategoryKind",
    "MISVector",
    "MisauditError",
    "ModalityRegistry",
    "ModalitySubset",
    "QuestionCategory",
    "categorize",
    "enumerate_subsets",
    "mis",
    "mis_group",
    "mis_vector",
    "perf",
]

__version__ = "0.1.0"
