"""Deterministic uniform question sampling."""

import random

from ..errors import DomainError
from .model import NormalizedQuestion


def sample_questions(
    questions: list[NormalizedQuestion], n: int, seed: int
) -> list[NormalizedQuestion]:
    """Uniform sample without replacement, reproducible for a fixed seed.

    The population is canonicalized by question_id before drawing, so the
    result depends only on (question set, n, seed), not on input order.
    Output is again sorted by question_id.
    """
    if n < 0:
        raise DomainError(f"sample size {n} must be non-negative")
    if n > len(questions):
        raise DomainError(
            f"cannot sample {n} questions from a population of {len(questions)}"
        )
    ordered = sorted(questions, key=lambda q: q.question_id)
    picked = random.Random(seed).sample(ordered, n)
    return sorted(picked, key=lambda q: q.question_id)
