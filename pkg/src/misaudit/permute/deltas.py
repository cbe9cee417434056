"""Accuracy-delta tables for permutation runs.

Cells follow the published style: the permuted accuracy followed by the
parenthesized signed change against the original column, e.g.
``31.6% (-59.9%)``. Deltas are differences of the displayed one-decimal
percentages, so a rendered row is internally consistent.
"""

import json
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from ..errors import IntegrityError
from ..reports import format_pct, pct_tenths
from .evaluate import EvaluationResult

DELTA_SCHEMA = "misaudit/delta-report@1"

AVERAGE_LABEL = "Average"


def fraction_tenths(value: Fraction) -> int:
    return pct_tenths(value.numerator, value.denominator)


def format_signed_pct(tenths: int) -> str:
    sign = "+" if tenths >= 0 else "-"
    return f"{sign}{format_pct(abs(tenths))}"


def delta_cell(orig_tenths: int, permuted_tenths: int) -> str:
    return (
        f"{format_pct(permuted_tenths)} "
        f"({format_signed_pct(permuted_tenths - orig_tenths)})"
    )


@dataclass(frozen=True)
class PermutationRuns:
    """One adapter's original and two permuted runs over one question class."""

    adapter: str
    original: EvaluationResult
    subtitle_permuted: EvaluationResult
    video_permuted: EvaluationResult

    def validate(self) -> None:
        base = set(self.original.question_ids())
        for label, run in (
            ("subtitle-permuted", self.subtitle_permuted),
            ("video-permuted", self.video_permuted),
        ):
            other = set(run.question_ids())
            if other != base:
                diff = sorted(base.symmetric_difference(other))[:5]
                raise IntegrityError(
                    f"{self.adapter}: {label} run covers a different question "
                    f"set (e.g. {diff})"
                )

    def cells(self) -> tuple[str, str, str]:
        orig = fraction_tenths(self.original.accuracy)
        sp = fraction_tenths(self.subtitle_permuted.accuracy)
        vp = fraction_tenths(self.video_permuted.accuracy)
        return (format_pct(orig), delta_cell(orig, sp), delta_cell(orig, vp))


def _average_cells(rows: Sequence[PermutationRuns]) -> tuple[str, str, str]:
    def mean(values):
        return sum(values, Fraction(0)) / len(values)

    orig = fraction_tenths(mean([r.original.accuracy for r in rows]))
    sp = fraction_tenths(mean([r.subtitle_permuted.accuracy for r in rows]))
    vp = fraction_tenths(mean([r.video_permuted.accuracy for r in rows]))
    return (format_pct(orig), delta_cell(orig, sp), delta_cell(orig, vp))


@dataclass(frozen=True)
class DeltaReport:
    """Per question class, adapter rows plus the averages row."""

    classes: dict  # class label -> list[PermutationRuns]

    def table(self, label: str) -> list[tuple[str, str, str, str]]:
        rows = self.classes[label]
        out = [(run.adapter,) + run.cells() for run in rows]
        out.append((AVERAGE_LABEL,) + _average_cells(rows))
        return out

    def to_text(self) -> str:
        blocks = []
        for label in self.classes:
            rows = [("adapter", "Orig", "SP", "VP")] + self.table(label)
            widths = [
                max(len(row[col]) for row in rows) for col in range(4)
            ]
            lines = [label] + [
                "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                for row in rows
            ]
            blocks.append("\n".join(lines))
        return "\n\n".join(blocks) + "\n"

    def to_json(self) -> dict:
        payload: dict = {"schema": DELTA_SCHEMA, "classes": {}}
        for label, rows in self.classes.items():
            payload["classes"][label] = [
                {
                    "adapter": run.adapter,
                    "original": [
                        run.original.accuracy.numerator,
                        run.original.accuracy.denominator,
                    ],
                    "subtitle_permuted": [
                        run.subtitle_permuted.accuracy.numerator,
                        run.subtitle_permuted.accuracy.denominator,
                    ],
                    "video_permuted": [
                        run.video_permuted.accuracy.numerator,
                        run.video_permuted.accuracy.denominator,
                    ],
                    "cells": run.cells(),
                }
                for run in rows
            ] + [{"adapter": AVERAGE_LABEL, "cells": _average_cells(rows)}]
        return payload

    def write(self, path) -> None:
        from pathlib import Path

        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def delta_table(classes: Mapping[str, Sequence[PermutationRuns]]) -> DeltaReport:
    """Validate question-set consistency and assemble the report."""
    if not classes:
        raise IntegrityError("no classes to report on")
    validated = {}
    for label, rows in classes.items():
        rows = list(rows)
        if not rows:
            raise IntegrityError(f"{label}: no adapter runs")
        for run in rows:
            run.validate()
        validated[label] = rows
    return DeltaReport(classes=validated)
