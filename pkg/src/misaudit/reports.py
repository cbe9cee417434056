"""Category distribution and annotated-type proportion reports.

Counts are exact; displayed percentages are one-decimal, rounded half-up.
Machine-readable renderings carry a versioned schema marker.
"""

import csv
import io
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .categories import CategoryKind, QuestionCategory
from .errors import DomainError, IntegrityError
from .registry import ModalityRegistry

DISTRIBUTION_SCHEMA = "misaudit/distribution-report@1"
PROPORTIONS_SCHEMA = "misaudit/proportions-report@1"

UNANNOTATED = "unannotated"


def pct_tenths(count: int, total: int) -> int:
    """count/total as tenths of a percent, rounded half-up."""
    if total <= 0:
        raise DomainError(f"total must be positive, got {total}")
    if count < 0:
        raise DomainError(f"count must be non-negative, got {count}")
    return (count * 1000 + total // 2) // total


def format_pct(tenths: int) -> str:
    sign = "-" if tenths < 0 else ""
    tenths = abs(tenths)
    return f"{sign}{tenths // 10}.{tenths % 10}%"


def format_count_cell(count: int, total: int) -> str:
    """Table cell in the ``N (P%)`` style."""
    return f"{count} ({format_pct(pct_tenths(count, total))})"


def category_columns(registry: ModalityRegistry) -> list[str]:
    """Column tokens in display order: biased per modality (alphabetical by
    name), then complementary, agnostic correct/incorrect, none."""
    biased = sorted(f"biased:{name}" for name in registry.names)
    return biased + [
        CategoryKind.COMPLEMENTARY.value,
        CategoryKind.AGNOSTIC_CORRECT.value,
        CategoryKind.AGNOSTIC_INCORRECT.value,
        CategoryKind.NONE.value,
    ]


@dataclass(frozen=True)
class DistributionReport:
    """Per-dataset category counts with Table-style renderings."""

    dataset: str
    counts: dict  # column token -> count, in display order
    total: int

    def __post_init__(self):
        if self.total != sum(self.counts.values()):
            raise IntegrityError(
                f"counts sum to {sum(self.counts.values())}, total says {self.total}"
            )
        if self.total == 0:
            raise DomainError("empty category map")

    def cell(self, token: str) -> str:
        return format_count_cell(self.counts[token], self.total)

    def to_text(self) -> str:
        header = ["dataset"] + list(self.counts) + ["total"]
        row = [self.dataset] + [self.cell(t) for t in self.counts] + [str(self.total)]
        widths = [max(len(h), len(c)) for h, c in zip(header, row)]
        lines = [
            "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
            "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip(),
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(["schema", DISTRIBUTION_SCHEMA])
        writer.writerow(["dataset"] + list(self.counts) + ["total"])
        writer.writerow(
            [self.dataset]
            + [self.cell(token) for token in self.counts]
            + [self.total]
        )
        return buffer.getvalue()

    def to_json(self) -> dict:
        return {
            "schema": DISTRIBUTION_SCHEMA,
            "dataset": self.dataset,
            "total": self.total,
            "counts": dict(self.counts),
            "percent_tenths": {
                token: pct_tenths(count, self.total)
                for token, count in self.counts.items()
            },
        }


def distribution_report(
    categories: Mapping[str, QuestionCategory],
    dataset: str,
    registry: ModalityRegistry,
) -> DistributionReport:
    if not categories:
        raise DomainError("empty category map")
    columns = category_columns(registry)
    counts = {token: 0 for token in columns}
    for question_id, category in categories.items():
        try:
            token = category.token(registry)
        except IndexError:
            raise IntegrityError(
                f"{question_id}: biased modality {category.modality} outside "
                f"registry {registry.names}"
            )
        if token not in counts:
            raise IntegrityError(
                f"{question_id}: category {token!r} outside registry columns"
            )
        counts[token] += 1
    return DistributionReport(
        dataset=dataset, counts=counts, total=len(categories)
    )


def proportions_by_annotated_type(
    categories: Mapping[str, QuestionCategory],
    questions: Sequence,
    registry: ModalityRegistry,
) -> dict:
    """Per annotated answer type, the exact category proportions.

    Questions without an annotation land in the "unannotated" group; every
    row's proportions sum to exactly 1.
    """
    missing = sorted(
        q.question_id for q in questions if q.question_id not in categories
    )
    if missing:
        raise IntegrityError(f"questions without categories: {missing}")
    groups: dict[str, list[str]] = {}
    for question in questions:
        kind = question.annotated_answer_type or UNANNOTATED
        groups.setdefault(kind, []).append(question.question_id)
    columns = category_columns(registry)
    rows: dict[str, dict] = {}
    for kind in sorted(groups):
        ids = groups[kind]
        counts = {token: 0 for token in columns}
        for question_id in ids:
            counts[categories[question_id].token(registry)] += 1
        rows[kind] = {
            "n": len(ids),
            "proportions": {
                token: Fraction(count, len(ids))
                for token, count in counts.items()
            },
        }
    return rows


def proportions_csv(rows: Mapping[str, Mapping]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["schema", PROPORTIONS_SCHEMA])
    tokens = None
    for kind, row in rows.items():
        if tokens is None:
            tokens = list(row["proportions"])
            writer.writerow(["annotated_type", "n"] + tokens)
        writer.writerow(
            [kind, row["n"]]
            + [float(row["proportions"][token]) for token in tokens]
        )
    return buffer.getvalue()
