"""Run directories and manifests.

Every pipeline artifact lives under ``runs/<run_id>/`` next to a manifest
that records what produced it. A completed stage is immutable: re-running
it with identical inputs is a no-op, re-running with different inputs is
an error (start a new run instead).
"""

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import IntegrityError, PreconditionError

MANIFEST_SCHEMA = "misaudit/run-manifest@1"

STAGES = (
    "ingest",
    "sample",
    "probe",
    "score",
    "categorize",
    "report",
    "permute-plan",
    "permute-eval",
    "study-report",
)


def config_hash(payload) -> str:
    """Canonical-JSON sha256 so semantically equal configs hash equal."""
    canned = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canned.encode("utf-8")).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    run_id: str
    dataset_tag: str
    config_digest: str
    created_at: str = field(default_factory=_now)
    sample_seed: int | None = None
    sample_size: int | None = None
    model_params: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)  # stage -> {completed_at, input_hash}

    def stage_complete(self, stage: str) -> bool:
        return stage in self.stages

    def should_skip(self, stage: str, input_hash: str) -> bool:
        """True when the stage already completed with identical inputs."""
        record = self.stages.get(stage)
        if record is None:
            return False
        if record["input_hash"] != input_hash:
            raise IntegrityError(
                f"stage {stage!r} already completed with different inputs in "
                f"run {self.run_id!r}; start a new run"
            )
        return True

    def mark_complete(self, stage: str, input_hash: str) -> None:
        if stage not in STAGES:
            raise IntegrityError(f"unknown stage {stage!r}")
        existing = self.stages.get(stage)
        if existing is not None and existing["input_hash"] != input_hash:
            raise IntegrityError(
                f"stage {stage!r} is immutable once completed (run {self.run_id!r})"
            )
        if existing is None:
            self.stages[stage] = {
                "completed_at": _now(),
                "input_hash": input_hash,
            }

    def to_json(self) -> dict:
        return {
            "schema": MANIFEST_SCHEMA,
            "run_id": self.run_id,
            "dataset_tag": self.dataset_tag,
            "config_digest": self.config_digest,
            "created_at": self.created_at,
            "sample_seed": self.sample_seed,
            "sample_size": self.sample_size,
            "model_params": self.model_params,
            "stages": self.stages,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunManifest":
        if data.get("schema") != MANIFEST_SCHEMA:
            raise IntegrityError(f"expected schema {MANIFEST_SCHEMA}")
        return cls(
            run_id=data["run_id"],
            dataset_tag=data["dataset_tag"],
            config_digest=data["config_digest"],
            created_at=data["created_at"],
            sample_seed=data.get("sample_seed"),
            sample_size=data.get("sample_size"),
            model_params=data.get("model_params", {}),
            stages=data.get("stages", {}),
        )


class RunDirectory:
    """The on-disk layout of one run."""

    def __init__(self, root, run_id: str):
        self.run_id = run_id
        self.path = Path(root) / run_id
        self.manifest_path = self.path / "manifest.json"
        self.sample_path = self.path / "sample.jsonl"
        self.raw_dir = self.path / "raw"
        self.logs_dir = self.path / "logs"
        self.profiles_path = self.path / "profiles.jsonl"
        self.categories_path = self.path / "categories.jsonl"
        self.reports_dir = self.path / "reports"
        self.permutation_dir = self.path / "permutation"

    def exists(self) -> bool:
        return self.manifest_path.exists()

    def create(self, manifest: RunManifest) -> None:
        if self.exists():
            raise IntegrityError(f"run {self.run_id!r} already exists")
        for directory in (self.raw_dir, self.logs_dir, self.reports_dir):
            directory.mkdir(parents=True, exist_ok=True)
        self.save_manifest(manifest)

    def save_manifest(self, manifest: RunManifest) -> None:
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(
            json.dumps(manifest.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )

    def load_manifest(self) -> RunManifest:
        if not self.manifest_path.exists():
            raise PreconditionError(
                f"run {self.run_id!r} has no manifest",
                missing_path=str(self.manifest_path),
            )
        return RunManifest.from_json(
            json.loads(self.manifest_path.read_text(encoding="utf-8"))
        )

    def require(self, path: Path, producer: str) -> Path:
        """Stage-precondition gate: a missing upstream artifact is exit-3
        material, reported with the path and the stage that makes it."""
        if not path.exists():
            raise PreconditionError(
                f"missing {path}; run the {producer!r} stage first",
                missing_path=str(path),
            )
        return path
