"""TOML configuration and the API-key environment contract.

The probe key is read exclusively from the MISAUDIT_API_KEY environment
variable; it never appears in config files or CLI flags.
"""

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError, PreconditionError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

API_KEY_ENV = "MISAUDIT_API_KEY"

DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4-turbo"


@dataclass(frozen=True)
class DatasetSource:
    flavor: str
    root: str


@dataclass(frozen=True)
class ToolConfig:
    model_name: str = DEFAULT_MODEL
    endpoint: str = DEFAULT_ENDPOINT
    parallelism: int = 4
    max_tokens: int = 1024
    top_p: float = 0.0
    seed: int = 123
    image_detail: str = "auto"
    runs_root: str = "runs"
    datasets: dict = field(default_factory=dict)  # tag -> DatasetSource

    def to_hashable(self) -> dict:
        return {
            "model_name": self.model_name,
            "endpoint": self.endpoint,
            "max_tokens": self.max_tokens,
            "top_p": self.top_p,
            "seed": self.seed,
            "image_detail": self.image_detail,
            "datasets": {
                tag: {"flavor": src.flavor, "root": src.root}
                for tag, src in sorted(self.datasets.items())
            },
        }


def load_config(path=None) -> ToolConfig:
    """Parse a TOML config; no path means all defaults."""
    if path is None:
        return ToolConfig()
    path = Path(path)
    if not path.exists():
        raise PreconditionError(
            f"config file {path} not found", missing_path=str(path)
        )
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}")

    known = {
        "model_name",
        "endpoint",
        "parallelism",
        "max_tokens",
        "top_p",
        "seed",
        "image_detail",
        "runs_root",
        "datasets",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(
            f"{path}: unknown config keys {sorted(unknown)}"
        )

    datasets = {}
    for tag, spec in data.get("datasets", {}).items():
        if not isinstance(spec, dict) or "flavor" not in spec or "root" not in spec:
            raise ConfigurationError(
                f"{path}: dataset {tag!r} needs 'flavor' and 'root'"
            )
        datasets[tag] = DatasetSource(flavor=spec["flavor"], root=spec["root"])

    base = ToolConfig()
    return ToolConfig(
        model_name=data.get("model_name", base.model_name),
        endpoint=data.get("endpoint", base.endpoint),
        parallelism=int(data.get("parallelism", base.parallelism)),
        max_tokens=int(data.get("max_tokens", base.max_tokens)),
        top_p=float(data.get("top_p", base.top_p)),
        seed=int(data.get("seed", base.seed)),
        image_detail=data.get("image_detail", base.image_detail),
        runs_root=data.get("runs_root", base.runs_root),
        datasets=datasets,
    )


def api_key() -> str | None:
    key = os.environ.get(API_KEY_ENV)
    return key if key else None
