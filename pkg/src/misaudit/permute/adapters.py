"""Model adapter boundary.

Heavy VidQA models live outside this package; they are reached through one
of these adapters. The wire contract is a single JSON object per request:

    {"schema": "misaudit/adapter-request@1", "question_id": str,
     "question": str, "choices": [str, ...],
     "subtitle_text": str | null, "frames": [path, ...] | null}

and the response is ``{"chosen_index": int}`` with the index in range for
the request's choices. Subprocess adapters speak it line-delimited over
stdio; HTTP adapters POST it to an ``/answer`` endpoint.
"""

import json
import subprocess
import threading
from collections.abc import Mapping
from dataclasses import dataclass

import requests

from ..errors import ContractError

ADAPTER_REQUEST_SCHEMA = "misaudit/adapter-request@1"


@dataclass(frozen=True)
class AdapterRequest:
    question_id: str
    question: str
    choices: tuple[str, ...]
    subtitle_text: str | None
    frames: tuple[str, ...] | None

    def to_json(self) -> dict:
        return {
            "schema": ADAPTER_REQUEST_SCHEMA,
            "question_id": self.question_id,
            "question": self.question,
            "choices": list(self.choices),
            "subtitle_text": self.subtitle_text,
            "frames": None if self.frames is None else list(self.frames),
        }


def validate_response(payload, request: AdapterRequest) -> int:
    """Check an adapter reply against the contract; returns chosen_index."""
    if not isinstance(payload, Mapping):
        raise ContractError(f"adapter reply is not an object: {payload!r}")
    if "chosen_index" not in payload:
        raise ContractError("adapter reply lacks chosen_index")
    index = payload["chosen_index"]
    if isinstance(index, bool) or not isinstance(index, int):
        raise ContractError(f"chosen_index must be an integer, got {index!r}")
    if not 0 <= index < len(request.choices):
        raise ContractError(
            f"chosen_index {index} out of range for {len(request.choices)} choices"
        )
    return index


class CallableAdapter:
    """In-process adapter; the callable gets the AdapterRequest."""

    def __init__(self, name: str, fn):
        self.name = name
        self._fn = fn

    def invoke(self, request: AdapterRequest) -> int:
        return validate_response({"chosen_index": self._fn(request)}, request)


class ReplayAdapter:
    """Serves recorded answers keyed by question id, for offline reports."""

    def __init__(self, name: str, answers: Mapping[str, int]):
        self.name = name
        self._answers = dict(answers)

    def invoke(self, request: AdapterRequest) -> int:
        if request.question_id not in self._answers:
            raise ContractError(f"no recorded answer for {request.question_id!r}")
        return validate_response(
            {"chosen_index": self._answers[request.question_id]}, request
        )


class SubprocessAdapter:
    """Line-delimited JSON over a child process's stdio.

    The child is spawned lazily on first use and shared across invocations;
    a lock serializes the write/read pairs.
    """

    def __init__(self, name: str, argv):
        self.name = name
        self.argv = list(argv)
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self._proc

    def invoke(self, request: AdapterRequest) -> int:
        with self._lock:
            proc = self._ensure_process()
            try:
                proc.stdin.write(json.dumps(request.to_json()) + "\n")
                proc.stdin.flush()
                line = proc.stdout.readline()
            except (BrokenPipeError, OSError) as exc:
                raise ContractError(f"adapter process broke: {exc}")
        if not line:
            raise ContractError("adapter process closed its stdout")
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ContractError(f"adapter reply is not JSON: {exc.msg}")
        return validate_response(payload, request)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.terminate()
            self._proc.wait(timeout=10)
        self._proc = None

    def __enter__(self) -> "SubprocessAdapter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class HTTPAdapter:
    """POSTs each request to a model server's /answer endpoint."""

    def __init__(self, name: str, endpoint: str, timeout: float = 60.0):
        self.name = name
        self.endpoint = endpoint
        self.timeout = timeout

    def invoke(self, request: AdapterRequest) -> int:
        try:
            response = requests.post(
                self.endpoint, json=request.to_json(), timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ContractError(f"adapter endpoint unreachable: {exc}")
        if response.status_code != 200:
            raise ContractError(
                f"adapter endpoint returned HTTP {response.status_code}"
            )
        try:
            payload = response.json()
        except ValueError:
            raise ContractError("adapter reply is not JSON")
        return validate_response(payload, request)
