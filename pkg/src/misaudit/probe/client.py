"""Thin chat-completion client over HTTP.

The contract is vendor-neutral: a POST endpoint that accepts a messages
payload with inline base64 images and returns the assistant text under
choices[0].message.content. Transient failures (connection errors,
timeouts, 429, 5xx) are retried with exponential backoff and jitter,
honoring a server-supplied Retry-After; auth failures abort immediately;
other client errors fail the request without retry.
"""

import base64
import mimetypes
import random
import time
from dataclasses import dataclass

import requests

from ..errors import AuthenticationError, MisauditError
from .prompts import PromptDocument, user_text


class RequestFailed(MisauditError):
    """Permanent failure for one request; the run carries on without it."""


@dataclass(frozen=True)
class ClientConfig:
    endpoint: str
    api_key: str | None = None
    timeout: float = 120.0
    max_retries: int = 5
    backoff_base: float = 0.5
    backoff_cap: float = 30.0


def _image_part(path: str, detail: str) -> dict:
    mime = mimetypes.guess_type(path)[0] or "application/octet-stream"
    with open(path, "rb") as fh:
        encoded = base64.b64encode(fh.read()).decode("ascii")
    return {
        "type": "image_url",
        "image_url": {"url": f"data:{mime};base64,{encoded}", "detail": detail},
    }


def chat_payload(doc: PromptDocument) -> dict:
    """OpenAI-style request body for a prompt document."""
    content: list[dict] = [{"type": "text", "text": user_text(doc)}]
    for ref in doc.image_refs:
        content.append(_image_part(ref, doc.params.image_detail))
    return {
        "model": doc.params.model_name,
        "messages": [
            {"role": "system", "content": doc.system_text},
            {"role": "user", "content": content},
        ],
        "top_p": doc.params.top_p,
        "seed": doc.params.seed,
        "max_tokens": doc.params.max_tokens,
    }


class ChatClient:
    def __init__(self, config: ClientConfig, session: requests.Session | None = None):
        self.config = config
        self.session = session or requests.Session()

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        return headers

    def _delay(self, attempt: int, retry_after: str | None) -> float:
        if retry_after is not None:
            try:
                return max(float(retry_after), 0.0)
            except ValueError:
                pass
        base = min(self.config.backoff_base * (2**attempt), self.config.backoff_cap)
        return base + random.uniform(0, base / 4)

    def complete(self, payload: dict) -> tuple[str, dict, dict]:
        """Returns (assistant_text, response_body, exchange_record)."""
        cfg = self.config
        last_error = "no attempt made"
        attempts = 0
        for attempt in range(cfg.max_retries + 1):
            attempts = attempt + 1
            try:
                response = self.session.post(
                    cfg.endpoint,
                    json=payload,
                    headers=self._headers(),
                    timeout=cfg.timeout,
                )
            except requests.RequestException as exc:
                last_error = f"transport error: {exc}"
                if attempt < cfg.max_retries:
                    time.sleep(self._delay(attempt, None))
                continue

            if response.status_code in (401, 403):
                raise AuthenticationError(
                    f"endpoint rejected credentials (HTTP {response.status_code})"
                )
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                if attempt < cfg.max_retries:
                    time.sleep(
                        self._delay(attempt, response.headers.get("Retry-After"))
                    )
                continue
            if response.status_code != 200:
                raise RequestFailed(
                    f"HTTP {response.status_code}: {response.text[:500]}"
                )

            try:
                body = response.json()
                text = body["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise RequestFailed(f"malformed completion body: {exc}")
            exchange = {
                "request": payload,
                "response": body,
                "status": response.status_code,
                "attempts": attempts,
            }
            return text, body, exchange
        raise RequestFailed(f"retries exhausted after {attempts} attempts: {last_error}")
