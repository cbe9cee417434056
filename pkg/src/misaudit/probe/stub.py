"""Local HTTP stub that mimics the chat-completion endpoint.

Answers come from a fixture: {"answers": {question_id: {condition_label:
letter or "None"}}}. Optional faults simulate rate limiting and malformed
JSON for the first N requests; optional require_auth exercises the fatal
auth path. A /stats endpoint reports request counters so tests can assert
on network traffic (e.g. zero calls on a warm cache).
"""

import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .parsing import RANDOM_GUESS_PHRASE

_QID = re.compile(r"^Question ID: (.+)$", re.MULTILINE)

_SEGMENT_KEYS = {
    "subtitle": "timestamp ranges",
    "video": "image numbers",
    "video+subtitle": "timestamp ranges and image numbers",
}


def infer_condition(system_text: str) -> str:
    # the combined phrase contains the video-only phrase, so test it first
    if "video frames and subtitles" in system_text:
        return "video+subtitle"
    if "video frames" in system_text:
        return "video"
    return "subtitle"


class StubServer:
    def __init__(self, fixture: dict, host: str = "127.0.0.1", port: int = 0):
        self.fixture = fixture
        self._lock = threading.Lock()
        self.counters = {
            "requests": 0,
            "completions": 0,
            "rate_limited": 0,
            "malformed": 0,
        }
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, status: int, body: dict, headers: dict | None = None):
                data = json.dumps(body).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                for name, value in (headers or {}).items():
                    self.send_header(name, value)
                self.end_headers()
                self.wfile.write(data)

            def do_GET(self):
                if self.path == "/stats":
                    with stub._lock:
                        self._send(200, dict(stub.counters))
                else:
                    self._send(404, {"error": "unknown path"})

            def do_POST(self):
                if not self.path.endswith("/chat/completions"):
                    self._send(404, {"error": "unknown path"})
                    return
                with stub._lock:
                    stub.counters["requests"] += 1
                    faults = stub.fixture.get("faults", {})
                    if stub.counters["rate_limited"] < faults.get("rate_limit_first", 0):
                        stub.counters["rate_limited"] += 1
                        self._send(
                            429,
                            {"error": {"message": "rate limited"}},
                            headers={"Retry-After": "0"},
                        )
                        return
                if stub.fixture.get("require_auth"):
                    auth = self.headers.get("Authorization", "")
                    if not auth.startswith("Bearer ") or len(auth) <= len("Bearer "):
                        self._send(401, {"error": {"message": "missing credentials"}})
                        return
                length = int(self.headers.get("Content-Length", 0))
                payload = json.loads(self.rfile.read(length) or b"{}")

                with stub._lock:
                    faults = stub.fixture.get("faults", {})
                    if stub.counters["malformed"] < faults.get("malformed_first", 0):
                        stub.counters["malformed"] += 1
                        content = "{ this is not valid json"
                        self._send(200, stub._completion(payload, content))
                        return
                    stub.counters["completions"] += 1
                self._send(200, stub._completion(payload, stub._answer(payload)))

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    def _completion(self, payload: dict, content: str) -> dict:
        return {
            "id": "stub-completion",
            "object": "chat.completion",
            "model": payload.get("model", "stub"),
            "choices": [
                {
                    "index": 0,
                    "message": {"role": "assistant", "content": content},
                    "finish_reason": "stop",
                }
            ],
        }

    def _answer(self, payload: dict) -> str:
        messages = payload.get("messages", [])
        system_text = messages[0]["content"] if messages else ""
        user_parts = messages[1]["content"] if len(messages) > 1 else []
        text = ""
        if isinstance(user_parts, list):
            for part in user_parts:
                if part.get("type") == "text":
                    text = part.get("text", "")
                    break
        else:
            text = str(user_parts)
        condition = infer_condition(system_text)
        segment_key = _SEGMENT_KEYS[condition]
        answers = self.fixture.get("answers", {})
        body = {}
        for qid in _QID.findall(text):
            letter = answers.get(qid, {}).get(condition, "None")
            if letter == "None":
                body[qid] = {
                    "Answer": "None",
                    segment_key: "None",
                    "Reason": RANDOM_GUESS_PHRASE,
                }
            else:
                body[qid] = {
                    "Answer": letter,
                    segment_key: [1],
                    "Reason": "Stated directly in the provided input.",
                }
        return json.dumps(body)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    @property
    def stats(self) -> dict:
        with self._lock:
            return dict(self.counters)

    def start(self) -> "StubServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
