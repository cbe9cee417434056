"""Content-addressed response cache.

Keys hash everything that determines a completion: model, decoding params,
the full rendered prompt text, and the content hashes of attached images in
order. Entries are immutable; concurrent writers race safely because the
first completed write wins and later ones are discarded.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ResponseCache:
    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def key(self, model_name: str, params: dict, prompt_text: str, image_hashes) -> str:
        material = json.dumps(
            {
                "model": model_name,
                "params": {k: params[k] for k in sorted(params)},
                "prompt": prompt_text,
                "images": list(image_hashes),
            },
            sort_keys=True,
            ensure_ascii=False,
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self.path_for(key)
        try:
            with open(path, encoding="utf-8") as fh:
                return json.load(fh)
        except FileNotFoundError:
            return None

    def put(self, key: str, envelope: dict) -> bool:
        """Insert-if-absent; returns False when another write already landed."""
        final = self.path_for(key)
        fd, tmp = tempfile.mkstemp(dir=self.root, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(envelope, fh, sort_keys=True, ensure_ascii=False)
            try:
                os.link(tmp, final)  # atomic; loses the race iff final exists
                return True
            except FileExistsError:
                return False
        finally:
            os.unlink(tmp)
