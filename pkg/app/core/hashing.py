"""Stable hashing for fingerprints and stream labels"""

import hashlib
import json
from typing import Any


def stable_hash(obj: Any, digest_size: int = 8) -> str:
    """Hex digest of a JSON-serializable object, independent of dict ordering"""
    payload = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=float)
    return hashlib.blake2b(payload.encode("utf-8"), digest_size=digest_size).hexdigest()


def label_key(label: str) -> int:
    """64-bit integer key for a stream label"""
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
