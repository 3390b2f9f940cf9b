"""Canonical hashing used for state digests, revision chains, and mock seeding."""

from __future__ import annotations

import hashlib
import json
from typing import Any


def canonical_json(obj: Any) -> str:
    """Serialize deterministically: sorted keys, no whitespace, unicode kept."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def digest(obj: Any) -> str:
    """sha256 hex digest of the canonical JSON form of ``obj``."""
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def text_digest(text: str) -> str:
    """sha256 hex digest of raw text (used for proposal section chaining)."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def seed_int(*parts: Any) -> int:
    """Deterministic integer derived from the given parts.

    The mock language model provider draws all of its "choices" from this,
    so identical inputs always reproduce identical outputs.
    """
    return int.from_bytes(
        hashlib.sha256(canonical_json(list(parts)).encode("utf-8")).digest()[:8],
        "big",
    )
