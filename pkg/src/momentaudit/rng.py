"""Deterministic per-item seed derivation.

Per-sample and per-video seeds are derived from a master seed plus a string
key, so results are reproducible regardless of iteration order and stable
across platforms and processes (unlike the builtin hash).
"""

from __future__ import annotations

import hashlib


def derive_seed(master_seed: int, *keys: str) -> int:
    """Derive a 64-bit seed from a master seed and one or more string keys."""
    h = hashlib.sha256(str(int(master_seed)).encode("utf-8"))
    for key in keys:
        h.update(b"\x00")
        h.update(str(key).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "big")
