"""Stable 64-bit hashing for deterministic, portable pseudo-randomness.

BLAKE2b with an 8-byte digest, big-endian. Every mock score and every
sampled variation selection derives from this function, so fixtures are
reproducible across machines and Python versions.
"""
from __future__ import annotations

import hashlib

TWO_64 = 2 ** 64


def stable_hash64(key: str) -> int:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def unit_uniform(key: str) -> float:
    """Deterministic uniform draw in (0, 1)."""
    return (stable_hash64(key) + 0.5) / TWO_64
