"""Deterministic seed derivation.

All randomness in the package flows through ``numpy.random.Generator``
instances seeded here.  Seeds are derived by hashing the structured inputs
with BLAKE2b, never with Python's builtin ``hash`` (which is salted per
process and would break run-to-run determinism).
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(*parts: int | str | bytes) -> int:
    """Map a tuple of ints/strings/bytes to a uint64 seed, stably."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bytes):
            tag, payload = b"b", part
        elif isinstance(part, str):
            tag, payload = b"s", part.encode("utf-8")
        elif isinstance(part, (int, np.integer)):
            tag, payload = b"i", int(part).to_bytes(16, "little", signed=True)
        else:
            raise TypeError(f"cannot derive seed from {type(part).__name__}")
        h.update(tag)
        h.update(len(payload).to_bytes(8, "little"))
        h.update(payload)
    return int.from_bytes(h.digest(), "little")


def rng_from(*parts: int | str | bytes) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))
