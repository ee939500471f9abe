"""Deterministic seed derivation for independent random streams.

Every stochastic component (stress process, sensor jitter, network init,
action sampling, per-episode and per-experiment environments) owns its own
seed derived from a single master seed plus a string label.  Hashing keeps
the streams independent of each other and of call order, which is what makes
whole runs reproducible byte-for-byte.
"""
from __future__ import annotations

import hashlib


def derive_seed(base: int, *labels: object) -> int:
    """Derive a 63-bit child seed from a base seed and a label path."""
    data = ":".join([str(base), *(str(x) for x in labels)]).encode()
    digest = hashlib.blake2b(data, digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1
