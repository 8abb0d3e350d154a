"""Splittable deterministic RNG keys.

Keys are opaque 256-bit values. Child keys are derived by hashing the parent
key together with a domain tag, the child name, and an invocation index, so
every module in a tree gets a statistically independent stream while the full
tree of keys is reproducible from a single root seed on any platform.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

KEY_BYTES = 32


@dataclass(frozen=True)
class RngKey:
    """A 256-bit derivation key."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes) or len(self.data) != KEY_BYTES:
            raise ValueError(f"RngKey requires exactly {KEY_BYTES} bytes")

    def hex(self) -> str:
        return self.data.hex()

    def __repr__(self) -> str:
        return f"RngKey({self.data.hex()[:12]}..)"


def root_key(seed: int) -> RngKey:
    """Builds the root key for a run from an integer seed."""
    payload = b"root:" + repr(int(seed)).encode("ascii")
    return RngKey(hashlib.sha256(payload).digest())


def child_key(parent: RngKey, name: str, index: int) -> RngKey:
    """Derives the key for a named child stream.

    The hash input frames each component unambiguously:
    parent key (32 bytes) || "child" || name length (4 bytes, big endian)
    || name (utf-8) || index (8 bytes, big endian).
    """
    if index < 0:
        raise ValueError("child index must be non-negative")
    raw = name.encode("utf-8")
    h = hashlib.sha256()
    h.update(parent.data)
    h.update(b"child")
    h.update(len(raw).to_bytes(4, "big"))
    h.update(raw)
    h.update(index.to_bytes(8, "big"))
    return RngKey(h.digest())


def generator(key: RngKey) -> np.random.Generator:
    """Returns a Generator whose stream is a pure function of the key."""
    entropy = int.from_bytes(key.data, "big")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def uniform(key: RngKey, low: float, high: float, shape: tuple[int, ...]) -> np.ndarray:
    """Samples float64 uniforms deterministically from the key."""
    return generator(key).uniform(low, high, size=shape)
