"""Deterministic 64-bit context hashing, scalar and vectorized forms.

Both forms must agree bit-for-bit; the vectorized one is used to precompute
features for a whole corpus.
"""
from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MIX = 0xFF51AFD7ED558CCD
BOS = -1


def _seed_key(seed: int, salt: int) -> int:
    h = (FNV_OFFSET ^ (seed & MASK)) & MASK
    h = (h * FNV_PRIME) & MASK
    h = ((h ^ (salt & MASK)) * FNV_PRIME) & MASK
    return _finalize(h)


def _finalize(h: int) -> int:
    h ^= h >> 33
    h = (h * MIX) & MASK
    h ^= h >> 29
    return h


def hash_tokens(key: int, tokens) -> int:
    """Hash ``tokens`` (most recent last) under ``key``; BOS (-1) pads short contexts."""
    h = key
    for tok in tokens:
        h = ((h ^ (int(tok) + 2)) * FNV_PRIME) & MASK
    return _finalize(h)


def hash_windows(key: int, windows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`hash_tokens` over the last axis of an int array."""
    with np.errstate(over="ignore"):
        h = np.full(windows.shape[:-1], key, dtype=np.uint64)
        prime = np.uint64(FNV_PRIME)
        for j in range(windows.shape[-1]):
            h = (h ^ (windows[..., j].astype(np.int64) + 2).astype(np.uint64)) * prime
        h ^= h >> np.uint64(33)
        h = h * np.uint64(MIX)
        h ^= h >> np.uint64(29)
    return h


def unit_float(h: int) -> float:
    """Map a 64-bit hash to [0, 1)."""
    return (h >> 11) * (1.0 / (1 << 53))


def padded_windows(seqs: np.ndarray, m: int) -> np.ndarray:
    """For every prefix of every row, the last ``m`` tokens (BOS-padded), shape (N, L, m)."""
    n, length = seqs.shape
    padded = np.concatenate([np.full((n, m - 1), BOS, dtype=np.int64), seqs.astype(np.int64)], axis=1)
    idx = np.arange(length)[:, None] + np.arange(m)[None, :]
    return padded[:, idx]
