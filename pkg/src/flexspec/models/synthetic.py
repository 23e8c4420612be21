"""Synthetic draft/target pair with a controlled per-position agreement rate."""
from __future__ import annotations

import numpy as np

from .hashing import _seed_key, hash_tokens, unit_float

_COIN_TAIL = 8
_TARGET_WINDOW = 4


class SyntheticTarget:
    """Deterministic target whose greedy token is a seeded hash of the last few tokens."""

    def __init__(self, seed: int = 0, vocab_size: int = 64):
        if vocab_size < 2:
            raise ValueError("vocab_size must be >= 2")
        self.seed = seed
        self._vocab_size = vocab_size
        self._key = _seed_key(seed, 0x7A26)

    @property
    def vocab_size(self) -> int:
        return self._vocab_size

    def next_token(self, context) -> int:
        if len(context) == 0:
            raise ValueError("context must be non-empty")
        return hash_tokens(self._key, context[-_TARGET_WINDOW:]) % self._vocab_size

    def target_logits(self, context) -> tuple[np.ndarray, np.ndarray]:
        for tok in context[-_TARGET_WINDOW:]:
            if not 0 <= tok < self._vocab_size:
                raise ValueError(f"token {tok} outside vocabulary")
        tok = self.next_token(context)
        return np.array([float(tok)]), self.logits_from_features(np.array([float(tok)]))

    def logits_from_features(self, h: np.ndarray) -> np.ndarray:
        z = np.zeros(self._vocab_size)
        z[int(h[0])] = 1.0
        return z


class SyntheticDraft:
    """Proposes the target's greedy token with probability ``p``, a wrong token otherwise.

    The coin for a position is a hash of ``(seed, len(context), context tail)``,
    so drafting is deterministic per context yet independent across positions.
    """

    def __init__(self, target: SyntheticTarget, p: float, seed: int = 0):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must be in [0, 1], got {p}")
        self.target = target
        self.p = p
        self._key = _seed_key(seed, 0xD2AF)

    @property
    def vocab_size(self) -> int:
        return self.target.vocab_size

    def next_token(self, context) -> int:
        right = self.target.next_token(context)
        h = hash_tokens(self._key, [len(context), *context[-_COIN_TAIL:]])
        if unit_float(h) < self.p:
            return right
        v = self.vocab_size
        return (right + 1 + (h % (v - 1))) % v

    def draft_logits(self, context) -> tuple[np.ndarray, np.ndarray]:
        tok = self.next_token(context)
        z = np.zeros(self.vocab_size)
        z[tok] = 1.0
        return np.array([float(tok)]), z


def bernoulli_pair(p: float, seed: int = 0, vocab_size: int = 64) -> tuple[SyntheticDraft, SyntheticTarget]:
    target = SyntheticTarget(seed, vocab_size)
    return SyntheticDraft(target, p, seed), target
