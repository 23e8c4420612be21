"""Seeded order-2 Markov token corpus and its line-oriented file format."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class Corpus:
    sequences: np.ndarray  # (n_seq, seq_len) int64
    vocab_size: int
    seed: int

    def __post_init__(self):
        seqs = np.asarray(self.sequences, dtype=np.int64)
        if seqs.ndim != 2:
            raise ValueError("corpus sequences must be a 2-D array")
        if seqs.size and (seqs.min() < 0 or seqs.max() >= self.vocab_size):
            raise ValueError("corpus token outside vocabulary")
        object.__setattr__(self, "sequences", seqs)

    def __len__(self) -> int:
        return self.sequences.shape[0]


def markov_corpus(n_seq: int = 5000, seq_len: int = 32, vocab_size: int = 64, seed: int = 0,
                  concentration: float = 0.1) -> Corpus:
    """Sample ``n_seq`` sequences from a seeded order-2 Markov source.

    The transition table is drawn once from ``Dirichlet(concentration)`` per
    bigram state, so it depends only on ``(vocab_size, seed)``; the sampling
    stream additionally depends on ``n_seq``.
    """
    table_rng = np.random.default_rng([seed, 0xC0DE])
    probs = table_rng.dirichlet(np.full(vocab_size, concentration), size=vocab_size * vocab_size)
    cdf = np.cumsum(probs, axis=1)
    cdf[:, -1] = 1.0
    rng = np.random.default_rng([seed, n_seq, seq_len, 0x5A3])
    seqs = np.empty((n_seq, seq_len), dtype=np.int64)
    seqs[:, 0] = rng.integers(vocab_size, size=n_seq)
    if seq_len > 1:
        seqs[:, 1] = rng.integers(vocab_size, size=n_seq)
    for t in range(2, seq_len):
        state = seqs[:, t - 2] * vocab_size + seqs[:, t - 1]
        u = rng.random(n_seq)
        seqs[:, t] = (cdf[state] < u[:, None]).sum(axis=1)
    np.minimum(seqs, vocab_size - 1, out=seqs)
    return Corpus(seqs, vocab_size, seed)


def save_corpus(corpus: Corpus) -> str:
    return "".join(" ".join(str(t) for t in row) + "\n" for row in corpus.sequences.tolist())


def load_corpus(text: str, vocab_size: int) -> Corpus:
    rows = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([int(t) for t in line.split()])
        except ValueError:
            raise ValueError(f"line {line_no}: non-integer token") from None
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise ValueError("corpus sequences must share one length")
    return Corpus(np.array(rows, dtype=np.int64).reshape(len(rows), -1), vocab_size, -1)
