"""Cloud-side KV session, greedy block verification and rollback."""
from __future__ import annotations

import numpy as np

from .messages import DraftBlockMsg, VerifyResultMsg


class SessionDesyncError(RuntimeError):
    """The edge's offset disagrees with the cloud's committed length; replay the prefix."""


class KvSession:
    """Committed tokens with one cached target feature per position.

    ``features[i]`` is the target's hidden state after reading
    ``tokens[:i + 1]``; it produces the logits for position ``i + 1``.
    """

    def __init__(self, session_id: int):
        self.session_id = session_id
        self.tokens: list[int] = []
        self.features: list[np.ndarray] = []

    @property
    def length(self) -> int:
        return len(self.tokens)

    def append(self, target, token: int) -> None:
        self.tokens.append(token)
        h, _ = target.target_logits(self.tokens)
        self.features.append(h)

    def next_logits(self, target) -> np.ndarray:
        return target.logits_from_features(self.features[-1])

    @classmethod
    def build(cls, session_id: int, target, tokens) -> KvSession:
        """Fresh session over ``tokens`` (the rebuild-from-scratch oracle)."""
        s = cls(session_id)
        for tok in tokens:
            s.append(target, int(tok))
        return s

    def equals(self, other: KvSession) -> bool:
        """Token-equal and byte-equal cached features."""
        return (
            self.tokens == other.tokens
            and len(self.features) == len(other.features)
            and all(a.tobytes() == b.tobytes() for a, b in zip(self.features, other.features))
        )


def rollback(session: KvSession, accepted_len: int) -> KvSession:
    """Truncate ``session`` to its first ``accepted_len`` positions, in place."""
    if not 0 <= accepted_len <= session.length:
        raise ValueError(f"accepted_len {accepted_len} outside [0, {session.length}]")
    del session.tokens[accepted_len:]
    del session.features[accepted_len:]
    return session


def verify_block(target, session: KvSession, msg: DraftBlockMsg) -> tuple[VerifyResultMsg, KvSession]:
    """Greedy left-to-right verification of a drafted block.

    Position ``j`` is accepted iff the drafted token equals the target argmax
    given the committed context plus the accepted prefix. The correction is
    the target argmax at the first mismatch, or the bonus token after a fully
    accepted block. Rejected positions are rolled back before the correction
    is committed.
    """
    if msg.session_id != session.session_id:
        raise SessionDesyncError(f"message for session {msg.session_id} sent to {session.session_id}")
    if msg.seq_offset != session.length:
        raise SessionDesyncError(f"offset {msg.seq_offset} != committed length {session.length}")
    if session.length == 0:
        raise SessionDesyncError("session has no committed context")
    base = session.length
    vocab = target.vocab_size
    for tok in msg.tokens:
        if not 0 <= tok < vocab:
            raise ValueError(f"drafted token {tok} outside vocabulary")
        session.append(target, tok)
    tau = 0
    for j, tok in enumerate(msg.tokens):
        pred = int(np.argmax(target.logits_from_features(session.features[base - 1 + j])))
        if tok != pred:
            break
        tau += 1
    correction = int(np.argmax(target.logits_from_features(session.features[base - 1 + tau])))
    rollback(session, base + tau)
    session.append(target, correction)
    return VerifyResultMsg(session.session_id, base, tau, correction), session
