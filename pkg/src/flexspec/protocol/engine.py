"""Edge drafting, the cloud endpoint, and one full draft/verify round."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from ..latency import LatencyParams, StepBreakdown, cloud_only_step, cloud_time, edge_time, uplink_time
from .messages import DraftBlockMsg, VerifyResultMsg, decode, encode
from .session import KvSession, SessionDesyncError, verify_block


def draft_block(draft, context, k: int, temperature: float = 0.0,
                rng: np.random.Generator | None = None) -> list[int]:
    """Autoregressively propose ``k`` tokens; greedy unless ``temperature > 0``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if temperature > 0 and rng is None:
        raise ValueError("sampling requires an rng")
    ctx = list(context)
    out = []
    for _ in range(k):
        _, z = draft.draft_logits(ctx)
        if temperature > 0:
            tok = int(rng.choice(len(z), p=softmax(z / temperature)))
        else:
            tok = int(np.argmax(z))
        ctx.append(tok)
        out.append(tok)
    return out


@dataclass
class EdgeState:
    draft: object
    session_id: int
    context: list[int]
    temperature: float = 0.0
    rng: np.random.Generator | None = None


class CloudServer:
    """Cloud endpoint. Sees only encoded draft blocks, never draft parameters."""

    def __init__(self, target):
        self.target = target
        self.sessions: dict[int, KvSession] = {}

    def open_session(self, session_id: int, prompt) -> KvSession:
        if len(prompt) == 0:
            raise ValueError("prompt must be non-empty")
        s = KvSession.build(session_id, self.target, prompt)
        self.sessions[session_id] = s
        return s

    def replace_target(self, target) -> None:
        """Swap in a new target version and rebuild every session's cache from its tokens."""
        self.target = target
        for sid, s in list(self.sessions.items()):
            self.sessions[sid] = KvSession.build(sid, target, s.tokens)

    def session(self, session_id: int) -> KvSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise SessionDesyncError(f"unknown session {session_id}") from None

    def handle(self, payload: bytes) -> bytes:
        msg = decode(payload)
        if not isinstance(msg, DraftBlockMsg):
            raise SessionDesyncError("cloud expects draft blocks")
        result, _ = verify_block(self.target, self.session(msg.session_id), msg)
        return encode(result)

    def generate_one(self, session_id: int) -> int:
        s = self.session(session_id)
        tok = int(np.argmax(s.next_logits(self.target)))
        s.append(self.target, tok)
        return tok


@dataclass(frozen=True)
class RoundOutcome:
    k_used: int
    tau: int
    emitted: tuple[int, ...] = field(repr=False)
    bytes_up: int
    bytes_down: int


def run_round(edge: EdgeState, cloud: CloudServer, k: int, rate: float,
              p: LatencyParams) -> tuple[RoundOutcome, StepBreakdown]:
    """Draft ``k`` tokens, verify them on the cloud, commit the result on both sides.

    Uplink time follows the configured header/token bit sizes; with the default
    sizes that is exactly the encoded message length.
    """
    tokens = draft_block(edge.draft, edge.context, k, edge.temperature, edge.rng)
    up = encode(DraftBlockMsg(edge.session_id, len(edge.context), tuple(tokens)))
    down = cloud.handle(up)
    res = decode(down)
    if not isinstance(res, VerifyResultMsg) or res.seq_offset != len(edge.context):
        raise SessionDesyncError("verify result does not match the pending draft block")
    if res.accepted > k:
        raise SessionDesyncError(f"cloud accepted {res.accepted} of {k} tokens")
    emitted = tuple(tokens[:res.accepted]) + (res.correction,)
    edge.context.extend(emitted)
    breakdown = StepBreakdown(
        t_edge=edge_time(k, p),
        t_up=uplink_time(k, rate, p),
        t_cloud=cloud_time(k, p),
        t_down=p.t_down,
    )
    return RoundOutcome(k, res.accepted, emitted, len(up), len(down)), breakdown


def run_cloud_only_round(edge: EdgeState, cloud: CloudServer, rate: float,
                         p: LatencyParams) -> tuple[RoundOutcome, StepBreakdown]:
    """One plain autoregressive step on the cloud: nothing drafted, one token back."""
    tok = cloud.generate_one(edge.session_id)
    edge.context.append(tok)
    header = int(p.header_bits // 8)
    return RoundOutcome(1, 0, (tok,), header, 2), cloud_only_step(rate, p)
