"""Toy anchored model family.

The target is ``lm_head @ anchor(phi + adapter @ phi)`` where ``phi`` is a
hashed n-gram embedding of the context. Fine-tuning only moves ``adapter``;
the anchor block and lm_head stay frozen and are shared with the draft, whose
trainable two-layer head sits on ``anchor(proxy(context))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .hashing import BOS, _seed_key, hash_tokens, hash_windows, padded_windows

DEFAULT_VOCAB = 64
DEFAULT_DIM = 16
DEFAULT_HIDDEN = 32
TARGET_WINDOW = 4
PROXY_WINDOW = 2
DEFAULT_BUCKETS = 4096
# Weight of the order-m n-gram term in the target features; lower orders dominate.
DEFAULT_ORDER_WEIGHTS = (1.0, 0.8, 0.25, 0.15)
ADAPTER_RANK = 4


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _check_context(context, vocab_size: int) -> None:
    if len(context) == 0:
        raise ValueError("context must be non-empty")
    lo, hi = min(context), max(context)
    if lo < 0 or hi >= vocab_size:
        raise ValueError(f"token {lo if lo < 0 else hi} outside vocabulary of size {vocab_size}")


@dataclass(frozen=True)
class Vocab:
    size: int = DEFAULT_VOCAB

    def __post_init__(self):
        if self.size < 2:
            raise ValueError(f"vocab size must be >= 2, got {self.size}")


@dataclass(frozen=True, eq=False)
class AnchorBlock:
    """Frozen ``tanh(W x + b)`` block shared by target and draft."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weight", _frozen(self.weight))
        object.__setattr__(self, "bias", _frozen(self.bias))

    @classmethod
    def random(cls, dim: int, rng: np.random.Generator, gain: float = 1.5) -> AnchorBlock:
        w = rng.normal(0.0, gain / np.sqrt(dim), size=(dim, dim))
        b = rng.normal(0.0, 0.1, size=dim)
        return cls(w, b)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.tanh(x @ self.weight.T + self.bias)


@dataclass(frozen=True, eq=False)
class NGramFeatures:
    """Hashed n-gram embedding: ``sum_m w_m * table_m[hash(last m tokens)]``."""

    tables: np.ndarray  # (window, buckets, dim)
    weights: np.ndarray  # (window,)
    seed: int
    _keys: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "tables", _frozen(self.tables))
        object.__setattr__(self, "weights", _frozen(self.weights))
        keys = tuple(_seed_key(self.seed, m) for m in range(1, self.window + 1))
        object.__setattr__(self, "_keys", keys)

    @classmethod
    def random(cls, dim: int, window: int, seed: int, buckets: int = DEFAULT_BUCKETS,
               weights=DEFAULT_ORDER_WEIGHTS) -> NGramFeatures:
        rng = np.random.default_rng([seed, 0xFEA7])
        tables = rng.normal(0.0, 1.0 / np.sqrt(dim), size=(window, buckets, dim))
        return cls(tables, np.asarray(weights[:window], dtype=np.float64), seed)

    @property
    def window(self) -> int:
        return self.tables.shape[0]

    @property
    def dim(self) -> int:
        return self.tables.shape[2]

    def truncated(self, window: int) -> NGramFeatures:
        """The same basis restricted to the ``window`` lowest orders."""
        return NGramFeatures(self.tables[:window], self.weights[:window], self.seed)

    def __call__(self, context) -> np.ndarray:
        buckets = self.tables.shape[1]
        out = np.zeros(self.dim)
        for m in range(1, self.window + 1):
            tail = list(context[-m:])
            if len(tail) < m:
                tail = [BOS] * (m - len(tail)) + tail
            b = hash_tokens(self._keys[m - 1], tail) % buckets
            out += self.weights[m - 1] * self.tables[m - 1, b]
        return out

    def batch(self, seqs: np.ndarray) -> np.ndarray:
        """Features of every prefix of every row of ``seqs`` (N, L) -> (N, L, dim)."""
        buckets = np.uint64(self.tables.shape[1])
        out = np.zeros(seqs.shape + (self.dim,))
        for m in range(1, self.window + 1):
            b = (hash_windows(self._keys[m - 1], padded_windows(seqs, m)) % buckets).astype(np.int64)
            out += self.weights[m - 1] * self.tables[m - 1][b]
        return out


@dataclass(frozen=True, eq=False)
class BackboneVersion:
    version_id: int
    features: NGramFeatures
    adapter: np.ndarray
    param_count: int = 70_000_000_000

    def __post_init__(self):
        object.__setattr__(self, "adapter", _frozen(self.adapter))

    def __call__(self, context) -> np.ndarray:
        phi = self.features(context)
        return phi + self.adapter @ phi


@dataclass(frozen=True, eq=False)
class TargetModel:
    backbone: BackboneVersion
    anchor: AnchorBlock
    lm_head: np.ndarray  # (vocab, dim)

    def __post_init__(self):
        if self.lm_head.flags.writeable:
            object.__setattr__(self, "lm_head", _frozen(self.lm_head))

    @property
    def vocab_size(self) -> int:
        return self.lm_head.shape[0]

    @property
    def dim(self) -> int:
        return self.lm_head.shape[1]

    @property
    def version_id(self) -> int:
        return self.backbone.version_id

    def target_logits(self, context) -> tuple[np.ndarray, np.ndarray]:
        _check_context(context, self.vocab_size)
        h = self.anchor(self.backbone(context))
        return h, self.lm_head @ h

    def logits_from_features(self, h: np.ndarray) -> np.ndarray:
        return self.lm_head @ h

    def forward_sequences(self, seqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Hidden states and logits after every prefix of every row: (N, L, d), (N, L, V)."""
        phi = self.backbone.features.batch(seqs)
        phi = phi + phi @ self.backbone.adapter.T
        h = self.anchor(phi)
        return h, h @ self.lm_head.T


def target_logits(m: TargetModel, context) -> tuple[np.ndarray, np.ndarray]:
    return m.target_logits(context)


def make_base_target(vocab_size: int = DEFAULT_VOCAB, dim: int = DEFAULT_DIM, seed: int = 0,
                     window: int = TARGET_WINDOW, buckets: int = DEFAULT_BUCKETS,
                     order_weights=DEFAULT_ORDER_WEIGHTS) -> TargetModel:
    """Version-0 target of the anchored family."""
    Vocab(vocab_size)
    rng = np.random.default_rng([seed, 0xBA5E])
    anchor = AnchorBlock.random(dim, rng)
    lm_head = rng.normal(0.0, 1.0, size=(vocab_size, dim))
    features = NGramFeatures.random(dim, window, seed, buckets, order_weights)
    backbone = BackboneVersion(0, features, np.zeros((dim, dim)))
    return TargetModel(backbone, anchor, lm_head)


def fine_tune(m: TargetModel, magnitude: float, task_seed: int, rank: int = ADAPTER_RANK) -> TargetModel:
    """Adapter-only update: ``adapter += magnitude * R / ||R||_2``.

    ``R = U @ V`` is a seeded Gaussian d x d matrix of the given rank, the
    low-rank shape of a LoRA update. The anchor block, lm_head and feature
    basis are carried over unchanged.
    """
    if magnitude < 0:
        raise ValueError(f"magnitude must be >= 0, got {magnitude}")
    d = m.dim
    rank = min(rank, d)
    rng = np.random.default_rng([task_seed, 0xF17E])
    r = rng.normal(size=(d, rank)) @ rng.normal(size=(rank, d))
    r /= np.linalg.norm(r, 2)
    adapter = m.backbone.adapter + magnitude * r
    backbone = replace(m.backbone, version_id=m.backbone.version_id + 1, adapter=adapter)
    return TargetModel(backbone, m.anchor, m.lm_head)


@dataclass(frozen=True, eq=False)
class HeadParams:
    """Two-layer perceptron ``W2 tanh(W1 x + b1) + b2``."""

    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @classmethod
    def random(cls, dim: int, hidden: int, rng: np.random.Generator, out_scale: float = 0.1) -> HeadParams:
        return cls(
            W1=rng.normal(0.0, 1.0 / np.sqrt(dim), size=(hidden, dim)),
            b1=np.zeros(hidden),
            W2=rng.normal(0.0, out_scale / np.sqrt(hidden), size=(dim, hidden)),
            b2=np.zeros(dim),
        )

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return np.tanh(x @ self.W1.T + self.b1) @ self.W2.T + self.b2

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    @property
    def size(self) -> int:
        return sum(a.size for a in self.as_dict().values())


@dataclass(frozen=True, eq=False)
class DraftModel:
    anchor: AnchorBlock
    lm_head: np.ndarray
    proxy: NGramFeatures
    head: HeadParams
    w_p: np.ndarray
    anchored: bool = True
    train_history: tuple[float, ...] = ()

    @property
    def vocab_size(self) -> int:
        return self.lm_head.shape[0]

    @property
    def param_count(self) -> int:
        return self.head.size + self.anchor.weight.size + self.anchor.bias.size + self.lm_head.size

    def anchor_features(self, context) -> np.ndarray:
        return self.anchor(self.proxy(context))

    def draft_logits(self, context) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(h_d, z_d)``: the head's predicted post-anchor feature and its logits."""
        _check_context(context, self.vocab_size)
        h = self.head(self.anchor_features(context))
        return h, self.lm_head @ h


def draft_logits(m: DraftModel, context) -> tuple[np.ndarray, np.ndarray]:
    return m.draft_logits(context)


def make_draft(base: TargetModel, hidden: int = DEFAULT_HIDDEN, seed: int = 0, anchored: bool = True,
               proxy_window: int = PROXY_WINDOW) -> DraftModel:
    """Untrained draft for ``base``.

    Anchored drafts share the base anchor block and lm_head. The non-anchored
    baseline replaces the anchor with its own frozen random block of the same
    shape and keeps the shared lm_head.
    """
    rng = np.random.default_rng([seed, 0xD4AF])
    dim = base.dim
    proxy = base.backbone.features.truncated(proxy_window)
    head = HeadParams.random(dim, hidden, rng)
    if anchored:
        anchor, lm_head = base.anchor, base.lm_head
    else:
        own = np.random.default_rng([seed, 0x0BAD])
        anchor = AnchorBlock.random(dim, own)
        lm_head = base.lm_head
    return DraftModel(anchor, lm_head, proxy, head, np.eye(dim), anchored)


def target_greedy(target, prompt, n: int) -> list[int]:
    """Greedy continuation of ``prompt`` by the target alone (the losslessness oracle)."""
    ctx = list(prompt)
    out = []
    for _ in range(n):
        _, z = target.target_logits(ctx)
        tok = int(np.argmax(z))
        ctx.append(tok)
        out.append(tok)
    return out
