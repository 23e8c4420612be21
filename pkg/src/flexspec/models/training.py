"""One-time offline draft-head training: feature regression plus soft-target KD.

Only the draft head and the projection ``w_p`` are trained; the anchor block
and lm_head are read, never written.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import log_softmax, softmax

from .anchored import DraftModel, HeadParams, TargetModel, make_draft
from .corpus import Corpus

TRAINABLE = ("W1", "b1", "W2", "b2", "w_p")


class TrainingError(RuntimeError):
    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step


@dataclass(frozen=True)
class TrainingConfig:
    lambda1: float = 1.0
    lambda2: float = 1.0
    temperature: float = 2.0
    lr: float = 0.05
    steps: int = 2000
    batch: int = 32
    seq_len: int = 32
    seed: int = 0
    hidden: int = 32

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be >= 0")
        if self.lambda1 == 0 and self.lambda2 == 0:
            raise ValueError("lambda1 and lambda2 cannot both be 0")
        if self.steps < 0 or self.batch < 1 or self.seq_len < 1:
            raise ValueError("steps must be >= 0, batch and seq_len >= 1")


def loss_feat(h_d: np.ndarray, h_t: np.ndarray, w_p: np.ndarray) -> float:
    """Mean over rows of ``||w_p h_d - h_t||^2``."""
    h_d = np.atleast_2d(h_d)
    h_t = np.atleast_2d(h_t)
    if h_d.shape != h_t.shape or w_p.shape != (h_t.shape[1], h_d.shape[1]):
        raise ValueError(f"shape mismatch: h_d {h_d.shape}, h_t {h_t.shape}, w_p {w_p.shape}")
    r = h_d @ w_p.T - h_t
    return float(np.mean(np.sum(r * r, axis=1)))


def loss_kd(z_t: np.ndarray, z_d: np.ndarray, temperature: float) -> float:
    """``T^2 * KL(softmax(z_t/T) || softmax(z_d/T))`` averaged over rows; teacher first."""
    z_t = np.atleast_2d(z_t)
    z_d = np.atleast_2d(z_d)
    if z_t.shape != z_d.shape:
        raise ValueError(f"logit shape mismatch {z_t.shape} vs {z_d.shape}")
    if not (np.all(np.isfinite(z_t)) and np.all(np.isfinite(z_d))):
        raise ValueError("non-finite logits")
    if not temperature > 0:
        raise ValueError("temperature must be > 0")
    log_p = log_softmax(z_t / temperature, axis=1)
    log_q = log_softmax(z_d / temperature, axis=1)
    kl = np.sum(np.exp(log_p) * (log_p - log_q), axis=1)
    return float(temperature**2 * np.mean(kl))


def loss_and_gradients(head: HeadParams, w_p: np.ndarray, lm_head: np.ndarray, a: np.ndarray,
                       h_t: np.ndarray, z_t: np.ndarray, cfg: TrainingConfig) -> tuple[float, dict[str, np.ndarray]]:
    """Total loss ``lambda1 * L_feat + lambda2 * L_KD`` and its analytic gradients.

    ``a`` holds the frozen anchor outputs feeding the head, one row per
    position. Gradients are returned for the trainable groups only.
    """
    n = a.shape[0]
    T = cfg.temperature
    s = np.tanh(a @ head.W1.T + head.b1)
    g = s @ head.W2.T + head.b2
    r = g @ w_p.T - h_t
    z_d = g @ lm_head.T
    l_feat = float(np.mean(np.sum(r * r, axis=1)))
    l_kd = loss_kd(z_t, z_d, T) if cfg.lambda2 else 0.0

    dg = np.zeros_like(g)
    grads = {}
    if cfg.lambda1:
        dr = (2.0 * cfg.lambda1 / n) * r
        grads["w_p"] = dr.T @ g
        dg += dr @ w_p
    else:
        grads["w_p"] = np.zeros_like(w_p)
    if cfg.lambda2:
        p = softmax(z_t / T, axis=1)
        q = softmax(z_d / T, axis=1)
        dg += (cfg.lambda2 * T / n) * (q - p) @ lm_head
    grads["W2"] = dg.T @ s
    grads["b2"] = dg.sum(axis=0)
    du = (dg @ head.W2) * (1.0 - s * s)
    grads["W1"] = du.T @ a
    grads["b1"] = du.sum(axis=0)
    return cfg.lambda1 * l_feat + cfg.lambda2 * l_kd, grads


@dataclass(frozen=True, eq=False)
class TrainingData:
    """Frozen per-position inputs and teacher outputs for a corpus."""

    a: np.ndarray  # (n_seq, L, d) anchor outputs of the draft proxy features
    h_t: np.ndarray  # (n_seq, L, d)
    z_t: np.ndarray  # (n_seq, L, V)


def prepare_data(base: TargetModel, draft: DraftModel, corpus: Corpus, seq_len: int) -> TrainingData:
    seqs = corpus.sequences[:, :seq_len]
    h_t, z_t = base.forward_sequences(seqs)
    a = draft.anchor(draft.proxy.batch(seqs))
    return TrainingData(a, h_t, z_t)


def train_draft(base: TargetModel, corpus: Corpus, cfg: TrainingConfig, anchored: bool = True,
                draft: DraftModel | None = None, data: TrainingData | None = None) -> DraftModel:
    """Plain gradient descent on the head and ``w_p`` over random minibatches.

    ``base`` must be the version-0 target. The returned draft carries the
    per-step loss history in ``train_history``.
    """
    if base.version_id != 0:
        raise ValueError("draft training requires the version-0 base target")
    if draft is None:
        draft = make_draft(base, hidden=cfg.hidden, seed=cfg.seed, anchored=anchored)
    if data is None:
        data = prepare_data(base, draft, corpus, cfg.seq_len)
    rng = np.random.default_rng([cfg.seed, 0x7EA1])
    n_seq = data.a.shape[0]
    d, v = data.h_t.shape[-1], data.z_t.shape[-1]
    params = {k: np.array(v_, copy=True) for k, v_ in draft.head.as_dict().items()}
    params["w_p"] = np.array(draft.w_p, copy=True)
    history = []
    for step in range(cfg.steps):
        idx = rng.choice(n_seq, size=min(cfg.batch, n_seq), replace=False)
        a = data.a[idx].reshape(-1, d)
        h_t = data.h_t[idx].reshape(-1, d)
        z_t = data.z_t[idx].reshape(-1, v)
        head = HeadParams(params["W1"], params["b1"], params["W2"], params["b2"])
        loss, grads = loss_and_gradients(head, params["w_p"], draft.lm_head, a, h_t, z_t, cfg)
        if not np.isfinite(loss):
            raise TrainingError(step, f"loss diverged ({loss})")
        history.append(loss)
        for name in TRAINABLE:
            params[name] -= cfg.lr * grads[name]
    head = HeadParams(params["W1"], params["b1"], params["W2"], params["b2"])
    return replace(draft, head=head, w_p=params["w_p"], train_history=tuple(history))


def evaluate_loss(draft: DraftModel, data: TrainingData, cfg: TrainingConfig) -> float:
    d, v = data.h_t.shape[-1], data.z_t.shape[-1]
    loss, _ = loss_and_gradients(draft.head, draft.w_p, draft.lm_head, data.a.reshape(-1, d),
                                 data.h_t.reshape(-1, d), data.z_t.reshape(-1, v), cfg)
    return loss
