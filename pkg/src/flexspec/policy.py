"""Stride selection: ETGR-maximizing adaptive policy, EMA acceptance tracking, baselines."""
from __future__ import annotations

from dataclasses import dataclass, replace

GEOMETRIC = "geometric"
LINEAR = "linear"
ACCEPTANCE_MODELS = (GEOMETRIC, LINEAR)

PER_ROUND = "per-round"
PER_TOKEN = "per-token"
ESTIMATORS = (PER_ROUND, PER_TOKEN)


@dataclass(frozen=True)
class AcceptanceEstimator:
    """Online acceptance estimate.

    ``per-round`` (default) smooths ``tau / k`` directly. Under prefix-stopped
    verification that ratio sits below the per-token acceptance probability,
    so ``per-token`` is offered as an alternative: it smooths accepted tokens
    and observed Bernoulli trials separately and reports their ratio.
    """

    gamma_hat: float = 0.8
    mu: float = 0.1
    mode: str = PER_ROUND
    accepted_ema: float | None = None
    trials_ema: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.gamma_hat <= 1.0:
            raise ValueError(f"gamma_hat must be in [0, 1], got {self.gamma_hat}")
        if not 0.0 < self.mu <= 1.0:
            raise ValueError(f"mu must be in (0, 1], got {self.mu}")
        if self.mode not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.mode!r}")


@dataclass(frozen=True)
class PolicyConfig:
    k_max: int = 8
    acceptance_model: str = GEOMETRIC
    fallback_threshold: float = 0.05
    tie_break: str = "smallest-K"

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError(f"k_max must be >= 1, got {self.k_max}")
        if self.acceptance_model not in ACCEPTANCE_MODELS:
            raise ValueError(f"unknown acceptance_model {self.acceptance_model!r}")
        if not 0.0 <= self.fallback_threshold <= 1.0:
            raise ValueError("fallback_threshold must be in [0, 1]")
        if self.tie_break != "smallest-K":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")


@dataclass(frozen=True)
class PolicyDecision:
    k: int
    predicted_etgr: float
    fallback_engaged: bool = False


def expected_accepted(gamma: float, k: int, model: str = GEOMETRIC) -> float:
    """Expected accepted draft tokens out of ``k`` at per-token acceptance ``gamma``.

    The geometric form is the mean of a prefix-stopped Bernoulli process,
    ``gamma * (1 - gamma**k) / (1 - gamma)``; the linear form is ``gamma * k``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if model == LINEAR:
        return min(gamma * k, float(k))
    if model != GEOMETRIC:
        raise ValueError(f"unknown acceptance model {model!r}")
    if gamma >= 1.0:
        return float(k)
    return gamma * (1.0 - gamma**k) / (1.0 - gamma)


def predicted_etgr(gamma: float, k: int, t_fixed: float, t_marginal: float, model: str = GEOMETRIC) -> float:
    """Committed tokens per second for one round: accepted tokens plus the correction token."""
    denom = t_fixed + k * t_marginal
    if not denom > 0:
        raise ValueError(f"round latency must be positive, got {denom}")
    return (1.0 + expected_accepted(gamma, k, model)) / denom


def select_k(est: AcceptanceEstimator, t_fixed: float, t_marginal: float, cfg: PolicyConfig) -> PolicyDecision:
    if est.gamma_hat < cfg.fallback_threshold:
        return PolicyDecision(1, predicted_etgr(est.gamma_hat, 1, t_fixed, t_marginal, cfg.acceptance_model), True)
    best_k, best = 1, -1.0
    for k in range(1, cfg.k_max + 1):
        v = predicted_etgr(est.gamma_hat, k, t_fixed, t_marginal, cfg.acceptance_model)
        if v > best:  # strict: ties keep the smaller k
            best_k, best = k, v
    return PolicyDecision(best_k, best, False)


def update_ema(est: AcceptanceEstimator, tau: int, k: int) -> AcceptanceEstimator:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not 0 <= tau <= k:
        raise ValueError(f"tau must be in [0, k], got tau={tau}, k={k}")
    mu = est.mu
    if est.mode == PER_TOKEN:
        # Seed the trial/acceptance pair so that the initial ratio is gamma_hat.
        acc = est.gamma_hat if est.accepted_ema is None else est.accepted_ema
        trials = 1.0 if est.trials_ema is None else est.trials_ema
        acc = (1.0 - mu) * acc + mu * tau
        trials = (1.0 - mu) * trials + mu * (tau + (1 if tau < k else 0))
        return replace(est, gamma_hat=min(1.0, max(0.0, acc / trials)), accepted_ema=acc, trials_ema=trials)
    g = (1.0 - mu) * est.gamma_hat + mu * (tau / k)
    return replace(est, gamma_hat=min(1.0, max(0.0, g)))


class AdaptivePolicy:
    name = "adaptive"
    cloud_only = False

    def __init__(self, cfg: PolicyConfig | None = None):
        self.cfg = cfg or PolicyConfig()

    def decide(self, est: AcceptanceEstimator, t_fixed: float, t_marginal: float) -> PolicyDecision:
        return select_k(est, t_fixed, t_marginal, self.cfg)


class FixedKPolicy:
    cloud_only = False

    def __init__(self, k: int, cfg: PolicyConfig | None = None):
        if k < 1:
            raise ValueError(f"fixed k must be >= 1, got {k}")
        self.cfg = cfg or PolicyConfig()
        self.k = min(k, self.cfg.k_max)
        self.name = f"fixed:{self.k}"

    def decide(self, est: AcceptanceEstimator, t_fixed: float, t_marginal: float) -> PolicyDecision:
        etgr = predicted_etgr(est.gamma_hat, self.k, t_fixed, t_marginal, self.cfg.acceptance_model)
        return PolicyDecision(self.k, etgr, False)


class CloudOnlyPolicy:
    """Plain autoregressive decoding on the cloud: one token per round, nothing drafted."""

    name = "cloud_only"
    cloud_only = True

    def decide(self, est: AcceptanceEstimator, t_fixed: float, t_marginal: float) -> PolicyDecision:
        return PolicyDecision(1, 1.0 / t_fixed, False)


def fixed_k_policy(k: int, cfg: PolicyConfig | None = None) -> FixedKPolicy:
    return FixedKPolicy(k, cfg)


def cloud_only_policy() -> CloudOnlyPolicy:
    return CloudOnlyPolicy()


def parse_policy(spec: str, cfg: PolicyConfig | None = None):
    """Build a policy from ``adaptive``, ``fixed:<k>`` or ``cloud_only``."""
    spec = spec.strip()
    if spec == "adaptive":
        return AdaptivePolicy(cfg)
    if spec == "cloud_only":
        return CloudOnlyPolicy()
    if spec.startswith("fixed:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad fixed policy {spec!r}") from None
        return FixedKPolicy(k, cfg)
    raise ValueError(f"unknown policy {spec!r}")
