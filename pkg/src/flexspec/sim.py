"""Round-by-round simulation of channel-aware speculative decoding and its experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .channel import STEP_HOLD, ChannelTrace, GilbertElliottChannel, GilbertElliottParams, load_trace
from .latency import EnergyBreakdown, LatencyParams, PowerParams, StepBreakdown, energy_step, fixed_and_marginal
from .models import (
    TrainingConfig,
    bernoulli_pair,
    fine_tune,
    load_draft,
    make_base_target,
    markov_corpus,
    measure_acceptance,
    train_draft,
)
from .policy import AcceptanceEstimator, PolicyConfig, parse_policy, predicted_etgr, select_k, update_ema
from .protocol import CloudServer, EdgeState, run_cloud_only_round, run_round

COMPONENTS = ("edge", "up", "cloud", "down")


class SimulationError(RuntimeError):
    def __init__(self, round_index: int, cause: Exception):
        super().__init__(f"round {round_index}: {cause}")
        self.round_index = round_index


@dataclass(frozen=True)
class BernoulliModelSpec:
    p: float = 0.8
    seed: int = 0
    vocab_size: int = 64


@dataclass(frozen=True)
class AnchoredModelSpec:
    seed: int = 0
    vocab_size: int = 64
    dim: int = 16
    hidden: int = 32
    anchored: bool = True
    corpus_size: int = 5000
    corpus_seq_len: int = 32
    training: TrainingConfig = TrainingConfig()
    # (first round, fine-tune magnitude) pairs; magnitude 0 is the base target.
    version_schedule: tuple[tuple[int, float], ...] = ((0, 0.0),)
    task_seed: int = 1
    checkpoint: str | None = None


@dataclass(frozen=True)
class ChannelSpec:
    kind: str = "constant"  # constant | trace | gilbert_elliott
    rate: float = 1e6
    trace_text: str | None = None
    hold_mode: str = STEP_HOLD
    snr_efficiency: float = 1.0
    rate_strong: float = 1e6
    rate_weak: float = 1e4
    p_stay_strong: float = 0.9
    p_stay_weak: float = 0.9
    ge_seed: int = 0
    slot_s: float = 1.0

    def build(self, seed: int = 0):
        if self.kind == "constant":
            return ChannelTrace.constant(self.rate)
        if self.kind == "trace":
            if self.trace_text is None:
                raise ValueError("trace channel needs trace_text")
            return load_trace(self.trace_text, self.hold_mode, self.snr_efficiency)
        if self.kind == "gilbert_elliott":
            params = GilbertElliottParams(self.rate_strong, self.rate_weak, self.p_stay_strong,
                                          self.p_stay_weak, _mix_seed(self.ge_seed, seed))
            return GilbertElliottChannel(params, self.slot_s)
        raise ValueError(f"unknown channel kind {self.kind!r}")


@dataclass(frozen=True)
class PolicySpec:
    policy: str = "adaptive"
    k_max: int = 8
    mu: float = 0.1
    gamma0: float = 0.8
    acceptance_model: str = "geometric"
    fallback_threshold: float = 0.05
    estimator: str = "per-round"

    def config(self) -> PolicyConfig:
        return PolicyConfig(self.k_max, self.acceptance_model, self.fallback_threshold)


@dataclass(frozen=True)
class Scenario:
    model: BernoulliModelSpec | AnchoredModelSpec = BernoulliModelSpec()
    channel: ChannelSpec = ChannelSpec()
    latency: LatencyParams = LatencyParams()
    power: PowerParams = PowerParams()
    policy: PolicySpec = PolicySpec()
    budget_tokens: int = 1000
    prompt_len: int = 8

    def __post_init__(self):
        if self.budget_tokens < 1:
            raise ValueError("budget_tokens must be >= 1")
        if self.prompt_len < 1:
            raise ValueError("prompt_len must be >= 1")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    rate_bps: float
    k: int
    tau: int
    step: StepBreakdown
    energy: EnergyBreakdown
    gamma_hat: float
    fallback: bool

    @property
    def emitted(self) -> int:
        return self.tau + 1


@dataclass(frozen=True)
class Metrics:
    etgr_emitted: float
    etgr_accepted: float
    mean_acceptance: float
    mean_token_latency_s: float
    p95_token_latency_s: float
    total_energy_j: float
    energy_per_token_j: float
    total_time_s: float
    tokens_emitted: int
    tokens_accepted: int
    rounds: int
    mean_k: float
    time_shares: dict[str, float] = field(default_factory=dict)
    energy_shares: dict[str, float] = field(default_factory=dict)


def _mix_seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) & 0xFFFFFFFF for p in parts]).generate_state(1)[0])


def _shares(values: dict[str, float]) -> dict[str, float]:
    total = math.fsum(values.values())
    if total <= 0:
        return {k: 0.0 for k in values}
    return {k: v / total for k, v in values.items()}


def compute_metrics(records) -> Metrics:
    """Aggregate per-round records. ETGR is the ratio of totals."""
    if not records:
        zeros = {c: 0.0 for c in COMPONENTS}
        return Metrics(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0.0, zeros, dict(zeros))
    total_time = math.fsum(r.step.t_total for r in records)
    emitted = sum(r.emitted for r in records)
    accepted = sum(r.tau for r in records)
    per_token = np.repeat([r.step.t_total / r.emitted for r in records], [r.emitted for r in records])
    per_token.sort()
    rank = max(1, math.ceil(0.95 * per_token.size))
    time_parts = {
        "edge": math.fsum(r.step.t_edge for r in records),
        "up": math.fsum(r.step.t_up for r in records),
        "cloud": math.fsum(r.step.t_cloud for r in records),
        "down": math.fsum(r.step.t_down for r in records),
    }
    energy_parts = {
        "edge": math.fsum(r.energy.e_edge for r in records),
        "up": math.fsum(r.energy.e_up for r in records),
        "cloud": math.fsum(r.energy.e_cloud for r in records),
        "down": math.fsum(r.energy.e_down for r in records),
    }
    total_energy = math.fsum(energy_parts.values())
    return Metrics(
        etgr_emitted=emitted / total_time,
        etgr_accepted=accepted / total_time,
        mean_acceptance=float(np.mean([r.tau / r.k for r in records])),
        mean_token_latency_s=total_time / emitted,
        p95_token_latency_s=float(per_token[rank - 1]),
        total_energy_j=total_energy,
        energy_per_token_j=total_energy / emitted,
        total_time_s=total_time,
        tokens_emitted=emitted,
        tokens_accepted=accepted,
        rounds=len(records),
        mean_k=float(np.mean([r.k for r in records])),
        time_shares=_shares(time_parts),
        energy_shares=_shares(energy_parts),
    )


@lru_cache(maxsize=16)
def _anchored_models(spec: AnchoredModelSpec):
    base = make_base_target(spec.vocab_size, spec.dim, spec.seed)
    if spec.checkpoint:
        with open(spec.checkpoint, "rb") as fh:
            draft = load_draft(fh.read())
    else:
        corpus = markov_corpus(spec.corpus_size, spec.corpus_seq_len, spec.vocab_size, spec.seed)
        cfg = replace(spec.training, hidden=spec.hidden)
        draft = train_draft(base, corpus, cfg, anchored=spec.anchored)
    return draft, base


def build_models(spec):
    """``(draft, version-0 target)`` for a model spec."""
    if isinstance(spec, BernoulliModelSpec):
        return bernoulli_pair(spec.p, spec.seed, spec.vocab_size)
    # The version schedule does not affect training, so it is left out of the cache key.
    return _anchored_models(replace(spec, version_schedule=((0, 0.0),), task_seed=0))


def version_targets(spec, base) -> list[tuple[int, object]]:
    """``(first round, target)`` for each entry of the version schedule.

    Entry ``i`` (in start order) fine-tunes the base with ``task_seed + i``.
    """
    if not isinstance(spec, AnchoredModelSpec):
        return [(0, base)]
    out = []
    for i, (start, magnitude) in enumerate(sorted(spec.version_schedule)):
        out.append((int(start), fine_tune(base, magnitude, spec.task_seed + i) if magnitude > 0 else base))
    if not out or out[0][0] > 0:
        out.insert(0, (0, base))
    return out


def make_prompt(scenario: Scenario, seed: int) -> list[int]:
    spec = scenario.model
    if isinstance(spec, AnchoredModelSpec):
        src = markov_corpus(1, scenario.prompt_len, spec.vocab_size, _mix_seed(spec.seed, seed, 0x9E7))
        return [int(t) for t in src.sequences[0]]
    rng = np.random.default_rng([seed, 0x9A0])
    return [int(t) for t in rng.integers(spec.vocab_size, size=scenario.prompt_len)]


@dataclass(frozen=True)
class SimResult:
    records: list[RoundRecord]
    metrics: Metrics
    prompt: list[int]
    output: list[int]


def simulate(scenario: Scenario, seed: int = 0, policy=None) -> SimResult:
    """Run rounds until ``budget_tokens`` tokens are committed.

    The channel is sampled at the accumulated simulated time at the start of
    each round, so the realization is shared across policies for one seed.
    """
    draft, base = build_models(scenario.model)
    channel = scenario.channel.build(seed)
    lp = scenario.latency
    pspec = scenario.policy
    if policy is None:
        policy = parse_policy(pspec.policy, pspec.config())
    est = AcceptanceEstimator(pspec.gamma0, pspec.mu, pspec.estimator)
    prompt = make_prompt(scenario, seed)
    versions = version_targets(scenario.model, base)
    cloud = CloudServer(versions[0][1])
    next_version = 1
    session_id = seed & 0xFFFFFFFF
    cloud.open_session(session_id, prompt)
    edge = EdgeState(draft, session_id, list(prompt))
    records: list[RoundRecord] = []
    now = 0.0
    emitted = 0
    n = 0
    while emitted < scenario.budget_tokens:
        try:
            while next_version < len(versions) and versions[next_version][0] <= n:
                cloud.replace_target(versions[next_version][1])
                next_version += 1
            rate = channel.rate_at(now)
            t_fixed, t_marginal = fixed_and_marginal(rate, lp)
            decision = policy.decide(est, t_fixed, t_marginal)
            if policy.cloud_only:
                outcome, step = run_cloud_only_round(edge, cloud, rate, lp)
            else:
                outcome, step = run_round(edge, cloud, decision.k, rate, lp)
                est = update_ema(est, outcome.tau, outcome.k_used)
        except Exception as exc:
            raise SimulationError(n, exc) from exc
        energy = energy_step(step, scenario.power)
        records.append(RoundRecord(n, rate, outcome.k_used, outcome.tau, step, energy, est.gamma_hat,
                                   decision.fallback_engaged))
        now += step.t_total
        emitted += len(outcome.emitted)
        n += 1
    output = edge.context[len(prompt):]
    return SimResult(records, compute_metrics(records), prompt, output)


@dataclass(frozen=True)
class SweepRow:
    label: str
    metrics: Metrics


def sweep_k(scenario: Scenario, k_values, include_adaptive: bool = True, seed: int = 0) -> list[SweepRow]:
    """Fixed-stride and adaptive runs under one seed (same channel realization and models)."""
    k_values = list(k_values)
    if not k_values and not include_adaptive:
        raise ValueError("sweep needs at least one policy")
    specs = [f"fixed:{k}" for k in k_values] + (["adaptive"] if include_adaptive else [])
    rows = []
    for spec in specs:
        sc = replace(scenario, policy=replace(scenario.policy, policy=spec))
        rows.append(SweepRow(spec, simulate(sc, seed).metrics))
    return rows


@dataclass(frozen=True)
class ShiftRow:
    magnitude: float
    anchored: float
    baseline: float


def version_shift_eval(anchored_draft, baseline_draft, base, magnitudes, prompts, k: int = 1,
                       rounds: int = 1, task_seed: int = 1) -> list[ShiftRow]:
    """Acceptance of both static drafts against fine-tuned versions of ``base``."""
    rows = []
    for m in magnitudes:
        target = fine_tune(base, m, task_seed) if m > 0 else base
        rows.append(ShiftRow(
            float(m),
            measure_acceptance(anchored_draft, target, prompts, k, rounds),
            measure_acceptance(baseline_draft, target, prompts, k, rounds),
        ))
    return rows


def shift_experiment(spec: AnchoredModelSpec, magnitudes, n_prompts: int = 1000, prompt_len: int = 16,
                     k: int = 1, rounds: int = 1) -> list[ShiftRow]:
    """Train the anchored draft and the non-anchored baseline on one base, then evaluate both.

    By default each held-out context is scored once, so acceptance is measured
    on the corpus distribution rather than on the target's own greedy
    continuations.
    """
    anchored_draft, base = build_models(replace(spec, anchored=True, checkpoint=None))
    baseline_draft, _ = build_models(replace(spec, anchored=False, checkpoint=None))
    prompts = markov_corpus(n_prompts, prompt_len, spec.vocab_size, _mix_seed(spec.seed, 0x4E1D)).sequences
    return version_shift_eval(anchored_draft, baseline_draft, base, magnitudes, prompts, k, rounds, spec.task_seed)


@dataclass(frozen=True)
class Landscape:
    rates: np.ndarray
    ks: np.ndarray
    etgr: np.ndarray  # (len(rates), k_max)
    argmax: np.ndarray  # (len(rates),)


def optimal_k_landscape(gamma: float, p: LatencyParams, rates, k_max: int = 8,
                        model: str = "geometric") -> Landscape:
    """Predicted ETGR over ``k = 1..k_max`` for each rate, and the selected stride."""
    rates = np.asarray(list(rates), dtype=np.float64)
    if rates.size == 0:
        raise ValueError("rates must be non-empty")
    cfg = PolicyConfig(k_max, model, fallback_threshold=0.0)
    est = AcceptanceEstimator(gamma, 1.0)
    etgr = np.empty((rates.size, k_max))
    best = np.empty(rates.size, dtype=np.int64)
    for i, r in enumerate(rates):
        t_fixed, t_marginal = fixed_and_marginal(r, p)
        etgr[i] = [predicted_etgr(gamma, k, t_fixed, t_marginal, model) for k in range(1, k_max + 1)]
        best[i] = select_k(est, t_fixed, t_marginal, cfg).k
    return Landscape(rates, np.arange(1, k_max + 1), etgr, best)
