"""INI scenario files: parsing with strict key checking, and a resolved echo for provenance."""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace

from .latency import LatencyParams, PowerParams
from .models import TrainingConfig
from .policy import AcceptanceEstimator, parse_policy
from .protocol import HEADER_BITS, TOKEN_BITS
from .sim import AnchoredModelSpec, BernoulliModelSpec, ChannelSpec, PolicySpec, Scenario

SECTIONS = ("model", "channel", "latency", "power", "policy", "run")
SEED_ENV = "FLEXSPEC_SEED"

_TRAINING_KEYS = ("lambda1", "lambda2", "temperature", "lr", "steps", "batch", "seq_len")
_MODEL_KEYS = {
    "kind", "p", "seed", "vocab_size", "dim", "hidden", "anchored", "corpus_size", "corpus_seq_len",
    "version_schedule", "task_seed", "checkpoint", *_TRAINING_KEYS,
}
_CHANNEL_KEYS = {
    "kind", "rate", "trace", "hold_mode", "efficiency", "rate_strong", "rate_weak", "p_stay_strong",
    "p_stay_weak", "ge_seed", "slot_s",
}
_POLICY_KEYS = {"policy", "k_max", "mu", "gamma0", "acceptance_model", "fallback_threshold", "estimator"}
_RUN_KEYS = {"budget_tokens", "prompt_len", "seed"}


class ConfigError(ValueError):
    def __init__(self, key: str, msg: str):
        super().__init__(f"{key}: {msg}")
        self.key = key


@dataclass(frozen=True)
class LoadedConfig:
    scenario: Scenario
    seed: int | None
    warnings: tuple[str, ...]
    trace_path: str | None = None


def _num(section, key, conv):
    raw = section[key]
    try:
        if conv is bool:
            return section.getboolean(key)
        if conv is int:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section.name}.{key}", f"cannot parse {raw!r}") from None


def _params(section, cls):
    """Build a flat numeric dataclass from one section, overriding defaults."""
    allowed = {f.name for f in fields(cls)}
    vals = {}
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{section.name}.{key}", "unknown key")
        vals[key] = _num(section, key, float)
    try:
        return cls(**vals)
    except ValueError as exc:
        raise ConfigError(section.name, str(exc)) from None


def _check_keys(section, allowed):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"{section.name}.{key}", "unknown key")


def parse_schedule(text: str) -> tuple[tuple[int, float], ...]:
    """``"0:0, 200:1.5"`` -> ``((0, 0.0), (200, 1.5))``."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        start, _, mag = item.partition(":")
        try:
            out.append((int(start), float(mag)))
        except ValueError:
            raise ConfigError("model.version_schedule", f"bad entry {item!r}") from None
        if out[-1][0] < 0 or out[-1][1] < 0:
            raise ConfigError("model.version_schedule", f"negative entry {item!r}")
    return tuple(out) or ((0, 0.0),)


def _model(sec):
    _check_keys(sec, _MODEL_KEYS)
    kind = sec.get("kind", "bernoulli")
    if kind == "bernoulli":
        for key in sec:
            if key not in ("kind", "p", "seed", "vocab_size"):
                raise ConfigError(f"model.{key}", "not used by the bernoulli model")
        spec = BernoulliModelSpec()
        kw = {k: _num(sec, k, float if k == "p" else int) for k in ("p", "seed", "vocab_size") if k in sec}
        if not 0.0 <= kw.get("p", spec.p) <= 1.0:
            raise ConfigError("model.p", "must be in [0, 1]")
        return replace(spec, **kw)
    if kind != "anchored":
        raise ConfigError("model.kind", f"expected bernoulli or anchored, got {kind!r}")
    if "p" in sec:
        raise ConfigError("model.p", "not used by the anchored model")
    spec = AnchoredModelSpec()
    kw = {}
    for key in ("seed", "vocab_size", "dim", "hidden", "corpus_size", "corpus_seq_len", "task_seed"):
        if key in sec:
            kw[key] = _num(sec, key, int)
    if "anchored" in sec:
        kw["anchored"] = _num(sec, "anchored", bool)
    if "version_schedule" in sec:
        kw["version_schedule"] = parse_schedule(sec["version_schedule"])
    if sec.get("checkpoint"):
        kw["checkpoint"] = sec["checkpoint"]
    tkw = {k: _num(sec, k, int if k in ("steps", "batch", "seq_len") else float) for k in _TRAINING_KEYS if k in sec}
    try:
        kw["training"] = replace(TrainingConfig(seed=kw.get("seed", 0)), **tkw)
        return replace(spec, **kw)
    except ValueError as exc:
        raise ConfigError("model", str(exc)) from None


def _channel(sec, base_dir):
    _check_keys(sec, _CHANNEL_KEYS)
    kw = {"kind": sec.get("kind", "constant")}
    if kw["kind"] not in ("constant", "trace", "gilbert_elliott"):
        raise ConfigError("channel.kind", f"unknown channel kind {kw['kind']!r}")
    for key in ("rate", "rate_strong", "rate_weak", "p_stay_strong", "p_stay_weak", "slot_s", "efficiency"):
        if key in sec:
            kw["snr_efficiency" if key == "efficiency" else key] = _num(sec, key, float)
    if "ge_seed" in sec:
        kw["ge_seed"] = _num(sec, "ge_seed", int)
    if "hold_mode" in sec:
        kw["hold_mode"] = sec["hold_mode"]
    trace_path = None
    if kw["kind"] == "trace":
        if "trace" not in sec:
            raise ConfigError("channel.trace", "required for a trace channel")
        trace_path = os.path.join(base_dir, sec["trace"])
        try:
            with open(trace_path, encoding="utf-8") as fh:
                kw["trace_text"] = fh.read()
        except OSError as exc:
            raise ConfigError("channel.trace", f"cannot read {trace_path}: {exc.strerror}") from None
    spec = ChannelSpec(**kw)
    try:
        spec.build(0)
    except ValueError as exc:
        raise ConfigError("channel", str(exc)) from None
    return spec, trace_path


def _policy(sec):
    _check_keys(sec, _POLICY_KEYS)
    kw = {}
    for key in ("policy", "acceptance_model", "estimator"):
        if key in sec:
            kw[key] = sec[key].strip()
    for key in ("mu", "gamma0", "fallback_threshold"):
        if key in sec:
            kw[key] = _num(sec, key, float)
    if "k_max" in sec:
        kw["k_max"] = _num(sec, "k_max", int)
    spec = PolicySpec(**kw)
    try:
        parse_policy(spec.policy, spec.config())
        AcceptanceEstimator(spec.gamma0, spec.mu, spec.estimator)
    except ValueError as exc:
        raise ConfigError("policy", str(exc)) from None
    return spec


def parse_config(text: str, base_dir: str = ".") -> LoadedConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc).splitlines()[0]) from None
    for name in cp.sections():
        if name not in SECTIONS:
            raise ConfigError(name, "unknown section")
    for name in SECTIONS:
        if not cp.has_section(name):
            cp.add_section(name)
    sec = {name: cp[name] for name in SECTIONS}
    model = _model(sec["model"])
    channel, trace_path = _channel(sec["channel"], base_dir)
    latency = _params(sec["latency"], LatencyParams)
    power = _params(sec["power"], PowerParams)
    policy = _policy(sec["policy"])
    run = sec["run"]
    _check_keys(run, _RUN_KEYS)
    kw = {k: _num(run, k, int) for k in ("budget_tokens", "prompt_len") if k in run}
    seed = _num(run, "seed", int) if "seed" in run else None
    try:
        scenario = Scenario(model, channel, latency, power, policy, **kw)
    except ValueError as exc:
        raise ConfigError("run", str(exc)) from None
    warnings = []
    if latency.header_bits != HEADER_BITS:
        warnings.append(f"latency.header_bits = {latency.header_bits:g} differs from the {HEADER_BITS}-bit "
                        "draft-block header on the wire; uplink time follows the configured value")
    if latency.token_bits != TOKEN_BITS:
        warnings.append(f"latency.token_bits = {latency.token_bits:g} differs from the {TOKEN_BITS}-bit "
                        "token field on the wire; uplink time follows the configured value")
    return LoadedConfig(scenario, seed, tuple(warnings), trace_path)


def load_config(path: str) -> LoadedConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)))


def resolve_seed(flag: int | None, loaded: LoadedConfig | None = None) -> int:
    """Seed precedence: command-line flag, then the config file, then the environment, then 0."""
    if flag is not None:
        return flag
    if loaded is not None and loaded.seed is not None:
        return loaded.seed
    env = os.environ.get(SEED_ENV)
    if env is None or env == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(SEED_ENV, f"not an integer: {env!r}") from None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def resolved_text(loaded: LoadedConfig, seed: int) -> str:
    """Every effective setting, in a stable order, as a loadable INI file."""
    sc = loaded.scenario
    m = sc.model
    lines = ["[model]"]
    if isinstance(m, BernoulliModelSpec):
        lines += ["kind = bernoulli", f"p = {_fmt(m.p)}", f"seed = {m.seed}", f"vocab_size = {m.vocab_size}"]
    else:
        lines += ["kind = anchored"]
        for key in ("seed", "vocab_size", "dim", "hidden", "anchored", "corpus_size", "corpus_seq_len", "task_seed"):
            lines.append(f"{key} = {_fmt(getattr(m, key))}")
        sched = ", ".join(f"{s}:{_fmt(float(g))}" for s, g in m.version_schedule)
        lines.append(f"version_schedule = {sched}")
        if m.checkpoint:
            lines.append(f"checkpoint = {m.checkpoint}")
        for key in _TRAINING_KEYS:
            lines.append(f"{key} = {_fmt(getattr(m.training, key))}")
    c = sc.channel
    lines += ["", "[channel]", f"kind = {c.kind}"]
    if c.kind == "constant":
        lines.append(f"rate = {_fmt(c.rate)}")
    elif c.kind == "trace":
        lines += [f"trace = {loaded.trace_path}", f"hold_mode = {c.hold_mode}", f"efficiency = {_fmt(c.snr_efficiency)}"]
    else:
        for key in ("rate_strong", "rate_weak", "p_stay_strong", "p_stay_weak", "ge_seed", "slot_s"):
            lines.append(f"{key} = {_fmt(getattr(c, key))}")
    for name, obj in (("latency", sc.latency), ("power", sc.power)):
        lines += ["", f"[{name}]"] + [f"{f.name} = {_fmt(float(getattr(obj, f.name)))}" for f in fields(obj)]
    p = sc.policy
    lines += ["", "[policy]"] + [f"{f.name} = {_fmt(getattr(p, f.name))}" for f in fields(p)]
    lines += ["", "[run]", f"budget_tokens = {sc.budget_tokens}", f"prompt_len = {sc.prompt_len}", f"seed = {seed}", ""]
    return "\n".join(lines)
