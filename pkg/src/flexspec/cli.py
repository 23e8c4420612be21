"""Command-line entry point: ``flexspec <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import re
import sys
from dataclasses import replace

from . import config as cfgmod
from .config import ConfigError, LoadedConfig
from .latency import DEFAULT_SYNC_EFFICIENCY, LatencyParams, sync_time
from .models import make_base_target, markov_corpus, save_draft, train_draft
from .report import atomic_write, rounds_csv, summary_json
from .sim import AnchoredModelSpec, optimal_k_landscape, shift_experiment, simulate, sweep_k

log = logging.getLogger("flexspec")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3

_SUFFIXES = {"": 1.0, "k": 1e3, "m": 1e6, "g": 1e9, "t": 1e12}


class UsageError(Exception):
    pass


def parse_quantity(text: str, unit: str) -> float:
    """``"3.2GB"`` or ``"10Mbps"`` or ``"1e6"`` -> float, with decimal SI prefixes."""
    m = re.fullmatch(rf"\s*([-+0-9.eE]+)\s*([kKmMgGtT]?)(?:{unit})?\s*", text)
    if not m:
        raise UsageError(f"cannot parse {text!r}")
    try:
        value = float(m.group(1))
    except ValueError:
        raise UsageError(f"cannot parse {text!r}") from None
    return value * _SUFFIXES[m.group(2).lower()]


def parse_float_list(text: str, what: str) -> list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError(f"{what} list is empty")
    try:
        return [float(t) for t in items]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated numbers, got {text!r}") from None


def parse_int_list(text: str, what: str) -> list[int]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise UsageError(f"{what} list is empty")
    try:
        values = [int(t) for t in items]
    except ValueError:
        raise UsageError(f"{what} must be comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in values):
        raise UsageError(f"{what} values must be >= 1")
    return values


def human_duration(seconds: float) -> str:
    if seconds < 120:
        return f"{seconds:.3g} s"
    if seconds < 7200:
        return f"{seconds / 60:.4g} min"
    return f"{seconds / 3600:.4g} h"


def _load(path: str) -> LoadedConfig:
    loaded = cfgmod.load_config(path)
    for w in loaded.warnings:
        log.warning("%s", w)
    return loaded


def _outdir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_run(args) -> int:
    loaded = _load(args.config)
    seed = cfgmod.resolve_seed(args.seed, loaded)
    scenario = loaded.scenario
    if args.policy:
        scenario = replace(scenario, policy=replace(scenario.policy, policy=args.policy))
        loaded = replace(loaded, scenario=scenario)
        cfgmod.parse_config(cfgmod.resolved_text(loaded, seed))  # validates the override
    result = simulate(scenario, seed)
    out = _outdir(args.out)
    atomic_write(os.path.join(out, "rounds.csv"), rounds_csv(result.records))
    atomic_write(os.path.join(out, "summary.json"), summary_json(result.metrics))
    atomic_write(os.path.join(out, "config.resolved"), cfgmod.resolved_text(loaded, seed))
    m = result.metrics
    print(f"rounds={m.rounds} tokens={m.tokens_emitted} etgr_emitted={m.etgr_emitted:.4f} tok/s "
          f"mean_acceptance={m.mean_acceptance:.4f} energy={m.total_energy_j:.4f} J -> {out}")
    return EXIT_OK


SWEEP_HEADER = ("policy", "etgr_emitted", "etgr_accepted", "mean_acceptance", "mean_k",
                "p95_token_latency_s", "total_energy_j")


def cmd_sweep_k(args) -> int:
    loaded = _load(args.config)
    seed = cfgmod.resolve_seed(args.seed, loaded)
    ks = parse_int_list(args.k, "--k")
    rows = sweep_k(loaded.scenario, ks, include_adaptive=args.adaptive, seed=seed)
    table = _table_csv(SWEEP_HEADER, [
        (r.label, repr(r.metrics.etgr_emitted), repr(r.metrics.etgr_accepted), repr(r.metrics.mean_acceptance),
         repr(r.metrics.mean_k), repr(r.metrics.p95_token_latency_s), repr(r.metrics.total_energy_j))
        for r in rows
    ])
    if args.out:
        out = _outdir(args.out)
        atomic_write(os.path.join(out, "sweep.csv"), table)
        atomic_write(os.path.join(out, "config.resolved"), cfgmod.resolved_text(loaded, seed))
    for r in rows:
        print(f"{r.label:>10}  etgr_emitted={r.metrics.etgr_emitted:9.4f} tok/s  mean_k={r.metrics.mean_k:5.2f}")
    return EXIT_OK


def _anchored_spec(loaded: LoadedConfig, cmd: str) -> AnchoredModelSpec:
    spec = loaded.scenario.model
    if not isinstance(spec, AnchoredModelSpec):
        raise ConfigError("model.kind", f"{cmd} needs kind = anchored")
    return spec


def cmd_train_draft(args) -> int:
    loaded = _load(args.config)
    spec = _anchored_spec(loaded, "train-draft")
    seed = spec.training.seed if args.seed is None else args.seed
    tcfg = replace(spec.training, seed=seed, hidden=spec.hidden)
    base = make_base_target(spec.vocab_size, spec.dim, spec.seed)
    corpus = markov_corpus(spec.corpus_size, spec.corpus_seq_len, spec.vocab_size, spec.seed)
    draft = train_draft(base, corpus, tcfg, anchored=spec.anchored)
    hist = draft.train_history
    stride = max(1, len(hist) // 10)
    for i in range(0, len(hist), stride):
        print(f"step {i:6d}  loss {hist[i]:.6f}")
    if hist:
        print(f"final loss {hist[-1]:.6f} (initial {hist[0]:.6f})")
    parent = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(parent, exist_ok=True)
    atomic_write(args.out, save_draft(draft))
    print(f"checkpoint -> {args.out}")
    return EXIT_OK


def cmd_shift_eval(args) -> int:
    loaded = _load(args.config)
    spec = _anchored_spec(loaded, "shift-eval")
    mags = parse_float_list(args.magnitudes, "--magnitudes")
    if any(m < 0 for m in mags):
        raise UsageError("--magnitudes must be >= 0")
    seeds = parse_int_list_allow_zero(args.seeds) if args.seeds else [cfgmod.resolve_seed(args.seed, loaded)]
    rows = []
    for s in seeds:
        sspec = replace(spec, seed=s, training=replace(spec.training, seed=s))
        for r in shift_experiment(sspec, mags, n_prompts=args.prompts):
            rows.append((s, r.magnitude, r.anchored, r.baseline))
            print(f"seed {s}  magnitude {r.magnitude:5.2f}  anchored {r.anchored:.4f}  baseline {r.baseline:.4f}")
    table = _table_csv(("seed", "magnitude", "anchored", "baseline"),
                       [(s, repr(m), repr(a), repr(b)) for s, m, a, b in rows])
    if args.out:
        out = _outdir(args.out)
        atomic_write(os.path.join(out, "shift.csv"), table)
    return EXIT_OK


def parse_int_list_allow_zero(text: str) -> list[int]:
    try:
        values = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--seeds must be comma-separated integers, got {text!r}") from None
    if not values:
        raise UsageError("--seeds list is empty")
    return values


def cmd_sync_cost(args) -> int:
    size = parse_quantity(args.bytes, "B")
    rate = parse_quantity(args.rate, "bps")
    if not rate > 0:
        raise UsageError("--rate must be > 0")
    if size < 0:
        raise UsageError("--bytes must be >= 0")
    if not 0 < args.efficiency <= 1:
        raise UsageError("--efficiency must be in (0, 1]")
    t = sync_time(size, rate, args.efficiency)
    print(f"bytes={size:g} rate_bps={rate:g} efficiency={args.efficiency:g} seconds={t:.6g} ({human_duration(t)})")
    return EXIT_OK


def cmd_k_landscape(args) -> int:
    latency = _load(args.config).scenario.latency if args.config else LatencyParams()
    if not 0 <= args.gamma <= 1:
        raise UsageError("--gamma must be in [0, 1]")
    rates = [parse_quantity(r, "bps") for r in args.rates.split(",") if r.strip()]
    if not rates:
        raise UsageError("--rates list is empty")
    if any(r <= 0 for r in rates):
        raise UsageError("--rates must be > 0")
    if args.k_max < 1:
        raise UsageError("--k-max must be >= 1")
    land = optimal_k_landscape(args.gamma, latency, rates, args.k_max)
    header = ["rate_bps"] + [f"etgr_k{k}" for k in land.ks] + ["argmax_k"]
    rows = [[repr(float(r))] + [repr(float(v)) for v in land.etgr[i]] + [int(land.argmax[i])]
            for i, r in enumerate(land.rates)]
    table = _table_csv(header, rows)
    if args.out:
        parent = os.path.dirname(os.path.abspath(args.out))
        os.makedirs(parent, exist_ok=True)
        atomic_write(args.out, table)
    else:
        sys.stdout.write(table)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flexspec", description="Channel-aware edge-cloud speculative decoding simulator.")
    sub = p.add_subparsers(dest="command", required=True)
    seed_help = f"random seed (default: [run] seed in the config, else ${cfgmod.SEED_ENV}, else 0)"

    r = sub.add_parser("run", help="simulate one scenario and write rounds.csv, summary.json, config.resolved")
    r.add_argument("config", help="scenario INI file")
    r.add_argument("--seed", type=int, help=seed_help)
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.add_argument("--policy", help="override [policy] policy: adaptive, fixed:<k> or cloud_only")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-k", help="compare fixed strides (and optionally the adaptive policy) on one channel")
    s.add_argument("config", help="scenario INI file")
    s.add_argument("--k", default="1,3,5,7", help="comma-separated fixed strides (default: 1,3,5,7)")
    s.add_argument("--adaptive", action="store_true", help="add the adaptive policy as a row")
    s.add_argument("--seed", type=int, help=seed_help)
    s.add_argument("--out", help="directory for sweep.csv and config.resolved")
    s.set_defaults(func=cmd_sweep_k)

    t = sub.add_parser("train-draft", help="train an anchored draft on the configured base target")
    t.add_argument("config", help="scenario INI file with [model] kind = anchored")
    t.add_argument("--out", required=True, help="checkpoint file to write")
    t.add_argument("--seed", type=int, help="training seed (default: [model] seed)")
    t.set_defaults(func=cmd_train_draft)

    v = sub.add_parser("shift-eval", help="acceptance of anchored and baseline drafts against fine-tuned targets")
    v.add_argument("config", help="scenario INI file with [model] kind = anchored")
    v.add_argument("--magnitudes", default="0,0.5,1,2", help="comma-separated fine-tune magnitudes")
    v.add_argument("--seeds", help="comma-separated model seeds (default: the resolved seed)")
    v.add_argument("--seed", type=int, help=seed_help)
    v.add_argument("--prompts", type=int, default=1000, help="held-out contexts per evaluation (default: 1000)")
    v.add_argument("--out", help="directory for shift.csv")
    v.set_defaults(func=cmd_shift_eval)

    c = sub.add_parser("sync-cost", help="time to ship a model of a given size over the uplink")
    c.add_argument("--bytes", required=True, help="model size, e.g. 3.2GB or 3.2e9")
    c.add_argument("--rate", required=True, help="link rate, e.g. 10Mbps or 1e7")
    c.add_argument("--efficiency", type=float, default=DEFAULT_SYNC_EFFICIENCY,
                   help=f"fraction of the rate carrying payload (default: {DEFAULT_SYNC_EFFICIENCY})")
    c.set_defaults(func=cmd_sync_cost)

    k = sub.add_parser("k-landscape", help="predicted ETGR over strides for each rate, as CSV")
    k.add_argument("config", nargs="?", help="scenario INI file for latency parameters (default: built-in)")
    k.add_argument("--gamma", type=float, default=0.8, help="acceptance probability (default: 0.8)")
    k.add_argument("--rates", default="1e2,1e3,1e4,1e5,1e6", help="comma-separated rates in bit/s")
    k.add_argument("--k-max", type=int, default=8, help="largest stride considered (default: 8)")
    k.add_argument("--out", help="CSV file to write (default: stdout)")
    k.set_defaults(func=cmd_k_landscape)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="flexspec: %(levelname)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"flexspec: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - every runtime failure maps to exit 3
        print(f"flexspec: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
