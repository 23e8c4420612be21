"""CSV and JSON reports for simulation runs, plus a CSV reader that rebuilds the records."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict
from importlib import resources

from .latency import PowerParams, StepBreakdown, energy_step
from .sim import Metrics, RoundRecord, compute_metrics

CSV_COLUMNS = ("round", "rate_bps", "k", "tau", "t_edge", "t_up", "t_cloud", "t_down", "t_total",
               "energy_j", "gamma_hat", "fallback")
SCHEMA_VERSION = 1


def rounds_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        s = r.step
        # repr keeps every float bit so a re-read reproduces the metrics.
        w.writerow([r.round, repr(float(r.rate_bps)), r.k, r.tau, repr(s.t_edge), repr(s.t_up), repr(s.t_cloud),
                    repr(s.t_down), repr(s.t_total), repr(r.energy.total), repr(r.gamma_hat), int(r.fallback)])
    return buf.getvalue()


def summary_dict(metrics: Metrics, extra: dict | None = None) -> dict:
    out = {"schema_version": SCHEMA_VERSION}
    out.update(asdict(metrics))
    if extra:
        out.update(extra)
    return out


def summary_json(metrics: Metrics, extra: dict | None = None) -> str:
    return json.dumps(summary_dict(metrics, extra), indent=2, sort_keys=True) + "\n"


def atomic_write(path: str | os.PathLike, data: str | bytes) -> int:
    """Write to a temporary file in the target directory, then rename over ``path``."""
    raw = data.encode() if isinstance(data, str) else data
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(raw)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return len(raw)


def write_report(records, metrics: Metrics, fmt: str, destination) -> int:
    """Write a ``csv`` rounds table or a ``json`` summary; returns bytes written.

    ``destination`` is a path (written atomically) or a writable binary/text stream.
    """
    if fmt == "csv":
        text = rounds_csv(records)
    elif fmt == "json":
        text = summary_json(metrics)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if hasattr(destination, "write"):
        try:
            destination.write(text)
        except TypeError:
            destination.write(text.encode())
        return len(text.encode())
    return atomic_write(destination, text)


def read_rounds_csv(text: str, power: PowerParams = PowerParams()) -> list[RoundRecord]:
    """Rebuild round records from a rounds CSV. Energy components are recomputed from ``power``."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected rounds CSV header: {header}")
    records = []
    for row in reader:
        if not row:
            continue
        v = dict(zip(CSV_COLUMNS, row))
        step = StepBreakdown(float(v["t_edge"]), float(v["t_up"]), float(v["t_cloud"]), float(v["t_down"]))
        records.append(RoundRecord(int(v["round"]), float(v["rate_bps"]), int(v["k"]), int(v["tau"]), step,
                                   energy_step(step, power), float(v["gamma_hat"]), v["fallback"] == "1"))
    return records


def metrics_from_csv(text: str, power: PowerParams = PowerParams()) -> Metrics:
    return compute_metrics(read_rounds_csv(text, power))


def summary_schema() -> dict:
    return json.loads(resources.files("flexspec").joinpath("schemas/summary.schema.json").read_text())
