"""Per-round latency, sync cost and energy accounting for edge-cloud drafting.

A round that drafts ``k`` tokens costs

    edge:   alpha_edge * k + beta
    uplink: t_prop + (k * token_bits + header_bits) / rate
    cloud:  t_base + k * delta_cloud
    down:   t_down

which regroups into ``t_fixed + k * t_marginal``.
"""
from __future__ import annotations

from dataclasses import dataclass, fields

DEFAULT_SYNC_EFFICIENCY = 0.89


@dataclass(frozen=True)
class LatencyParams:
    alpha_edge: float = 0.0085
    beta: float = 0.002
    token_bits: float = 16
    header_bits: float = 120
    t_prop: float = 0.02
    t_base: float = 0.05
    delta_cloud: float = 0.002
    t_down: float = 0.02

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= 0:
                raise ValueError(f"LatencyParams.{f.name} must be >= 0, got {v}")


@dataclass(frozen=True)
class PowerParams:
    """Average power draw (watts) of the edge device in each round phase."""

    p_edge_compute: float = 2.0
    p_radio_tx: float = 3.0
    p_radio_rx: float = 1.0
    p_idle: float = 0.5

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not v >= 0:
                raise ValueError(f"PowerParams.{f.name} must be >= 0, got {v}")


@dataclass(frozen=True)
class StepBreakdown:
    t_edge: float
    t_up: float
    t_cloud: float
    t_down: float

    @property
    def t_total(self) -> float:
        return self.t_edge + self.t_up + self.t_cloud + self.t_down


@dataclass(frozen=True)
class EnergyBreakdown:
    e_edge: float
    e_up: float
    e_cloud: float
    e_down: float

    @property
    def total(self) -> float:
        return self.e_edge + self.e_up + self.e_cloud + self.e_down


def _check_rate(rate: float) -> None:
    if not rate > 0:
        raise ValueError(f"uplink rate must be > 0, got {rate}")


def transmit_time(bits: float, rate: float, p: LatencyParams) -> float:
    """Propagation plus serialization delay of a ``bits``-long uplink message."""
    _check_rate(rate)
    return p.t_prop + bits / rate


def uplink_time(k: int, rate: float, p: LatencyParams) -> float:
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return transmit_time(k * p.token_bits + p.header_bits, rate, p)


def cloud_time(k: int, p: LatencyParams) -> float:
    return p.t_base + k * p.delta_cloud


def edge_time(k: int, p: LatencyParams) -> float:
    return p.alpha_edge * k + p.beta


def fixed_and_marginal(rate: float, p: LatencyParams) -> tuple[float, float]:
    """Return ``(t_fixed, t_marginal)`` so a k-token round costs ``t_fixed + k * t_marginal``."""
    _check_rate(rate)
    t_fixed = p.t_prop + p.t_base + p.t_down + p.header_bits / rate + p.beta
    t_marginal = p.alpha_edge + p.token_bits / rate + p.delta_cloud
    return t_fixed, t_marginal


def step_time(k: int, rate: float, p: LatencyParams) -> StepBreakdown:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return StepBreakdown(
        t_edge=edge_time(k, p),
        t_up=uplink_time(k, rate, p),
        t_cloud=cloud_time(k, p),
        t_down=p.t_down,
    )


def cloud_only_step(rate: float, p: LatencyParams) -> StepBreakdown:
    """Round of plain cloud decoding: a header-only request and one cloud token."""
    return StepBreakdown(
        t_edge=0.0,
        t_up=transmit_time(p.header_bits, rate, p),
        t_cloud=p.t_base,
        t_down=p.t_down,
    )


def sync_time(model_bytes: float, rate: float, efficiency: float = DEFAULT_SYNC_EFFICIENCY) -> float:
    """Seconds to push ``model_bytes`` over a link of ``rate`` bits/s at the given goodput fraction."""
    if not model_bytes > 0:
        raise ValueError(f"model_bytes must be > 0, got {model_bytes}")
    _check_rate(rate)
    if not 0 < efficiency <= 1:
        raise ValueError(f"efficiency must be in (0, 1], got {efficiency}")
    return 8.0 * model_bytes / (efficiency * rate)


def energy_step(b: StepBreakdown, pw: PowerParams) -> EnergyBreakdown:
    return EnergyBreakdown(
        e_edge=pw.p_edge_compute * b.t_edge,
        e_up=pw.p_radio_tx * b.t_up,
        e_cloud=pw.p_idle * b.t_cloud,
        e_down=pw.p_radio_rx * b.t_down,
    )
