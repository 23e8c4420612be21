"""Uplink channel models: piecewise traces, SNR mapping and a Gilbert-Elliott process.

Every channel exposes ``rate_at(t)`` returning the achievable uplink rate in
bits/s at simulated time ``t`` (seconds).
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

STEP_HOLD = "step-hold"
LINEAR = "linear-interpolate"
HOLD_MODES = (STEP_HOLD, LINEAR)


class ChannelConfigError(ValueError):
    pass


class TraceParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class Channel(Protocol):
    def rate_at(self, t: float) -> float: ...


@dataclass(frozen=True)
class ChannelSample:
    time: float
    rate: float
    snr: float | None = None

    def __post_init__(self):
        if not self.time >= 0:
            raise ChannelConfigError(f"sample time must be >= 0, got {self.time}")
        if not self.rate > 0:
            raise ChannelConfigError(f"sample rate must be > 0, got {self.rate}")


@dataclass(frozen=True)
class ChannelTrace:
    samples: tuple[ChannelSample, ...]
    hold_mode: str = STEP_HOLD
    _times: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise ChannelConfigError("channel trace is empty")
        if self.hold_mode not in HOLD_MODES:
            raise ChannelConfigError(f"unknown hold_mode {self.hold_mode!r}")
        times = tuple(s.time for s in samples)
        for a, b in zip(times, times[1:]):
            if not b > a:
                raise ChannelConfigError("trace times must be strictly increasing")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_times", times)

    @classmethod
    def constant(cls, rate: float) -> ChannelTrace:
        return cls((ChannelSample(0.0, float(rate)),))

    def rate_at(self, t: float) -> float:
        return rate_at(self, t)


def rate_at(trace: ChannelTrace, t: float) -> float:
    """Uplink rate of ``trace`` at time ``t``.

    Queries before the first sample return the first rate, queries after the
    last sample return the last rate.
    """
    if t < 0:
        raise ValueError(f"time must be >= 0, got {t}")
    samples = trace.samples
    i = bisect.bisect_right(trace._times, t) - 1
    if i < 0:
        return samples[0].rate
    if i >= len(samples) - 1 or trace.hold_mode == STEP_HOLD:
        return samples[i].rate
    a, b = samples[i], samples[i + 1]
    w = (t - a.time) / (b.time - a.time)
    return a.rate + w * (b.rate - a.rate)


def snr_to_rate(snr_db: float, bandwidth: float, efficiency: float = 1.0) -> float:
    """Shannon capacity ``efficiency * W * log2(1 + 10**(snr/10))`` in bits/s."""
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    return efficiency * bandwidth * math.log2(1.0 + 10.0 ** (snr_db / 10.0))


def load_trace(text: str | bytes, hold_mode: str = STEP_HOLD, efficiency: float = 1.0) -> ChannelTrace:
    """Parse the CSV trace format.

    Each non-comment line is ``time_s,rate_bps`` or ``time_s,snr_db,bandwidth_hz``.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    samples: list[ChannelSample] = []
    last_time = -math.inf
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            values = [float(p) for p in parts]
        except ValueError:
            raise TraceParseError(line_no, f"non-numeric field in {raw!r}") from None
        if not all(math.isfinite(v) for v in values):
            raise TraceParseError(line_no, "non-finite value")
        if len(values) == 2:
            time, rate = values
            snr = None
        elif len(values) == 3:
            time, snr, bandwidth = values
            if bandwidth <= 0:
                raise TraceParseError(line_no, f"bandwidth must be positive, got {bandwidth}")
            rate = snr_to_rate(snr, bandwidth, efficiency)
        else:
            raise TraceParseError(line_no, f"expected 2 or 3 columns, got {len(values)}")
        if time < 0:
            raise TraceParseError(line_no, f"negative time {time}")
        if time <= last_time:
            raise TraceParseError(line_no, f"time {time} not strictly increasing")
        if not rate > 0:
            raise TraceParseError(line_no, f"rate must be positive, got {rate}")
        samples.append(ChannelSample(time, rate, snr))
        last_time = time
    if not samples:
        raise ChannelConfigError("trace contains no samples")
    return ChannelTrace(tuple(samples), hold_mode)


@dataclass(frozen=True)
class GilbertElliottParams:
    rate_strong: float
    rate_weak: float
    p_stay_strong: float
    p_stay_weak: float
    seed: int = 0

    def __post_init__(self):
        for name in ("p_stay_strong", "p_stay_weak"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ChannelConfigError(f"{name} must be in [0, 1], got {p}")
        if not (self.rate_strong > 0 and self.rate_weak > 0):
            raise ChannelConfigError("Gilbert-Elliott rates must be positive")

    def stationary_strong(self) -> float:
        """Long-run fraction of steps spent in the strong state."""
        leave_strong = 1.0 - self.p_stay_strong
        leave_weak = 1.0 - self.p_stay_weak
        if leave_strong + leave_weak == 0:
            return 1.0
        return leave_weak / (leave_strong + leave_weak)


@dataclass(frozen=True)
class GEState:
    params: GilbertElliottParams
    strong: bool = True


def ge_step(state: GEState, rng: np.random.Generator) -> tuple[GEState, float]:
    """One Markov transition; returns the new state and its rate."""
    p = state.params
    stay = p.p_stay_strong if state.strong else p.p_stay_weak
    strong = state.strong if rng.random() < stay else not state.strong
    new = GEState(p, strong)
    return new, (p.rate_strong if strong else p.rate_weak)


class GilbertElliottChannel:
    """Time-slotted Gilbert-Elliott channel.

    The state sequence is indexed by slot ``floor(t / slot_s)`` so every
    policy queried at the same simulated time sees the same realization.
    Generator state is private to one instance; do not share across threads.
    """

    def __init__(self, params: GilbertElliottParams, slot_s: float = 1.0, start_strong: bool = True):
        if not slot_s > 0:
            raise ChannelConfigError(f"slot_s must be > 0, got {slot_s}")
        self.params = params
        self.slot_s = float(slot_s)
        self._rng = np.random.default_rng(params.seed)
        self._state = GEState(params, start_strong)
        self._rates = [params.rate_strong if start_strong else params.rate_weak]

    def _extend(self, n: int) -> None:
        while len(self._rates) <= n:
            self._state, rate = ge_step(self._state, self._rng)
            self._rates.append(rate)

    def rate_at_slot(self, n: int) -> float:
        self._extend(n)
        return self._rates[n]

    def rate_at(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"time must be >= 0, got {t}")
        return self.rate_at_slot(int(t // self.slot_s))
