import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from flexspec.latency import (
    DEFAULT_SYNC_EFFICIENCY,
    LatencyParams,
    PowerParams,
    StepBreakdown,
    cloud_only_step,
    cloud_time,
    edge_time,
    energy_step,
    fixed_and_marginal,
    step_time,
    sync_time,
    uplink_time,
)
from oracles import round_latency

HAND = LatencyParams(alpha_edge=0.001, beta=0.002, token_bits=16, header_bits=320, t_prop=0.02, t_base=0.05,
                     delta_cloud=0.002, t_down=0.01)
ZERO = LatencyParams(**{f: 0.0 for f in LatencyParams.__dataclass_fields__})


def test_uplink_hand_value():
    p = LatencyParams(token_bits=16, header_bits=320, t_prop=0.01)
    assert uplink_time(5, 1e6, p) == pytest.approx(0.0104, rel=1e-12)


def test_uplink_zero_payload():
    p = LatencyParams(header_bits=0, t_prop=0)
    assert uplink_time(0, 1e3, p) == 0.0


def test_uplink_linear_in_inverse_rate():
    p = LatencyParams()
    a = uplink_time(7, 1e4, p) - p.t_prop
    b = uplink_time(7, 2e4, p) - p.t_prop
    assert b == pytest.approx(a / 2, rel=1e-12)


@pytest.mark.parametrize("rate", [0, -1.0])
def test_uplink_rejects_bad_rate(rate):
    with pytest.raises(ValueError):
        uplink_time(1, rate, LatencyParams())
    with pytest.raises(ValueError):
        fixed_and_marginal(rate, LatencyParams())


def test_cloud_and_edge_affine():
    p = LatencyParams(t_base=0.05, delta_cloud=0.002)
    assert cloud_time(0, p) == 0.05
    assert cloud_time(5, p) == pytest.approx(0.06, rel=1e-12)
    assert cloud_time(6, p) - cloud_time(5, p) == pytest.approx(0.002, rel=1e-9)
    q = LatencyParams(alpha_edge=0.0085, beta=0.0)
    assert edge_time(0, LatencyParams()) == LatencyParams().beta
    assert edge_time(4, q) == pytest.approx(0.034, rel=1e-12)
    assert edge_time(5, q) - edge_time(4, q) == pytest.approx(0.0085, rel=1e-9)


def test_fixed_marginal_examples():
    only_base = LatencyParams(**{**{f: 0.0 for f in LatencyParams.__dataclass_fields__}, "t_base": 0.1})
    assert fixed_and_marginal(1e6, only_base) == (0.1, 0.0)
    tf, tm = fixed_and_marginal(1e5, HAND)
    assert tf == pytest.approx(0.0852, rel=1e-12)
    assert tm == pytest.approx(0.00316, rel=1e-12)


def test_step_time_components_and_hand_energy():
    b = step_time(4, 1e5, HAND)
    assert (b.t_edge, b.t_up, b.t_cloud, b.t_down) == pytest.approx((0.006, 0.02384, 0.058, 0.01), rel=1e-12)
    assert b.t_total == b.t_edge + b.t_up + b.t_cloud + b.t_down
    e = energy_step(b, PowerParams(2, 3, 1, 0.5))
    assert e.total == pytest.approx(2 * 0.006 + 3 * 0.02384 + 1 * 0.01 + 0.5 * 0.058, rel=1e-12)
    assert e.total == pytest.approx(0.12252, rel=1e-12)


def test_energy_trivial_cases():
    b = step_time(3, 1e4, LatencyParams())
    assert energy_step(b, PowerParams(0, 0, 0, 0)).total == 0.0
    assert energy_step(b, PowerParams(1, 1, 1, 1)).total == pytest.approx(b.t_total, rel=1e-15)


def test_step_time_requires_positive_k():
    with pytest.raises(ValueError):
        step_time(0, 1e6, LatencyParams())


params = st.builds(
    LatencyParams,
    alpha_edge=st.floats(0, 0.1), beta=st.floats(0, 0.1), token_bits=st.integers(1, 64).map(float),
    header_bits=st.integers(0, 1024).map(float), t_prop=st.floats(0, 0.2), t_base=st.floats(0, 0.5),
    delta_cloud=st.floats(0, 0.05), t_down=st.floats(0, 0.2),
)


@given(params, st.floats(10, 1e9), st.integers(1, 64))
def test_fixed_marginal_identity(p, rate, k):
    b = step_time(k, rate, p)
    tf, tm = fixed_and_marginal(rate, p)
    expected = round_latency(k, rate, p.alpha_edge, p.beta, p.token_bits, p.header_bits, p.t_prop, p.t_base,
                             p.delta_cloud, p.t_down)
    assert abs(b.t_total - (tf + k * tm)) <= 1e-12 * max(1.0, b.t_total)
    assert b.t_total == pytest.approx(expected, rel=1e-12)


@given(params, st.floats(10, 1e8), st.integers(1, 63))
def test_step_time_monotone(p, rate, k):
    assert step_time(k + 1, rate, p).t_total > step_time(k, rate, p).t_total
    assert step_time(k, rate * 2, p).t_total < step_time(k, rate, p).t_total


def test_sync_time_rows():
    assert sync_time(3.2e9, 1e7) / 60 == pytest.approx(47.94, abs=0.01)
    assert sync_time(3.2e9, 5e7) / 60 == pytest.approx(9.588, abs=0.01)
    assert sync_time(3.2e9, 3e8) / 60 == pytest.approx(1.598, abs=0.01)
    assert sync_time(3.2e9, 1e7, 1.0) == pytest.approx(2560, rel=1e-12)
    assert DEFAULT_SYNC_EFFICIENCY == 0.89


@given(st.floats(1, 1e12), st.floats(1, 1e10), st.floats(0.01, 1))
def test_sync_time_scaling(size, rate, eff):
    t = sync_time(size, rate, eff)
    assert sync_time(2 * size, rate, eff) == pytest.approx(2 * t, rel=1e-12)
    assert sync_time(size, 2 * rate, eff) == pytest.approx(t / 2, rel=1e-12)


@pytest.mark.parametrize("args", [(0, 1e6), (1e9, 0), (1e9, 1e6, 0), (1e9, 1e6, 1.5)])
def test_sync_time_domain(args):
    with pytest.raises(ValueError):
        sync_time(*args)


def test_cloud_only_step():
    p = LatencyParams()
    b = cloud_only_step(1e4, p)
    assert b.t_edge == 0
    assert b.t_total == pytest.approx(p.t_prop + p.header_bits / 1e4 + p.t_base + p.t_down, rel=1e-12)


def test_params_validation():
    with pytest.raises(ValueError):
        LatencyParams(alpha_edge=-1)
    with pytest.raises(ValueError):
        PowerParams(p_idle=-0.1)
    assert StepBreakdown(1, 2, 3, 4).t_total == 10
