import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rydsim.schedule import SweepSchedule, benchmark_sweep, canonical_sweep


def test_linear_midpoint():
    s = SweepSchedule([[0, 0, -8], [1, 1.4, -8]])
    assert s.evaluate(0.5) == pytest.approx((0.7, -8.0))


def test_starts_undriven():
    s = benchmark_sweep(6.0)
    omega, delta = s.evaluate(0.0)
    assert omega == 0.0
    assert delta == -8.0


def test_truncation_contract():
    s = SweepSchedule([[0, 0, -8], [1, 1.4, -8], [3, 1.4, 2], [4, 0, 2]],
                      t_off=2.0)
    omega, delta = s.evaluate(2.5)
    assert omega == 0.0
    assert delta == pytest.approx(s.evaluate(2.0)[1])
    # delta holds the value it had at t_off (mid detuning sweep here)
    assert delta == pytest.approx(-3.0)


def test_truncation_idempotent():
    s = SweepSchedule([[0, 0, -8], [2, 1.4, 2], [4, 0, 2]])
    once = s.truncate(1.5)
    twice = once.truncate(1.5)
    assert once.t_off == twice.t_off
    for t in np.linspace(0, 4, 17):
        assert once.evaluate(t) == twice.evaluate(t)
    # re-truncating later keeps the earlier cut
    assert once.truncate(3.0).t_off == 1.5


def test_domain_errors():
    s = SweepSchedule([[0, 0, -8], [1, 1, 2]])
    with pytest.raises(ValueError):
        s.evaluate(-0.1)
    with pytest.raises(ValueError):
        s.evaluate(1.1)
    with pytest.raises(ValueError):
        SweepSchedule([[0, 0, 0], [0, 1, 1]])
    with pytest.raises(ValueError):
        SweepSchedule([[0, -0.5, 0], [1, 1, 1]])


def test_canonical_sweep_square():
    s = canonical_sweep("square-AF", (1, 1, 4), 1.4, -8.0, 2.0)
    assert s.duration == pytest.approx(6.0)
    assert s.evaluate(0) == pytest.approx((0.0, -8.0))
    assert s.evaluate(1) == pytest.approx((1.4, -8.0))
    assert s.evaluate(2) == pytest.approx((1.4, 2.0))
    assert s.evaluate(6) == pytest.approx((0.0, 2.0))


def test_canonical_sweep_zero_plateau():
    s = canonical_sweep("square-AF", (1, 0, 4), 1.4, -8.0, 2.0)
    assert len(s.breakpoints) == 3        # triangle-shaped Omega
    assert s.evaluate(1.0)[0] == pytest.approx(1.4)


def test_tri_23_final_detuning():
    u = 1.947
    s = canonical_sweep("tri-2/3", (1, 3, 2), 1.4, -8.0, 4 * u)
    assert s.evaluate(s.duration)[1] == pytest.approx(4 * u)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        canonical_sweep("ring", (1, 1, 1), 1.0, 0.0, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 99), st.integers(1, 3))
def test_piecewise_linear_at_rational_points(num, seg):
    """Within a segment the interpolation is exactly linear."""
    s = SweepSchedule([[0, 0, -8], [1, 1.4, -8], [3, 1.4, 2], [4, 0, 2]])
    t0, t1 = [(0.0, 1.0), (1.0, 3.0), (3.0, 4.0)][seg - 1]
    f = num / 100.0
    t = t0 + f * (t1 - t0)
    o0, d0 = s.evaluate(t0)
    o1, d1 = s.evaluate(t1)
    omega, delta = s.evaluate(t)
    assert omega == pytest.approx(o0 + f * (o1 - o0), abs=1e-12)
    assert delta == pytest.approx(d0 + f * (d1 - d0), abs=1e-12)


def test_serialization_roundtrip():
    s = benchmark_sweep(6.0, t_off=2.5)
    t = SweepSchedule.from_dict(s.to_dict())
    assert np.array_equal(s.breakpoints, t.breakpoints)
    assert s.t_off == t.t_off
