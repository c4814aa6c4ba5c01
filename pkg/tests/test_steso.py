import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltsac.steso import (
    ObserverChannel,
    ObserverGains,
    derivative,
    estimation_errors,
    implicit_update,
    observer_derivative,
    run_open_loop,
    settle_time,
)

finite = st.floats(-10.0, 10.0)


def test_zero_error_is_a_fixed_point():
    assert observer_derivative(ObserverChannel(), 0.0, 0.0, 0.0) == (0.0, 0.0, 0.0)


def test_unit_innovation():
    # x1_hat - angle = 1, so every sig power evaluates to one
    assert observer_derivative(ObserverChannel(x1_hat=1.0), 0.0, 0.0, 0.0) == (-30.0, -300.0, -1000.0)


def test_known_accel_feeds_rate_estimate():
    dx = observer_derivative(ObserverChannel(d_hat=0.5), 0.0, 0.25, 1.0)
    assert dx == (0.0, 1.75, 0.0)


def test_sat_switching_inside_boundary():
    gains = ObserverGains(switching="sat", boundary=0.01)
    assert derivative(0.005, 0.0, 0.0, gains, 0.0, 0.0, 0.0)[2] == pytest.approx(-500.0)


def test_gain_validation():
    with pytest.raises(ValueError):
        ObserverGains(h1=0.0)
    with pytest.raises(ValueError):
        ObserverGains(switching="tanh")
    with pytest.raises(ValueError):
        ObserverGains(boundary=0.0)


def test_estimation_errors():
    assert estimation_errors(ObserverChannel(), 0.0, 0.0, 0.0) == (0.0, 0.0, 0.0)
    err = estimation_errors(ObserverChannel(x1_hat=0.008), 0.01, 0.0, 0.0)
    assert err[0] == pytest.approx(0.002, abs=1e-17)


@pytest.mark.parametrize("switching", ["sign", "sat"])
def test_implicit_update_fixed_point(switching):
    gains = ObserverGains(switching=switching)
    assert implicit_update(0.0, 0.0, 0.0, gains, 0.0, 0.0, 1e-3) == (0.0, 0.0, 0.0)


@settings(max_examples=200)
@given(finite, finite, finite, st.floats(-0.1, 0.1), finite, st.sampled_from(["sign", "sat"]))
def test_implicit_update_solves_its_inclusion(x1, x2, d, measured, accel, switching):
    # the step is implicit: recomputing the derivative at the new estimate
    # with the new innovation must reproduce the update
    gains = ObserverGains(switching=switching)
    h = 1e-3
    x1n, x2n, dn = implicit_update(x1, x2, d, gains, measured, accel, h)
    err = x1n - measured
    if switching == "sign" and abs(err) <= 1e-12:
        # inside the set-valued branch the innovation is zero up to rounding
        switch = (d - dn) / (h * gains.h3)
        assert -1.0 - 1e-9 <= switch <= 1.0 + 1e-9
        return
    f1, f2, f3 = derivative(x1n, x2n, dn, gains, measured, 0.0, accel)
    scale = 1.0 + abs(x1) + abs(x2) + abs(d) + abs(accel)
    assert dn == pytest.approx(d + h * f3, abs=1e-9 * scale)
    assert x2n == pytest.approx(x2 + h * f2, abs=1e-9 * scale)
    assert x1n == pytest.approx(x1 + h * f1, abs=1e-9 * scale)


@pytest.mark.parametrize("c", [-5.0, 2.0, 5.0])
def test_constant_disturbance_is_recovered(c):
    t, plant, est = run_open_loop(lambda _t: c, 3.0)
    reached = settle_time(t, est[:, 2] - c, 0.02 * abs(c))
    assert reached < 2.0
    assert np.all(np.abs(est[t >= 2.0, 2] - c) < 1e-2)


def test_state_estimates_track():
    t, plant, est = run_open_loop(lambda tt: math.sin(2.0 * tt), 4.0, initial=(0.05, -0.1))
    tail = t >= 2.0
    assert np.max(np.abs(est[tail, 0] - plant[tail, 0])) < 1e-5
    assert np.max(np.abs(est[tail, 1] - plant[tail, 1])) < 1e-2


def test_channels_are_independent():
    # one channel's update never reads another's inputs
    gains = ObserverGains()
    a = implicit_update(0.01, 0.0, 0.0, gains, 0.02, 0.5, 1e-3)
    implicit_update(-3.0, 2.0, 1.0, gains, 0.4, -7.0, 1e-3)
    assert implicit_update(0.01, 0.0, 0.0, gains, 0.02, 0.5, 1e-3) == a


def test_settle_time():
    t = np.arange(5.0)
    assert settle_time(t, np.array([1.0, 1.0, 0.0, 0.0, 0.0]), 0.5) == 2.0
    assert settle_time(t, np.zeros(5), 0.5) == 0.0
    assert settle_time(t, np.array([0.0, 0.0, 0.0, 0.0, 1.0]), 0.5) == math.inf
