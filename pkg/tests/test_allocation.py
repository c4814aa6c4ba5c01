import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltsac.allocation import (
    SingularMixerError,
    TiltSchedule,
    TiltTimeline,
    allocate,
    default_timeline,
    forward_allocation,
    forward_mode_stub,
    is_singular,
    mixer_apply,
    mixer_conditioning,
    mixer_determinant,
    mixer_matrix,
    normalized_determinant,
    solve_mixer,
    tilt_at,
)
from tiltsac.rigid_body import BodyState, RotorSet, VehicleParams, total_force, total_moment

P = VehicleParams()
tilts = st.floats(0.0, 1.5)


def test_hover_command_gives_equal_speeds():
    result = allocate((-P.m * P.g, 0.0, 0.0, 0.0), 0.0, P)
    assert not result.saturated
    np.testing.assert_allclose(result.omega, [math.sqrt(P.m * P.g / (4 * P.kt))] * 4, rtol=1e-14)


def test_zero_command_gives_zero_speeds():
    assert allocate((0.0, 0.0, 0.0, 0.0), 0.4, P).omega == (0.0, 0.0, 0.0, 0.0)


@settings(max_examples=200)
@given(tilts, st.lists(st.floats(0.0, 1e6), min_size=4, max_size=4))
def test_mixer_rows_match_rotor_model(delta, squared):
    omega = tuple(math.sqrt(w) for w in squared)
    rotors = RotorSet(omega, delta)
    params = VehicleParams(nacelle_moment=0.0)
    force = total_force(BodyState(), rotors, params)
    moment = total_moment(BodyState(), rotors, params)
    want = (force[2] - params.m * params.g,) + tuple(moment)
    # subtracting the weight costs about m*g*eps of absolute precision
    scale = P.kt * max(1.0, max(squared)) + 1.0
    np.testing.assert_allclose(mixer_apply(squared, delta, P), want, atol=1e-12 * scale)
    np.testing.assert_allclose(mixer_matrix(delta, P) @ squared, want, atol=1e-12 * scale)


@settings(max_examples=200)
@given(tilts)
def test_closed_forms_match_numerics(delta):
    m = mixer_matrix(delta, P)
    assert mixer_determinant(delta, P) == pytest.approx(np.linalg.det(m), rel=1e-9)
    assert mixer_conditioning(delta, P) == pytest.approx(normalized_determinant(m), rel=1e-9)


@settings(max_examples=200)
@given(tilts, st.lists(st.floats(1e3, 1e6), min_size=4, max_size=4))
def test_solve_round_trip(delta, squared):
    got = solve_mixer(mixer_apply(squared, delta, P), delta, P)
    np.testing.assert_allclose(got, squared, rtol=1e-8, atol=1e-6)


def test_saturation_is_flagged_and_reported():
    result = allocate((0.0, 1.0, 0.0, 0.0), 0.0, P)
    assert result.saturated
    assert min(result.omega) == 0.0
    np.testing.assert_allclose(result.achieved, mixer_apply([w * w for w in result.omega], 0.0, P))


def test_singular_at_full_tilt():
    assert is_singular(math.pi / 2, P)
    assert not is_singular(1.5, P)
    with pytest.raises(SingularMixerError):
        allocate((-1.0, 0.0, 0.0, 0.0), math.pi / 2, P)
    assert normalized_determinant(np.zeros((4, 4))) == 0.0


def test_forward_mode_stub():
    assert forward_mode_stub((0.0, 0.0, 0.0), P) == (0.0, 0.0, 0.0)
    a = forward_mode_stub((0.5, -1.0, 2.0), P)
    b = forward_mode_stub((1.0, -2.0, 4.0), P)
    assert b == pytest.approx(tuple(2 * x for x in a))
    assert forward_mode_stub((100.0, -100.0, 0.0), P) == (1.0, -1.0, 0.0)


def test_forward_allocation():
    result = forward_allocation((0.5, 0.0, -0.5), P)
    assert result.forward_mode
    assert result.omega[1] == result.omega[3] == 0.0
    assert result.surfaces == forward_mode_stub((0.5, 0.0, -0.5), P)


def test_conversion_boundaries_and_midpoint():
    conv = default_timeline().conversion
    assert tilt_at(conv, conv.t0) == (0.0, 0.0)
    assert tilt_at(conv, conv.t0 - 1.0) == (0.0, 0.0)
    assert tilt_at(conv, 1e9) == (math.pi / 2, 0.0)
    assert tilt_at(conv, conv.t_end)[0] == math.pi / 2
    mid = conv.t0 + conv.duration / 2
    assert tilt_at(conv, mid)[0] == pytest.approx(math.pi / 4, abs=1e-12)


def test_default_timing():
    timeline = default_timeline()
    assert timeline.conversion.duration == pytest.approx(90.0 / 14.0 + 14.0 / 4.0)
    assert timeline.reconversion.duration == pytest.approx(1.5)


@pytest.mark.parametrize("which", ["conversion", "reconversion"])
def test_profile_is_monotone_with_continuous_rate(which):
    sched = getattr(default_timeline(), which)
    t = np.linspace(sched.t0 - 0.5, sched.t_end + 0.5, 20001)
    delta = np.array([tilt_at(sched, x)[0] for x in t])
    rate = np.array([tilt_at(sched, x)[1] for x in t])
    steps = np.diff(delta) * (1.0 if sched.end > sched.start else -1.0)
    assert np.all(steps >= 0.0)
    dt = t[1] - t[0]
    assert np.max(np.abs(np.diff(rate))) <= math.radians(sched.accel) * dt * (1 + 1e-9)
    # rate is the derivative of the angle; the trapezoid rule is exact except
    # across the four acceleration jumps
    np.testing.assert_allclose(np.diff(delta) / dt, 0.5 * (rate[1:] + rate[:-1]), atol=math.radians(sched.accel) * dt / 4)


def test_conversion_then_reconversion_returns_to_hover():
    timeline = default_timeline()
    assert timeline.profile(timeline.conversion.t_end + 0.1)[0] == math.pi / 2
    assert timeline.profile(timeline.reconversion.t_end)[0] == 0.0
    assert timeline.profile(1e9) == (0.0, 0.0, 0.0)


def test_invalid_schedules():
    with pytest.raises(ValueError):
        TiltSchedule(0.0, 0.0, 1.0, accel=0.0, rate=10.0)
    with pytest.raises(ValueError):
        TiltSchedule(0.0, 0.0, math.radians(1.0), accel=1.0, rate=10.0)
    with pytest.raises(ValueError):
        TiltTimeline(default_timeline().conversion, TiltSchedule(5.0, math.pi / 2, 0.0, 180.0, 90.0))
