import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiltsac.arsmc import (
    AdaptationConfig,
    ChannelInputs,
    ControllerConfig,
    FTSMCController,
    RSMCController,
    SACController,
    SurfaceGains,
    adapt_gains,
    build_controller,
    equivalent_control,
    ftsmc_control,
    init_eta,
    rsmc_control,
    sac_control,
    sliding_rate,
    surface_eval,
    switching_control,
    switching_integrand,
)

IX = 0.876
INERTIA = (0.876, 0.166, 0.115)
GAINS = SurfaceGains()


def zero_inputs():
    return [ChannelInputs(0.0, 0.0, 0.0, 0.0) for _ in range(3)]


def test_init_eta():
    assert init_eta(0.0, 5.0) == 0.0
    assert init_eta(0.2, 2.0) == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        init_eta(0.1, 0.0)


@settings(max_examples=100)
@given(st.floats(-10.0, 10.0), st.floats(0.01, 100.0))
def test_init_eta_starts_on_surface(sigma0, lam):
    assert sigma0 + lam * init_eta(sigma0, lam) == pytest.approx(0.0, abs=1e-12)


def test_surface_eval():
    assert surface_eval(0.0, 0.0, 0.0, 0.0, GAINS) == (0.0, 0.0)
    gains = SurfaceGains(k_lin=2.0, k_term=123.0)
    assert surface_eval(0.1, 0.0, 0.0, 0.0, gains)[0] == pytest.approx(0.2)


def test_surface_rate_matches_difference_quotient():
    # e(t) = 0.2 sin 3t; the integral states move at their known rates
    gains = SurfaceGains(k_lin=2.0, k_term=0.5, alpha=1.5, lam=3.0, beta=0.6)
    rng = np.random.default_rng(5)
    h = 1e-5
    for t in rng.uniform(0.0, 3.0, 20):
        term, eta = rng.uniform(-0.2, 0.2, 2)
        e = lambda tt: 0.2 * math.sin(3.0 * tt)
        e_dot = lambda tt: 0.6 * math.cos(3.0 * tt)
        sigma, _ = surface_eval(e(t), e_dot(t), term, eta, gains)
        term_rate = math.copysign(abs(e(t)) ** gains.alpha, e(t))
        eta_rate = math.copysign(abs(sigma) ** gains.beta, sigma)

        def s_at(dt):
            return surface_eval(e(t + dt), e_dot(t + dt), term + dt * term_rate, eta + dt * eta_rate, gains)[1]

        quotient = (s_at(h) - s_at(-h)) / (2.0 * h)
        analytic = sliding_rate(e(t), e_dot(t), sigma, -1.8 * math.sin(3.0 * t), gains)
        assert quotient == pytest.approx(analytic, abs=1e-6)


def test_equivalent_control():
    assert equivalent_control(0.0, 0.0, 0.0, 0.0, 0.0, IX, 0.0, GAINS) == 0.0
    assert equivalent_control(0.0, 0.0, 0.0, 1.0, 0.0, IX, 0.0, GAINS) == pytest.approx(-0.876)


state = st.floats(-1.0, 1.0)


@settings(max_examples=100)
@given(state, state, state, state, state, state)
def test_equivalent_control_zeroes_sliding_rate(e, e_dot, sigma, d, ref_accel, gyro):
    u0 = equivalent_control(e, e_dot, sigma, d, ref_accel, IX, gyro, GAINS)
    accel_error = (gyro + u0) / IX + d - ref_accel
    assert sliding_rate(e, e_dot, sigma, accel_error, GAINS) == pytest.approx(0.0, abs=1e-12)


def test_switching_control():
    assert switching_control(0.0, 0.0, 1.0, 1.0, IX) == 0.0
    assert switching_control(0.1, 0.0, 2.0, 1.0, IX) == pytest.approx(-0.1752)
    assert switching_integrand(0.005, 0.01) == pytest.approx(math.sqrt(0.005) * 0.5)


def test_adapt_gains():
    config = AdaptationConfig(rho=1.0, epsilon=1e-4)
    assert adapt_gains(1.0, 2.0, 0.5, 5e-5, config, 1e-3) == (1.0, 2.0)
    assert adapt_gains(1.0, 2.0, 0.0, 0.1, config, 1e-3) == (1.0, 2.0)
    xi1, xi2 = adapt_gains(1.0, 2.0, 0.5, 0.1, config, 1e-3)
    assert xi1 - 1.0 == pytest.approx(2.5e-4)
    assert xi2 - 2.0 == pytest.approx(math.sqrt(0.5) * 1e-3)
    literal = AdaptationConfig(adaptation_sign=-1)
    assert adapt_gains(1.0, 2.0, 0.5, 0.1, literal, 1e-3)[0] == pytest.approx(1.0 - 2.5e-4)


def test_config_validation():
    with pytest.raises(ValueError):
        SurfaceGains(lam=0.0)
    with pytest.raises(ValueError):
        AdaptationConfig(adaptation_sign=0)
    with pytest.raises(ValueError):
        ControllerConfig(kind="pid")
    with pytest.raises(ValueError):
        RSMCController((GAINS,) * 3, switching="tanh")


@pytest.mark.parametrize("kind", ["sac", "rsmc", "ftsmc"])
def test_equilibrium_gives_zero_torque(kind):
    ctrl = build_controller(ControllerConfig(), INERTIA, kind)
    ctrl.reset(zero_inputs())
    control = {"sac": sac_control, "rsmc": rsmc_control, "ftsmc": ftsmc_control}[kind]
    assert tuple(control(ctrl, zero_inputs())) == (0.0, 0.0, 0.0)


def test_reset_places_every_channel_on_its_surface():
    rng = np.random.default_rng(0)
    ctrl = SACController((GAINS,) * 3, inertia=INERTIA)
    for _ in range(100):
        ctrl.reset([ChannelInputs(*rng.uniform(-0.5, 0.5, 2), 0.0, 0.0) for _ in range(3)])
        assert max(abs(ch.s) for ch in ctrl.channels) <= 1e-12


def test_roll_only_error_leaves_other_axes_idle():
    ctrl = SACController((GAINS,) * 3, inertia=INERTIA)
    inputs = [ChannelInputs(0.05, -0.1, 0.0, 0.0), ChannelInputs(0.0, 0.0, 0.0, 0.0), ChannelInputs(0.0, 0.0, 0.0, 0.0)]
    ctrl.reset(inputs)
    u = sac_control(ctrl, inputs)
    assert u[0] != 0.0
    assert u[1] == 0.0 and u[2] == 0.0


def test_rsmc_matches_sac_without_disturbance_at_start():
    surfaces = (GAINS,) * 3
    sac = SACController(surfaces, inertia=INERTIA)
    rsmc = RSMCController(surfaces, inertia=INERTIA)
    inputs = [ChannelInputs(0.02, 0.1, 0.0, 0.01) for _ in range(3)]
    sac.reset(inputs)
    rsmc.reset(inputs)
    # both start with s = 0 and no switching integral; SAC ignores d_hat = 0
    assert sac_control(sac, inputs) == pytest.approx(rsmc_control(rsmc, inputs), abs=1e-15)


def test_sac_uses_observer_estimate():
    ctrl = SACController((GAINS,) * 3, inertia=INERTIA)
    base = zero_inputs()
    ctrl.reset(base)
    shifted = [ChannelInputs(0.0, 0.0, 0.0, 0.0, d_hat=1.0)] + base[1:]
    assert sac_control(ctrl, shifted)[0] == pytest.approx(-IX)
    rsmc = RSMCController((GAINS,) * 3, inertia=INERTIA)
    rsmc.reset(base)
    assert rsmc_control(rsmc, shifted)[0] == 0.0


def test_torque_limit_clamps():
    ctrl = SACController((GAINS,) * 3, inertia=INERTIA, torque_limit=(0.1, 0.1, 0.1))
    inputs = [ChannelInputs(0.0, 0.0, 0.0, 0.0, d_hat=5.0) for _ in range(3)]
    ctrl.reset(inputs)
    assert sac_control(ctrl, inputs) == (-0.1, -0.1, -0.1)


def test_adaptation_gate_in_advance():
    ctrl = SACController((GAINS,) * 3, AdaptationConfig(epsilon=1e-2), inertia=INERTIA)
    inputs = [ChannelInputs(1e-3, 0.5, 0.0, 0.0)] * 3
    ctrl.reset(inputs)
    ctrl.control(inputs)
    ctrl.advance(inputs, 1e-3)
    assert all(ch.xi1_hat == 1.0 and ch.xi2_hat == 1.0 for ch in ctrl.channels)
    open_inputs = [ChannelInputs(0.1, 0.5, 0.0, 0.0, d_hat=1.0)] * 3
    ctrl.control(open_inputs)
    ctrl.advance(open_inputs, 1e-3)
    assert all(ch.xi1_hat > 1.0 for ch in ctrl.channels)


def test_ftsmc_reaching_law():
    gains = SurfaceGains(k_lin=1.0, k_term=0.2, alpha=1.5)
    ctrl = FTSMCController((gains,) * 3, k_s=2.0, k_w=0.5, inertia=INERTIA)
    inputs = [ChannelInputs(0.1, 0.0, 0.0, 0.0)] * 3
    ctrl.reset(inputs)
    u = ftsmc_control(ctrl, inputs)
    # sigma = 0.1 is outside the boundary layer
    assert u[0] == pytest.approx(-IX * (0.2 * 0.1**1.5 + 2.0 * 0.1 + 0.5))
