"""Super-twisting extended state observer, one independent channel per axis.

Each channel tracks an angle, its rate and the lumped disturbance acting on the
rate equation, from the measured angle alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from ._numerics import sat, sig, sign
from ._kernels import observer_sign_step
from .integrate import grid, rk4_step


@dataclass(frozen=True)
class ObserverGains:
    """Observer gains.

    The defaults are the nominal 30/300/1000 gain ladder.
    ``switching`` selects ``"sign"`` (discontinuous disturbance update) or
    ``"sat"`` (boundary layer of half-width ``boundary`` rad).
    """

    h1: float = 30.0
    h2: float = 300.0
    h3: float = 1000.0
    switching: str = "sign"
    boundary: float = 0.01

    def __post_init__(self):
        if min(self.h1, self.h2, self.h3) <= 0.0:
            raise ValueError("observer gains must be positive")
        if self.switching not in ("sign", "sat"):
            raise ValueError(f"switching must be 'sign' or 'sat', got {self.switching!r}")
        if self.boundary <= 0.0:
            raise ValueError("boundary must be positive")


@dataclass(frozen=True)
class ObserverChannel:
    x1_hat: float = 0.0
    x2_hat: float = 0.0
    d_hat: float = 0.0
    gains: ObserverGains = field(default_factory=ObserverGains)

    def as_tuple(self):
        return (self.x1_hat, self.x2_hat, self.d_hat)

    def with_estimates(self, x1_hat, x2_hat, d_hat):
        return replace(self, x1_hat=float(x1_hat), x2_hat=float(x2_hat), d_hat=float(d_hat))


def derivative(x1_hat, x2_hat, d_hat, gains, measured_angle, gyro_coupling, control_accel):
    """Estimate derivatives as plain floats.

    The innovation is ``x1_hat - measured_angle``; with that sign the estimation
    errors ``angle - x1_hat`` etc. obey the stable error dynamics.
    """
    err = x1_hat - measured_angle
    if gains.switching == "sign":
        switch = sign(err)
    else:
        switch = sat(err, gains.boundary)
    return (
        x2_hat - gains.h1 * sig(err, 2.0 / 3.0),
        d_hat + gyro_coupling + control_accel - gains.h2 * sig(err, 1.0 / 3.0),
        -gains.h3 * switch,
    )


def observer_derivative(channel, measured_angle, gyro_coupling, control_accel):
    """Time derivative of ``(x1_hat, x2_hat, d_hat)``.

    ``gyro_coupling`` is the known inertia-coupling acceleration of the axis,
    e.g. ``(Iy - Iz)/Ix * q * r`` for roll; ``control_accel`` is torque over inertia.
    """
    return derivative(
        channel.x1_hat,
        channel.x2_hat,
        channel.d_hat,
        channel.gains,
        measured_angle,
        gyro_coupling,
        control_accel,
    )


def estimation_errors(channel, angle, rate, disturbance):
    """``(angle - x1_hat, rate - x2_hat, disturbance - d_hat)``."""
    return (angle - channel.x1_hat, rate - channel.x2_hat, disturbance - channel.d_hat)


def implicit_update(x1_hat, x2_hat, d_hat, gains, measured_next, accel, step):
    """One implicit-Euler step of the observer.

    ``accel`` is the known part of the rate derivative (coupling plus control
    acceleration) held over the step, ``measured_next`` the angle sampled at the
    end of the step. The switching term is solved as a set-valued inclusion, so
    the disturbance estimate does not chatter and settles exactly on a constant
    disturbance.
    """
    h = step
    if gains.switching == "sign":
        # with the substitution err = +-z**3 the inclusion becomes a cubic in z
        return observer_sign_step(
            x1_hat, x2_hat, d_hat, gains.h1, gains.h2, gains.h3, measured_next, accel, h
        )
    c = x1_hat - measured_next + h * x2_hat + h * h * (d_hat + accel)
    a, b, top = h * gains.h1, h * h * gains.h2, h * h * h * gains.h3
    err = _solve_sat(c, a, b, top, gains.boundary)
    switch = sat(err, gains.boundary)
    d_next = d_hat - h * gains.h3 * switch
    x2_next = x2_hat + h * (d_next + accel - gains.h2 * sig(err, 1.0 / 3.0))
    x1_next = x1_hat + h * (x2_next - gains.h1 * sig(err, 2.0 / 3.0))
    return x1_next, x2_next, d_next


def _solve_sat(c, a, b, top, boundary):
    if c == 0.0:
        return 0.0

    def g(z):
        e = z * z * z
        return e + a * z * abs(z) + b * z + top * sat(e, boundary) - c

    # every term of g has the sign of z, so each alone bounds the root
    bound = 1.000001 * min(abs(c) ** (1.0 / 3.0), abs(c) / b, math.sqrt(abs(c) / a))
    z = brentq(g, -bound, bound, xtol=1e-300, rtol=1e-15, maxiter=200)
    return z * z * z


def run_open_loop(disturbance, duration, step=1e-3, gains=None, control=None, initial=(0.0, 0.0)):
    """Observer alone on a double integrator ``x'' = u(t) + d(t)``.

    The plant is integrated with RK4; the observer starts from zero estimates
    and is advanced with :func:`implicit_update` on each new angle sample.
    Returns ``(t, plant, estimates)``: ``plant[:, 0:2]`` is the true angle and
    rate, ``plant[:, 2]`` the injected disturbance.
    """
    gains = gains or ObserverGains()
    control = control or (lambda t: 0.0)

    times = grid(duration, step)
    y = np.array([initial[0], initial[1]], dtype=float)
    obs = (0.0, 0.0, 0.0)
    plant = np.empty((len(times), 3))
    est = np.empty((len(times), 3))
    u = 0.0
    for k, t in enumerate(times):
        if k > 0:
            obs = implicit_update(*obs, gains, y[0], u, step)
        plant[k] = (y[0], y[1], disturbance(t))
        est[k] = obs
        if k + 1 < len(times):
            u = control(t)
            y = rk4_step(lambda tt, yy: np.array([yy[1], u + disturbance(tt)]), t, y, step)
    return times, plant, est


def settle_time(times, error, threshold):
    """First time after which ``|error| < threshold`` holds for the rest of the record."""
    bad = np.nonzero(np.abs(error) >= threshold)[0]
    if len(bad) == 0:
        return float(times[0])
    if bad[-1] == len(times) - 1:
        return math.inf
    return float(times[bad[-1] + 1])
