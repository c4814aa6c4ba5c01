"""Control allocation and the nacelle tilt schedule.

The mixer maps squared rotor speeds to ``(T, u1, u2, u3)``: the body-z rotor
force plus roll, pitch and yaw torque. Its rows are taken from the rotor
model in :mod:`tiltsac.rigid_body`, so an allocated command reproduces the
requested wrench exactly whenever no rotor saturates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rigid_body import rotor_forces

DET_FLOOR = 1e-9  # on the row-normalized determinant


class SingularMixerError(ArithmeticError):
    """The mixer cannot be inverted at the requested tilt angle."""

    def __init__(self, delta, normalized_det):
        super().__init__(
            f"mixer singular at delta={delta:.6f} rad (normalized det {normalized_det:.3e})"
        )
        self.delta = delta
        self.normalized_det = normalized_det


def mixer_matrix(delta, params):
    """4x4 matrix ``M`` with ``(T, u1, u2, u3) = M @ omega**2``."""
    kt, kd, d = params.kt, params.kd, params.d_arm
    c, s = math.cos(delta), math.sin(delta)
    return np.array(
        [
            [-kt * c, -kt, -kt * c, -kt],
            [-d * kt * c + kd * s, d * kt, d * kt * c - kd * s, -d * kt],
            [d * kt * c, -d * kt, d * kt * c, -d * kt],
            [-d * kt * s - kd * c, -kd, d * kt * s + kd * c, kd],
        ]
    )


def mixer_determinant(delta, params):
    """Closed-form determinant of :func:`mixer_matrix`."""
    kt, kd, d = params.kt, params.kd, params.d_arm
    c, s = math.cos(delta), math.sin(delta)
    return -8.0 * d * kt**2 * c * (d**2 * kt**2 * s + 2.0 * d * kt * kd * c - kd**2 * s)


def normalized_determinant(matrix):
    """``|det M| / prod(row norms)``, in [0, 1] and free of physical units."""
    matrix = np.asarray(matrix, dtype=float)
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms == 0.0):
        return 0.0
    return float(abs(np.linalg.det(matrix)) / np.prod(norms))


def mixer_conditioning(delta, params):
    """Closed-form :func:`normalized_determinant` of the mixer at ``delta``."""
    kt, kd, d = params.kt, params.kd, params.d_arm
    c, s = math.cos(delta), math.sin(delta)
    norms = (
        kt * math.sqrt(2.0 * c * c + 2.0)
        * math.sqrt(2.0 * (d * kt * c - kd * s) ** 2 + 2.0 * (d * kt) ** 2)
        * d * kt * math.sqrt(2.0 * c * c + 2.0)
        * math.sqrt(2.0 * (d * kt * s + kd * c) ** 2 + 2.0 * kd * kd)
    )
    return abs(mixer_determinant(delta, params)) / norms


def is_singular(delta, params, det_floor=DET_FLOOR):
    return mixer_conditioning(delta, params) <= det_floor


@dataclass(frozen=True)
class Allocation:
    """Result of one allocation: rotor speeds, clamp flag and realized wrench."""

    omega: tuple
    saturated: bool
    achieved: tuple
    forward_mode: bool = False
    surfaces: tuple = (0.0, 0.0, 0.0)


def solve_mixer(command, delta, params):
    """Squared rotor speeds ``w`` with ``mixer_matrix(delta) @ w == command``.

    The mixer decouples into two 2x2 systems in the front/rear sums
    ``w1 + w3``, ``w2 + w4`` (thrust, pitch) and differences ``w3 - w1``,
    ``w2 - w4`` (roll, yaw), solved here in closed form.
    """
    kt, kd, d = params.kt, params.kd, params.d_arm
    c, s = math.cos(delta), math.sin(delta)
    thrust, roll, pitch, yaw = command
    front_sum = (pitch - d * thrust) / (2.0 * d * kt * c)
    rear_sum = -(d * thrust + pitch) / (2.0 * d * kt)
    a, b = d * kt * c - kd * s, d * kt
    cc, dd = d * kt * s + kd * c, -kd
    det2 = a * dd - b * cc
    front_diff = (dd * roll - b * yaw) / det2
    rear_diff = (a * yaw - cc * roll) / det2
    return (
        0.5 * (front_sum - front_diff),
        0.5 * (rear_sum + rear_diff),
        0.5 * (front_sum + front_diff),
        0.5 * (rear_sum - rear_diff),
    )


def mixer_apply(squared, delta, params):
    """``mixer_matrix(delta) @ squared`` without building the matrix."""
    kt, kd, d = params.kt, params.kd, params.d_arm
    c, s = math.cos(delta), math.sin(delta)
    w1, w2, w3, w4 = squared
    front_sum, rear_sum = w1 + w3, w2 + w4
    front_diff, rear_diff = w3 - w1, w2 - w4
    return (
        -kt * c * front_sum - kt * rear_sum,
        (d * kt * c - kd * s) * front_diff + d * kt * rear_diff,
        d * kt * c * front_sum - d * kt * rear_sum,
        (d * kt * s + kd * c) * front_diff - kd * rear_diff,
    )


def allocate(command, delta, params, det_floor=DET_FLOOR):
    """Rotor speeds (rad/s) realizing ``command = (T, u1, u2, u3)``.

    Negative squared speeds are clamped to zero and flagged; ``achieved`` is
    the wrench the clamped speeds actually produce.

    Raises
    ------
    SingularMixerError
        When the normalized determinant is at or below ``det_floor``.
    """
    ndet = mixer_conditioning(delta, params)
    if ndet <= det_floor:
        raise SingularMixerError(delta, ndet)
    return allocate_unchecked(command, delta, params)


def allocate_unchecked(command, delta, params):
    """:func:`allocate` without the singularity guard."""
    squared = solve_mixer(command, delta, params)
    saturated = min(squared) < 0.0
    squared = tuple(max(w, 0.0) for w in squared)
    omega = tuple(math.sqrt(w) for w in squared)
    achieved = mixer_apply(squared, delta, params)
    return Allocation(omega=omega, saturated=saturated, achieved=achieved)


def forward_mode_stub(torque, params):
    """Normalized control-surface deflections for torques ``(u1, u2, u3)``.

    A placeholder for fixed-wing allocation: ``torque / authority`` clipped to
    [-1, 1].
    """
    auth = params.surface_authority
    return tuple(max(-1.0, min(1.0, t / a)) for t, a in zip(torque, auth))


def forward_allocation(torque, params, hover_share=0.25):
    """Allocation once the mixer is singular.

    Each front rotor supplies ``hover_share * m * g`` of forward thrust, the
    rear rotors stop and the surfaces take the torques.
    """
    surfaces = forward_mode_stub(torque, params)
    front = math.sqrt(hover_share * params.m * params.g / params.kt)
    omega = (front, 0.0, front, 0.0)
    force, thrust_m, drag_m = rotor_forces(omega, math.pi / 2.0, params)
    auth = params.surface_authority
    moments = tuple(tm + dm + a * s for tm, dm, a, s in zip(thrust_m, drag_m, auth, surfaces))
    saturated = any(abs(t) > a for t, a in zip(torque, auth))
    return Allocation(
        omega=omega,
        saturated=saturated,
        achieved=(force[2],) + moments,
        forward_mode=True,
        surfaces=surfaces,
    )


# -- tilt schedule ------------------------------------------------------------


@dataclass(frozen=True)
class TiltSchedule:
    """Trapezoidal-velocity tilt move between ``start`` and ``end`` angles (rad).

    ``accel`` and ``rate`` are magnitudes in deg/s^2 and deg/s. The move
    accelerates, coasts at ``rate`` and decelerates symmetrically.
    """

    t0: float
    start: float
    end: float
    accel: float
    rate: float

    def __post_init__(self):
        if self.accel <= 0 or self.rate <= 0:
            raise ValueError("accel and rate must be positive")
        a, b = math.radians(self.accel), math.radians(self.rate)
        if b * b / a > abs(self.end - self.start) + 1e-12:
            raise ValueError(
                f"rate {self.rate} deg/s cannot be reached within the move "
                f"(needs b^2/a <= |end - start|)"
            )

    @property
    def ramp_time(self):
        return self.rate / self.accel

    @property
    def duration(self):
        span = abs(self.end - self.start)
        b = math.radians(self.rate)
        return span / b + self.ramp_time

    @property
    def t_end(self):
        return self.t0 + self.duration

    def profile(self, t):
        """``(delta, delta_dot, delta_ddot)`` at time ``t``."""
        tau = t - self.t0
        if tau <= 0.0:
            return self.start, 0.0, 0.0
        total = self.duration
        if tau >= total:
            return self.end, 0.0, 0.0
        direction = 1.0 if self.end >= self.start else -1.0
        a, b = math.radians(self.accel), math.radians(self.rate)
        ramp = self.ramp_time
        span = abs(self.end - self.start)
        if tau < ramp:
            pos, vel, acc = 0.5 * a * tau * tau, a * tau, a
        elif tau <= total - ramp:
            pos, vel, acc = 0.5 * b * b / a + b * (tau - ramp), b, 0.0
        else:
            rest = total - tau
            pos, vel, acc = span - 0.5 * a * rest * rest, a * rest, -a
        return self.start + direction * pos, direction * vel, direction * acc


@dataclass(frozen=True)
class TiltTimeline:
    """Conversion followed by reconversion."""

    conversion: TiltSchedule
    reconversion: TiltSchedule

    def __post_init__(self):
        if self.reconversion.t0 < self.conversion.t_end:
            raise ValueError("reconversion starts before conversion ends")

    def profile(self, t):
        if t < self.reconversion.t0:
            return self.conversion.profile(t)
        return self.reconversion.profile(t)


def default_timeline(conversion_t0=3.0, reconversion_t0=20.0):
    return TiltTimeline(
        conversion=TiltSchedule(conversion_t0, 0.0, math.pi / 2.0, accel=4.0, rate=14.0),
        reconversion=TiltSchedule(reconversion_t0, math.pi / 2.0, 0.0, accel=180.0, rate=90.0),
    )


def tilt_at(schedule, t):
    """``(delta, delta_dot)`` of a schedule or timeline at ``t``."""
    delta, rate, _ = schedule.profile(t)
    return delta, rate
