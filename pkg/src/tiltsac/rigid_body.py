"""Six-degree-of-freedom tiltrotor plant.

Body axes are x forward, y right, z down. Rotors 1 and 3 are the tilting front
pair (1 right, 3 left), rotors 2 and 4 the fixed rear pair (2 left, 4 right).
A tilt angle of 0 points every rotor up (hover); pi/2 points the front rotors
forward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

TOL_SINGULARITY = 1e-3  # rad from |theta| = pi/2


class SingularityError(ArithmeticError):
    """Pitch angle too close to +-pi/2 for the Euler-angle kinematics."""


@dataclass(frozen=True)
class BodyState:
    """Full rigid-body state; also used to carry its own time derivative."""

    u: float = 0.0
    v: float = 0.0
    w: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0
    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0
    pn: float = 0.0
    pe: float = 0.0
    h: float = 0.0

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, f.name) for f in fields(self)], dtype=float)

    @classmethod
    def from_array(cls, x) -> "BodyState":
        return cls(*(float(v) for v in x))


STATE_FIELDS = tuple(f.name for f in fields(BodyState))


@dataclass(frozen=True)
class VehicleParams:
    """Mass, geometry and actuator constants.

    ``m`` through ``Iz`` describe the nominal 6 kg airframe. ``kt``, ``kd`` and
    ``d_arm`` are assumed values of plausible size for it.
    ``nacelle_moment`` (first mass moment of both tilting nacelles about their
    pivot, kg*m) and ``nacelle_inertia`` (kg*m^2) couple the tilt motion into
    pitch. The default nacelle moment is a calibration: it sets the nose-down
    load at full tilt to about 2.9 N*m.
    ``surface_authority`` is the moment per unit normalized surface deflection
    used in forward mode.
    """

    m: float = 6.0
    g: float = 9.81
    Ix: float = 0.876
    Iy: float = 0.166
    Iz: float = 0.115
    S: float = 0.48
    cbar: float = 0.25
    span: float = 2.1
    kt: float = 1.0e-5
    kd: float = 2.0e-7
    d_arm: float = 0.5
    rho_air: float = 1.225
    nacelle_moment: float = 0.3
    nacelle_inertia: float = 0.0
    surface_authority: tuple = (5.0, 5.0, 5.0)

    def __post_init__(self):
        for name in ("m", "g", "Ix", "Iy", "Iz", "S", "kt", "kd", "d_arm", "rho_air"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"VehicleParams.{name} must be positive, got {value!r}")
        if self.nacelle_moment < 0.0 or self.nacelle_inertia < 0.0:
            raise ValueError("nacelle parameters must be non-negative")
        if len(self.surface_authority) != 3 or min(self.surface_authority) <= 0.0:
            raise ValueError("surface_authority needs three positive entries")

    @property
    def inertia(self) -> tuple:
        return (self.Ix, self.Iy, self.Iz)


@dataclass(frozen=True)
class Affine:
    """Coefficient = bias + alpha*aoa + beta*sideslip + p*p + q*q + r*r."""

    bias: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    p: float = 0.0
    q: float = 0.0
    r: float = 0.0

    def __call__(self, aoa, sideslip, p, q, r):
        return self.bias + self.alpha * aoa + self.beta * sideslip + self.p * p + self.q * q + self.r * r

    def is_zero(self) -> bool:
        return not any((self.bias, self.alpha, self.beta, self.p, self.q, self.r))


@dataclass(frozen=True)
class AeroCoefficients:
    Cx: Affine = field(default_factory=Affine)
    Cy: Affine = field(default_factory=Affine)
    Cz: Affine = field(default_factory=Affine)
    Cl: Affine = field(default_factory=Affine)
    Cm: Affine = field(default_factory=Affine)
    Cn: Affine = field(default_factory=Affine)

    def is_zero(self) -> bool:
        return all(getattr(self, f.name).is_zero() for f in fields(self))


@dataclass(frozen=True)
class RotorSet:
    """Rotor speeds (rad/s), tilt angle (rad) and tilt acceleration (rad/s^2)."""

    omega: tuple = (0.0, 0.0, 0.0, 0.0)
    delta: float = 0.0
    delta_accel: float = 0.0

    def __post_init__(self):
        if len(self.omega) != 4:
            raise ValueError("RotorSet needs four rotor speeds")
        if min(self.omega) < 0.0:
            raise ValueError(f"rotor speeds must be non-negative, got {self.omega}")
        if not -1e-12 <= self.delta <= math.pi / 2 + 1e-12:
            raise ValueError(f"tilt angle {self.delta} outside [0, pi/2]")


def check_pitch(theta):
    if abs(theta) >= math.pi / 2 - TOL_SINGULARITY:
        raise SingularityError(f"pitch angle {theta:.6g} rad is at the Euler singularity")


def rotation_eb(phi, theta, psi):
    """World-to-body rotation matrix for Z-Y-X Euler angles."""
    check_pitch(theta)
    cph, sph = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cps, sps = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [cth * cps, cth * sps, -sth],
            [sth * cps * sph - sps * cph, sth * sps * sph + cps * cph, cth * sph],
            [sth * cps * cph + sps * sph, sth * sps * cph - cps * sph, cth * cph],
        ]
    )


def rotor_rotation(index, delta):
    """Rotor-to-body rotation; only the front rotors (1, 3) tilt."""
    if index in (2, 4):
        return np.eye(3)
    if index in (1, 3):
        c, s = math.cos(delta), math.sin(delta)
        return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    raise ValueError(f"rotor index must be 1..4, got {index}")


def _air_data(u, v, w):
    airspeed = math.sqrt(u * u + v * v + w * w)
    if airspeed == 0.0:
        return 0.0, 0.0, 0.0
    return airspeed, math.atan2(w, u), math.asin(max(-1.0, min(1.0, v / airspeed)))


def rotor_forces(omega, delta, params):
    """Propulsive force and moment (thrust-arm plus drag-torque) in body axes."""
    kt, kd, d = params.kt, params.kd, params.d_arm
    o1, o2, o3, o4 = omega
    t1, t2, t3, t4 = kt * o1 * o1, kt * o2 * o2, kt * o3 * o3, kt * o4 * o4
    q1, q2, q3, q4 = kd * o1 * o1, kd * o2 * o2, kd * o3 * o3, kd * o4 * o4
    c, s = math.cos(delta), math.sin(delta)
    force = ((t1 + t3) * s, 0.0, -t1 * c - t2 - t3 * c - t4)
    thrust_moment = (
        d * (-t1 * c + t2 + t3 * c - t4),
        d * (t1 * c - t2 + t3 * c - t4),
        d * (-t1 * s + t3 * s),
    )
    drag_moment = (q1 * s - q3 * s, 0.0, -q1 * c - q2 + q3 * c + q4)
    return force, thrust_moment, drag_moment


def aero_forces(u, v, w, p, q, r, params, aero):
    """Aerodynamic force and moment; zero at zero airspeed or for ``aero=None``."""
    if aero is None:
        return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
    airspeed, aoa, sideslip = _air_data(u, v, w)
    if airspeed == 0.0 or aero.is_zero():
        return (0.0, 0.0, 0.0), (0.0, 0.0, 0.0)
    qs = 0.5 * params.rho_air * airspeed * airspeed * params.S
    args = (aoa, sideslip, p, q, r)
    force = (-qs * aero.Cx(*args), qs * aero.Cy(*args), -qs * aero.Cz(*args))
    moment = (qs * aero.Cl(*args), qs * aero.Cm(*args), qs * aero.Cn(*args))
    return force, moment


def tilt_mechanism_moment(phi, theta, delta, delta_accel, params):
    """Moment from the nacelle weight shift and the servo reaction torque."""
    if params.nacelle_moment == 0.0 and params.nacelle_inertia == 0.0:
        return (0.0, 0.0, 0.0)
    # nacelle CG shift relative to the hover position, crossed with its weight
    ax, az = math.sin(delta), 1.0 - math.cos(delta)
    sth, cth = math.sin(theta), math.cos(theta)
    gx, gy, gz = -sth, cth * math.sin(phi), cth * math.cos(phi)
    k = params.nacelle_moment * params.g
    return (
        k * (-az * gy),
        k * (az * gx - ax * gz) - params.nacelle_inertia * delta_accel,
        k * (ax * gy),
    )


def total_force(state, rotors, params, aero=None):
    """Gravity + rotor thrust + aerodynamic force, body axes (N)."""
    aero = aero or AeroCoefficients()
    sth, cth = math.sin(state.theta), math.cos(state.theta)
    mg = params.m * params.g
    gravity = (-sth * mg, cth * math.sin(state.phi) * mg, cth * math.cos(state.phi) * mg)
    prop, _, _ = rotor_forces(rotors.omega, rotors.delta, params)
    air, _ = aero_forces(state.u, state.v, state.w, state.p, state.q, state.r, params, aero)
    return np.array([gravity[i] + prop[i] + air[i] for i in range(3)])


def total_moment(state, rotors, params, aero=None, surfaces=(0.0, 0.0, 0.0)):
    """Rotor thrust and drag moments + aerodynamic + tilt-mechanism + surface moments (N*m)."""
    aero = aero or AeroCoefficients()
    _, thrust_m, drag_m = rotor_forces(rotors.omega, rotors.delta, params)
    _, air_m = aero_forces(state.u, state.v, state.w, state.p, state.q, state.r, params, aero)
    tilt_m = tilt_mechanism_moment(state.phi, state.theta, rotors.delta, rotors.delta_accel, params)
    auth = params.surface_authority
    return np.array(
        [thrust_m[i] + drag_m[i] + air_m[i] + tilt_m[i] + auth[i] * surfaces[i] for i in range(3)]
    )


def held_wrench(omega, delta, surfaces, params):
    """Rotor force and moment plus surface moment: ``(fx, fy, fz, mx, my, mz)``."""
    prop_f, thrust_m, drag_m = rotor_forces(omega, delta, params)
    auth = params.surface_authority
    return (
        prop_f[0],
        prop_f[1],
        prop_f[2],
        thrust_m[0] + drag_m[0] + auth[0] * surfaces[0],
        thrust_m[1] + drag_m[1] + auth[1] * surfaces[1],
        thrust_m[2] + drag_m[2] + auth[2] * surfaces[2],
    )


def stage_rates(omega, delta, delta_accel, surfaces, params, aero):
    """Plant right-hand side ``f(x, disturbance)`` for actuator inputs held fixed.

    The propulsive and surface wrench is computed once here, so the returned
    function only evaluates the state-dependent terms. This is the hot path of
    the simulator.
    """
    fx0, fy0, fz0, mx0, my0, mz0 = held_wrench(omega, delta, surfaces, params)
    m, Ix, Iy, Iz = params.m, params.Ix, params.Iy, params.Iz
    mg = m * params.g
    cxr, cyr, czr = (Iy - Iz) / Ix, (Iz - Ix) / Iy, (Ix - Iy) / Iz
    nacelle = params.nacelle_moment != 0.0 or params.nacelle_inertia != 0.0
    sin, cos = math.sin, math.cos
    pitch_limit = math.pi / 2 - TOL_SINGULARITY

    def rates(x, disturbance):
        u, v, w, p, q, r, phi, theta, psi = x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]
        if not -pitch_limit < theta < pitch_limit:
            check_pitch(theta)
        sph, cph = sin(phi), cos(phi)
        sth, cth = sin(theta), cos(theta)
        sps, cps = sin(psi), cos(psi)
        tth = sth / cth
        fx = fx0 - sth * mg
        fy = fy0 + cth * sph * mg
        fz = fz0 + cth * cph * mg
        tx, ty, tz = mx0, my0, mz0
        if aero is not None:
            air_f, air_m = aero_forces(u, v, w, p, q, r, params, aero)
            fx, fy, fz = fx + air_f[0], fy + air_f[1], fz + air_f[2]
            tx, ty, tz = tx + air_m[0], ty + air_m[1], tz + air_m[2]
        if nacelle:
            tilt_m = tilt_mechanism_moment(phi, theta, delta, delta_accel, params)
            tx, ty, tz = tx + tilt_m[0], ty + tilt_m[1], tz + tilt_m[2]
        return [
            r * v - q * w + fx / m,
            p * w - r * u + fy / m,
            q * u - p * v + fz / m,
            cxr * q * r + tx / Ix + disturbance[0],
            cyr * p * r + ty / Iy + disturbance[1],
            czr * p * q + tz / Iz + disturbance[2],
            p + sph * tth * q + cph * tth * r,
            cph * q - sph * r,
            (sph * q + cph * r) / cth,
            # position rows with H positive up
            cth * cps * u + (sph * sth * cps - cph * sps) * v + (sph * sps + cph * sth * cps) * w,
            cth * sps * u + (sph * sth * sps + cph * cps) * v + (-sph * cps + cph * sth * sps) * w,
            sth * u - sph * cth * v - cph * cth * w,
        ]

    return rates


def derivative_list(x, omega, delta, delta_accel, surfaces, disturbance, params, aero):
    """Twelve state derivatives from a flat state sequence."""
    return stage_rates(omega, delta, delta_accel, surfaces, params, aero)(x, disturbance)


def state_derivative(
    state,
    rotors,
    params,
    aero=None,
    external_disturbance=(0.0, 0.0, 0.0),
    surfaces=(0.0, 0.0, 0.0),
):
    """Time derivative of ``state``.

    ``external_disturbance`` is a per-axis angular acceleration (rad/s^2) added
    to the rate equations. ``surfaces`` are normalized forward-mode deflections.

    Raises
    ------
    SingularityError
        If ``|theta|`` is within ``TOL_SINGULARITY`` of pi/2.
    """
    aero = aero or AeroCoefficients()
    x = [getattr(state, name) for name in STATE_FIELDS]
    dx = derivative_list(
        x, rotors.omega, rotors.delta, rotors.delta_accel, surfaces, external_disturbance, params, aero
    )
    return BodyState(*dx)


def attitude_model_accel(p, q, r, torque, params, disturbance=(0.0, 0.0, 0.0)):
    """Simplified three-channel angular acceleration used by the controllers."""
    Ix, Iy, Iz = params.Ix, params.Iy, params.Iz
    return (
        (Iy - Iz) / Ix * q * r + torque[0] / Ix + disturbance[0],
        (Iz - Ix) / Iy * p * r + torque[1] / Iy + disturbance[1],
        (Ix - Iy) / Iz * p * q + torque[2] / Iz + disturbance[2],
    )


def gyro_torques(p, q, r, params):
    """Inertia-coupling torques ((Iy-Iz)qr, (Iz-Ix)pr, (Ix-Iy)pq)."""
    Ix, Iy, Iz = params.Ix, params.Iy, params.Iz
    return ((Iy - Iz) * q * r, (Iz - Ix) * p * r, (Ix - Iy) * p * q)


def angular_momentum(state, params):
    return np.array([params.Ix * state.p, params.Iy * state.q, params.Iz * state.r])
