"""Fixed-step closed-loop simulation: plant, observer, controller, allocation.

One step at grid time ``t_k``:

1. sample the measured attitude (optionally with additive noise);
2. advance the observer to ``t_k`` with the implicit update;
3. compute controller torques from the sampled errors;
4. evaluate the tilt schedule;
5. allocate rotor speeds (control surfaces once the mixer is singular);
6. record everything;
7. integrate the plant over ``[t_k, t_k + h]`` with RK4, actuator inputs held
   and the disturbance evaluated at the stage times, then advance the
   controller integrators with the same held inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .allocation import (
    DET_FLOOR,
    TiltTimeline,
    allocate_unchecked,
    default_timeline,
    forward_allocation,
    mixer_conditioning,
)
from .arsmc import AXES, AttitudeReference, ChannelInputs, ControllerConfig, build_controller
from ._kernels import HAVE_NUMBA, plant_rk4
from .integrate import grid
from .rigid_body import (
    STATE_FIELDS,
    AeroCoefficients,
    BodyState,
    TOL_SINGULARITY,
    SingularityError,
    VehicleParams,
    held_wrench,
    stage_rates,
)
from .steso import ObserverGains, implicit_update

THRUST_POLICIES = ("hover", "rotor_share")


class SimulationError(RuntimeError):
    """Run-terminating numerical failure at simulation time ``t``."""

    def __init__(self, t, reason):
        super().__init__(f"simulation failed at t={t:.6f} s: {reason}")
        self.t = t
        self.reason = reason


# -- disturbances -------------------------------------------------------------


@dataclass(frozen=True)
class ZeroDisturbance:
    def value(self, t):
        return (0.0, 0.0, 0.0)

    def bound(self):
        return 0.0


@dataclass(frozen=True)
class ConstantDisturbance:
    values: tuple = (0.0, 0.0, 0.0)

    def value(self, t):
        return tuple(float(v) for v in self.values)

    def bound(self):
        return max(abs(v) for v in self.values)


@dataclass(frozen=True)
class WindowedSine:
    """``amplitude * sin(omega * (t - t_on))`` on ``[t_on, t_off]``, zero elsewhere.

    ``axes`` weights the signal per channel.
    """

    amplitude: float = 5.0
    omega: float = math.pi
    t_on: float = 9.0
    t_off: float = 11.0
    axes: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.t_off < self.t_on:
            raise ValueError("t_off must not precede t_on")

    def value(self, t):
        if t < self.t_on or t > self.t_off:
            return (0.0, 0.0, 0.0)
        v = self.amplitude * math.sin(self.omega * (t - self.t_on))
        return tuple(v * w for w in self.axes)

    def bound(self):
        return abs(self.amplitude) * max(abs(w) for w in self.axes)


@dataclass(frozen=True)
class SumDisturbance:
    parts: tuple = ()

    def value(self, t):
        total = [0.0, 0.0, 0.0]
        for part in self.parts:
            for i, v in enumerate(part.value(t)):
                total[i] += v
        return tuple(total)

    def bound(self):
        return sum(part.bound() for part in self.parts)


def disturbance_at(profile, t):
    """Per-axis disturbance (rad/s^2) at time ``t``."""
    return profile.value(t)


def burst_disturbance():
    """The 5 sin(pi (t - 9)) burst on 9-11 s, applied to all three axes."""
    return WindowedSine(amplitude=5.0, omega=math.pi, t_on=9.0, t_off=11.0)


# -- configuration --------------------------------------------------------------


@dataclass(frozen=True)
class PhaseWindows:
    conversion: tuple = (3.0, 13.0)
    reconversion: tuple = (20.0, 22.0)

    def __post_init__(self):
        (a, b), (c, d) = self.conversion, self.reconversion
        if not (a < b <= c < d):
            raise ValueError("phase windows must be ordered and non-overlapping")

    def as_dict(self, duration):
        return {
            "conversion": tuple(self.conversion),
            "reconversion": tuple(self.reconversion),
            "full": (0.0, float(duration)),
        }


def default_initial_state():
    return BodyState(
        phi=math.radians(0.57), theta=math.radians(0.57), psi=math.radians(1.14)
    )


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything a run needs. Defaults reproduce the nominal 24 s transition."""

    duration: float = 24.0
    step: float = 1e-3
    initial: BodyState = field(default_factory=default_initial_state)
    reference: AttitudeReference = field(default_factory=AttitudeReference)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    observer: ObserverGains = field(default_factory=ObserverGains)
    timeline: TiltTimeline | None = field(default_factory=default_timeline)
    disturbance: object = field(default_factory=ZeroDisturbance)
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    aero: AeroCoefficients = field(default_factory=AeroCoefficients)
    windows: PhaseWindows = field(default_factory=PhaseWindows)
    thrust_policy: str = "rotor_share"
    det_floor: float = DET_FLOOR
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (self.step > 0.0 and math.isfinite(self.step)):
            raise ValueError(f"step must be positive, got {self.step!r}")
        if not math.isfinite(self.duration) or self.duration < 0.0:
            raise ValueError(f"duration must be non-negative, got {self.duration!r}")
        if 0.0 < self.duration < self.step:
            raise ValueError("duration must be zero or at least one step")
        if self.thrust_policy not in THRUST_POLICIES:
            raise ValueError(f"thrust_policy must be one of {THRUST_POLICIES}")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be non-negative")
        if self.duration > 0.0:
            for name, (lo, hi) in self.windows.as_dict(self.duration).items():
                if lo < 0.0 or hi > self.duration + 1e-9:
                    raise ValueError(f"{name} window {lo}-{hi} s lies outside the run")


# -- trace ----------------------------------------------------------------------


def _axis_cols(prefix):
    return [f"{prefix}_{a}" for a in AXES]


TRACE_COLUMNS = (
    ["t"]
    + list(STATE_FIELDS)
    + _axis_cols("e")
    + _axis_cols("x1hat")
    + _axis_cols("x2hat")
    + _axis_cols("dhat")
    + _axis_cols("dist")
    + _axis_cols("sigma")
    + _axis_cols("s")
    + _axis_cols("sdot")
    + _axis_cols("eta")
    + _axis_cols("xi1")
    + _axis_cols("xi2")
    + _axis_cols("u0")
    + _axis_cols("u1")
    + ["T_cmd", "u_roll", "u_pitch", "u_yaw"]
    + ["ach_roll", "ach_pitch", "ach_yaw", "ach_T"]
    + ["omega1", "omega2", "omega3", "omega4"]
    + ["delta", "delta_dot"]
    + ["surf_roll", "surf_pitch", "surf_yaw"]
    + ["saturated", "forward_mode"]
)


@dataclass
class SimTrace:
    """Column store of one run on a uniform grid; one row per grid time."""

    columns: dict
    controller: str = "sac"

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError("trace columns differ in length")

    @property
    def names(self):
        return list(self.columns)

    @property
    def time(self):
        return self.columns["t"]

    def __len__(self):
        return len(self.columns["t"])

    def __getitem__(self, name):
        return self.columns[name]

    def errors(self):
        """Tracking errors in rad, shape (n, 3)."""
        return np.column_stack([self.columns[c] for c in _axis_cols("e")])

    def state(self, index=-1):
        return BodyState(*(float(self.columns[n][index]) for n in STATE_FIELDS))

    def as_array(self):
        return np.column_stack([self.columns[n] for n in self.names])


# -- kernel ---------------------------------------------------------------------


def euler_rates(phi, theta, p, q, r):
    """Euler-angle rates from body rates."""
    sph, cph = math.sin(phi), math.cos(phi)
    cth = math.cos(theta)
    tth = math.tan(theta)
    return (
        p + sph * tth * q + cph * tth * r,
        cph * q - sph * r,
        (sph * q + cph * r) / cth,
    )


@dataclass
class SimState:
    """Mutable loop state of a run."""

    t: float
    x: list
    observer: list
    accel_prev: tuple
    controller: object
    rng: object


class Simulator:
    """Stateful runner; :func:`run` is the usual entry point."""

    def __init__(self, config, controller_kind=None):
        self.config = config
        self.params = config.vehicle
        self.kind = controller_kind or config.controller.kind
        self.controller = build_controller(config.controller, self.params.inertia, self.kind)
        n = len(grid(config.duration, config.step))
        self.n = n
        self.rows = []
        self.k = 0
        self.rng = np.random.default_rng(config.seed)
        self.x = list(config.initial.to_array())
        self.observer = None
        self.accel_prev = (0.0, 0.0, 0.0)
        self._aero = None if config.aero.is_zero() else config.aero
        self._compiled = HAVE_NUMBA and self._aero is None
        p = self.params
        self._consts = (p.m, p.g, p.Ix, p.Iy, p.Iz, p.nacelle_moment, p.nacelle_inertia)
        self._pitch_limit = math.pi / 2 - TOL_SINGULARITY

    # sampling ----------------------------------------------------------------

    def _measure(self):
        phi, theta, psi = self.x[6], self.x[7], self.x[8]
        if self.config.noise_std > 0.0:
            noise = self.rng.normal(0.0, self.config.noise_std, 3)
            return phi + noise[0], theta + noise[1], psi + noise[2]
        return phi, theta, psi

    def _inputs(self, angles, rates):
        ref = self.config.reference
        p, q, r = self.x[3], self.x[4], self.x[5]
        params = self.params
        Ix, Iy, Iz = params.Ix, params.Iy, params.Iz
        gyro = ((Iy - Iz) * q * r, (Iz - Ix) * p * r, (Ix - Iy) * p * q)
        inputs = []
        h = self.config.step
        for i in range(3):
            if self.controller.uses_observer:
                x1, x2, d = self.observer[i]
                # implicit update leaves x2 half a step behind; shift to t_k
                rate = x2 + 0.5 * h * (d + self.accel_prev[i])
                e, e_dot = x1 - ref.angles[i], rate - ref.rates[i]
            else:
                e, e_dot = angles[i] - ref.angles[i], rates[i] - ref.rates[i]
                d = 0.0
            inputs.append(ChannelInputs(e, e_dot, ref.accels[i], gyro[i], d))
        return inputs, gyro

    def _update_observer(self, angles, rates):
        gains = self.config.observer
        if self.observer is None:
            self.observer = [(angles[i], rates[i], 0.0) for i in range(3)]
            return
        h = self.config.step
        self.observer = [
            implicit_update(*self.observer[i], gains, angles[i], self.accel_prev[i], h)
            for i in range(3)
        ]

    def _allocate(self, torque, delta):
        params = self.params
        mg = params.m * params.g
        thrust = -mg if self.config.thrust_policy == "hover" else -mg * math.cos(delta)
        if mixer_conditioning(delta, params) <= self.config.det_floor:
            return forward_allocation(torque, params), 0.0
        return allocate_unchecked((thrust,) + tuple(torque), delta, params), thrust

    # stepping ------------------------------------------------------------------

    def step_once(self):
        """Sample, control, record row ``k`` and integrate to ``k + 1`` if any."""
        cfg = self.config
        t = self.k * cfg.step
        angles = self._measure()
        p, q, r = self.x[3], self.x[4], self.x[5]
        rates = euler_rates(self.x[6], self.x[7], p, q, r)
        self._update_observer(angles, rates)
        inputs, gyro = self._inputs(angles, rates)
        if self.k == 0:
            self.controller.reset(inputs)
        torque, parts = self.controller.control(inputs)
        if cfg.timeline is None:
            delta, delta_dot, delta_acc = 0.0, 0.0, 0.0
        else:
            delta, delta_dot, delta_acc = cfg.timeline.profile(t)
        try:
            result, thrust = self._allocate(torque, delta)
        except ArithmeticError as exc:
            raise SimulationError(t, str(exc)) from exc
        dist = cfg.disturbance.value(t)
        self._record(t, inputs, torque, parts, thrust, result, delta, delta_dot, dist)

        inertia = self.params.inertia
        self.accel_prev = tuple((gyro[i] + torque[i]) / inertia[i] for i in range(3))
        if self.k + 1 < self.n:
            self._integrate(t, result, delta, delta_acc)
            self.controller.advance(inputs, cfg.step)
        self.k += 1

    def _integrate(self, t, result, delta, delta_acc):
        cfg, params, aero = self.config, self.params, self._aero
        h = cfg.step
        omega, surfaces = result.omega, result.surfaces
        profile = cfg.disturbance
        x = self.x
        d0 = profile.value(t)
        dm = profile.value(t + 0.5 * h)
        d1 = profile.value(t + h)
        if self._compiled:
            wrench = held_wrench(omega, delta, surfaces, params)
            consts = self._consts + (delta, delta_acc, self._pitch_limit)
            x_next = plant_rk4(x, h, wrench, consts, d0, dm, d1)
            if x_next is None:
                raise SimulationError(t, "pitch reached the Euler-angle singularity")
            self._set_state(x_next, t + h)
            return
        try:
            f = stage_rates(omega, delta, delta_acc, surfaces, params, aero)
            hh = 0.5 * h
            k1 = f(x, d0)
            k2 = f([a + hh * b for a, b in zip(x, k1)], dm)
            k3 = f([a + hh * b for a, b in zip(x, k2)], dm)
            k4 = f([a + h * b for a, b in zip(x, k3)], d1)
        except SingularityError as exc:
            raise SimulationError(t, str(exc)) from exc
        h6 = h / 6.0
        self._set_state(
            [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(x, k1, k2, k3, k4)], t + h
        )

    def _set_state(self, x, t):
        # any inf or nan poisons the sum
        if not math.isfinite(math.fsum(x)):
            raise SimulationError(t, "non-finite plant state")
        self.x = x

    def _record(self, t, inputs, torque, parts, thrust, result, delta, delta_dot, dist):
        ref = self.config.reference
        obs = self.observer
        ch = self.controller.channels
        row = [t]
        row += self.x
        row += [self.x[6 + i] - ref.angles[i] for i in range(3)]
        row += [o[0] for o in obs]
        row += [o[1] for o in obs]
        row += [o[2] for o in obs]
        row += list(dist)
        row += [c.sigma for c in ch]
        row += [c.s for c in ch]
        row += [c.s_dot for c in ch]
        row += [c.eta for c in ch]
        row += [c.xi1_hat for c in ch]
        row += [c.xi2_hat for c in ch]
        row += list(parts["u0"])
        row += list(parts["u1"])
        row += [thrust] + list(torque)
        row += list(result.achieved[1:]) + [result.achieved[0]]
        row += list(result.omega)
        row += [delta, delta_dot]
        row += list(result.surfaces)
        row += [float(result.saturated), float(result.forward_mode)]
        self.rows.append(row)

    def run(self):
        while self.k < self.n:
            self.step_once()
        table = np.array(self.rows, dtype=float).reshape(len(self.rows), len(TRACE_COLUMNS))
        columns = {name: table[:, i].copy() for i, name in enumerate(TRACE_COLUMNS)}
        return SimTrace(columns, controller=self.kind)


def run(config, controller=None):
    """Simulate ``config`` and return the :class:`SimTrace`.

    ``controller`` overrides the configured controller kind.

    Raises
    ------
    SimulationError
        On an attitude singularity, a singular mixer or a non-finite state.
    """
    return Simulator(config, controller).run()


def step_once(simulator):
    """Advance ``simulator`` by one grid step (thin functional wrapper)."""
    simulator.step_once()
    return simulator
