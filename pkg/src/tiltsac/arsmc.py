"""Attitude controllers: adaptive recursive sliding mode (SAC) and two baselines.

Per axis the sliding variables are::

    sigma = e_dot + k_lin*e + k_term*integral(sig(e, alpha))
    s     = sigma + lam*eta,          eta_dot = sig(sigma, beta)

with ``eta(0) = -sigma(0)/lam`` so that ``s(0) = 0``.

All three controllers are sampled: their measured inputs are held over one
step while the internal integrators are advanced with RK4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


from ._numerics import sat, sat_sig, sig, sign

AXES = ("roll", "pitch", "yaw")


@dataclass(frozen=True)
class SurfaceGains:
    k_lin: float = 8.0
    k_term: float = 4.0
    alpha: float = 1.5
    lam: float = 5.0
    beta: float = 0.6

    def __post_init__(self):
        if self.k_lin <= 0 or self.k_term <= 0 or self.lam <= 0:
            raise ValueError("k_lin, k_term and lam must be positive")
        if self.alpha <= 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")


@dataclass(frozen=True)
class AdaptationConfig:
    """Switching-gain adaptation.

    ``adaptation_sign=+1`` grows the gains with sliding activity; ``-1`` is the
    decreasing law taken literally.
    """

    rho: float = 1.0
    epsilon: float = 1e-4
    sat_delta: float = 0.01
    xi_init: tuple = (1.0, 1.0)
    adaptation_sign: int = 1

    def __post_init__(self):
        if self.rho <= 0 or self.epsilon < 0 or self.sat_delta <= 0:
            raise ValueError("need rho > 0, epsilon >= 0, sat_delta > 0")
        if self.adaptation_sign not in (1, -1):
            raise ValueError("adaptation_sign must be +1 or -1")


@dataclass
class ControllerChannel:
    """Per-axis controller state (mutable; one instance per simulation)."""

    term_integral: float = 0.0
    eta: float = 0.0
    sw_integral: float = 0.0
    xi1_hat: float = 1.0
    xi2_hat: float = 1.0
    sigma: float = 0.0
    s: float = 0.0
    s_dot: float = 0.0


@dataclass(frozen=True)
class AttitudeReference:
    """Desired angles with first, second and third derivatives (rad, rad/s, ...)."""

    angles: tuple = (0.0, 0.0, 0.0)
    rates: tuple = (0.0, 0.0, 0.0)
    accels: tuple = (0.0, 0.0, 0.0)
    jerks: tuple = (0.0, 0.0, 0.0)


# -- per-channel operations -------------------------------------------------


def init_eta(sigma0, lam):
    if lam <= 0:
        raise ValueError("lam must be positive")
    return -sigma0 / lam


def initial_sigma(e0, e_dot0, gains):
    """Surface value at t = 0; the terminal integral starts at zero."""
    return e_dot0 + gains.k_lin * e0


def surface_eval(e, e_dot, term_integral, eta, gains):
    """Return ``(sigma, s)``."""
    sigma = e_dot + gains.k_lin * e + gains.k_term * term_integral
    return sigma, sigma + gains.lam * eta


def eta_rate(sigma, gains):
    return sig(sigma, gains.beta)


def sliding_rate(e, e_dot, sigma, accel_error, gains):
    """Model-based ``s_dot`` given the tracking-error acceleration ``accel_error``."""
    return (
        accel_error
        + gains.k_lin * e_dot
        + gains.k_term * sig(e, gains.alpha)
        + gains.lam * sig(sigma, gains.beta)
    )


def equivalent_control(e, e_dot, sigma, d_hat, ref_accel, inertia, gyro_torque, gains):
    """Torque that makes ``s_dot = 0`` when the disturbance estimate is exact."""
    return (
        inertia
        * (
            ref_accel
            - gains.k_lin * e_dot
            - gains.k_term * sig(e, gains.alpha)
            - gains.lam * sig(sigma, gains.beta)
            - d_hat
        )
        - gyro_torque
    )


def switching_integrand(s_dot, boundary):
    """``|s_dot|**0.5 * sat(s_dot)``, the integrand of the switching law."""
    return sat_sig(s_dot, 0.5, boundary)


def switching_control(s, sw_integral, xi1_hat, xi2_hat, inertia):
    return -inertia * (xi1_hat * s + xi2_hat * sw_integral)


def adaptation_rates(s_dot, e, config):
    """Gated gain derivatives; zero while ``|e| <= epsilon``."""
    if abs(e) <= config.epsilon:
        return 0.0, 0.0
    k = config.adaptation_sign * config.rho
    return k * s_dot * s_dot, k * math.sqrt(abs(s_dot))


def adapt_gains(xi1_hat, xi2_hat, s_dot, e, config, step):
    """Explicit single-step gain update."""
    r1, r2 = adaptation_rates(s_dot, e, config)
    return xi1_hat + r1 * step, xi2_hat + r2 * step


# -- controllers --------------------------------------------------------------


def _clamp(values, limits):
    if limits is None:
        return values
    return tuple(max(-lim, min(lim, v)) for v, lim in zip(values, limits))


@dataclass
class ChannelInputs:
    """Sampled inputs of one axis."""

    e: float
    e_dot: float
    ref_accel: float
    gyro_torque: float
    d_hat: float = 0.0


class _RecursiveController:
    """Shared machinery of the recursive-surface controllers (SAC and RSMC)."""

    name = "recursive"
    uses_observer = False
    adaptive = False

    def __init__(self, surfaces, adaptation=None, inertia=(1.0, 1.0, 1.0), torque_limit=None):
        self.surfaces = tuple(surfaces)
        self.adaptation = adaptation or AdaptationConfig()
        self.inertia = tuple(inertia)
        self.torque_limit = torque_limit
        self.channels = [ControllerChannel() for _ in range(3)]
        self._applied = (0.0, 0.0, 0.0)

    def reset(self, inputs):
        """Initialize every channel on its sliding surface."""
        xi1, xi2 = self.adaptation.xi_init
        self.channels = []
        for inp, gains in zip(inputs, self.surfaces):
            sigma0 = initial_sigma(inp.e, inp.e_dot, gains)
            ch = ControllerChannel(eta=init_eta(sigma0, gains.lam), xi1_hat=xi1, xi2_hat=xi2)
            ch.sigma, ch.s = surface_eval(inp.e, inp.e_dot, 0.0, ch.eta, gains)
            self.channels.append(ch)
        self._applied = (0.0, 0.0, 0.0)

    def control(self, inputs):
        """Torques for the sampled ``inputs``; also refreshes sigma, s, s_dot.

        Inlines :func:`surface_eval`, :func:`equivalent_control` and
        :func:`switching_control`.
        """
        copysign = math.copysign
        u0s, u1s, parts = [], [], []
        for inp, g, ch, inertia in zip(inputs, self.surfaces, self.channels, self.inertia):
            e, e_dot = inp.e, inp.e_dot
            term_rate = copysign(abs(e) ** g.alpha, e)
            sigma = e_dot + g.k_lin * e + g.k_term * ch.term_integral
            ch.sigma = sigma
            ch.s = sigma + g.lam * ch.eta
            eta_dot = copysign(abs(sigma) ** g.beta, sigma)
            d_hat = inp.d_hat if self.uses_observer else 0.0
            # s_dot = accel_error + nominal
            nominal = g.k_lin * e_dot + g.k_term * term_rate + g.lam * eta_dot
            u0s.append(inertia * (inp.ref_accel - nominal - d_hat) - inp.gyro_torque)
            u1s.append(-inertia * self._switching(ch))
            parts.append((term_rate, d_hat, nominal, eta_dot))
        u = _clamp((u0s[0] + u1s[0], u0s[1] + u1s[1], u0s[2] + u1s[2]), self.torque_limit)
        held = []
        for inp, ch, inertia, torque, (term_rate, d_hat, nominal, eta_dot) in zip(
            inputs, self.channels, self.inertia, u, parts
        ):
            accel_error = (inp.gyro_torque + torque) / inertia + d_hat - inp.ref_accel
            ch.s_dot = accel_error + nominal
            held.append((inp.e, term_rate, ch.s_dot, eta_dot))
        self._held = held
        return u, {"u0": tuple(u0s), "u1": tuple(u1s)}

    def _switching(self, ch):
        return ch.xi1_hat * ch.s + ch.xi2_hat * ch.sw_integral

    def advance(self, inputs, step):
        """Integrate the channel states over one step with the inputs held.

        With held inputs the terminal integral grows linearly, so every other
        state is a quadrature in time; RK4 then reduces to Simpson's rule.
        Must follow :meth:`control` for the same inputs.
        """
        copysign, sqrt = math.copysign, math.sqrt
        config = self.adaptation
        boundary = config.sat_delta
        k = config.adaptation_sign * config.rho
        h6 = step / 6.0
        for g, ch, (e, term_rate, s_dot0, eta_dot0) in zip(self.surfaces, self.channels, self._held):
            gate = self.adaptive and abs(e) > config.epsilon
            sigma0 = ch.sigma
            dsigma = g.k_term * term_rate * step
            lam, beta = g.lam, g.beta
            # s_dot(tau) = s_dot0 + lam * (eta_dot(tau) - eta_dot0)
            eta_sum = sw_sum = r1_sum = r2_sum = 0.0
            for frac, weight in ((0.0, 1.0), (0.5, 4.0), (1.0, 1.0)):
                if frac == 0.0:
                    eta_dot, s_dot = eta_dot0, s_dot0
                else:
                    sigma = sigma0 + frac * dsigma
                    eta_dot = copysign(abs(sigma) ** beta, sigma)
                    s_dot = s_dot0 + lam * (eta_dot - eta_dot0)
                eta_sum += weight * eta_dot
                mag = sqrt(abs(s_dot))
                if s_dot > boundary:
                    sw_sum += weight * mag
                elif s_dot < -boundary:
                    sw_sum -= weight * mag
                else:
                    sw_sum += weight * mag * s_dot / boundary
                if gate:
                    r1_sum += weight * s_dot * s_dot
                    r2_sum += weight * mag
            ch.term_integral += step * term_rate
            ch.eta += h6 * eta_sum
            ch.sw_integral += h6 * sw_sum
            if gate:
                ch.xi1_hat += h6 * k * r1_sum
                ch.xi2_hat += h6 * k * r2_sum


class SACController(_RecursiveController):
    """Observer-based adaptive recursive sliding-mode controller."""

    name = "sac"
    uses_observer = True
    adaptive = True


class RSMCController(_RecursiveController):
    """Recursive sliding mode with fixed switching gains and no disturbance feedforward.

    The switching term is a reaching law on the recursive surface,
    ``xi1*s + xi2*sat(s/sat_delta)``, or ``xi2*sign(s)`` with
    ``switching="sign"``. Without a disturbance estimate the model-based
    ``s_dot`` equals ``u1/I``, so the integral form used by SAC would only
    wash out its own output.
    """

    name = "rsmc"

    def __init__(self, surfaces, adaptation=None, inertia=(1.0, 1.0, 1.0), torque_limit=None, switching="sat"):
        if switching not in ("sat", "sign"):
            raise ValueError(f"unknown switching {switching!r}")
        super().__init__(surfaces, adaptation, inertia, torque_limit)
        self.switching = switching

    def _switching(self, ch):
        if self.switching == "sat":
            return ch.xi1_hat * ch.s + ch.xi2_hat * sat(ch.s, self.adaptation.sat_delta)
        return ch.xi1_hat * ch.s + ch.xi2_hat * sign(ch.s)


class FTSMCController:
    """Fast terminal sliding mode with a constant-gain reaching law.

    ``u = u_eq - I*(k_s*sigma + k_w*sat(sigma/boundary))``; no recursion, no observer.
    """

    name = "ftsmc"
    uses_observer = False

    def __init__(self, surfaces, k_s=2.0, k_w=0.5, boundary=0.01, inertia=(1.0, 1.0, 1.0), torque_limit=None):
        self.surfaces = tuple(surfaces)
        self.k_s = k_s
        self.k_w = k_w
        self.boundary = boundary
        self.inertia = tuple(inertia)
        self.torque_limit = torque_limit
        self.channels = [ControllerChannel() for _ in range(3)]

    def reset(self, inputs):
        self.channels = [ControllerChannel(xi1_hat=0.0, xi2_hat=0.0) for _ in range(3)]
        for inp, gains, ch in zip(inputs, self.surfaces, self.channels):
            ch.sigma, ch.s = surface_eval(inp.e, inp.e_dot, 0.0, 0.0, gains)

    def control(self, inputs):
        u0s, u1s = [], []
        for inp, gains, ch, inertia in zip(inputs, self.surfaces, self.channels, self.inertia):
            ch.sigma, _ = surface_eval(inp.e, inp.e_dot, ch.term_integral, 0.0, gains)
            ch.s = ch.sigma
            u0 = (
                inertia * (inp.ref_accel - gains.k_lin * inp.e_dot - gains.k_term * sig(inp.e, gains.alpha))
                - inp.gyro_torque
            )
            u1 = -inertia * (self.k_s * ch.sigma + self.k_w * sat(ch.sigma, self.boundary))
            ch.s_dot = -(self.k_s * ch.sigma + self.k_w * sat(ch.sigma, self.boundary))
            u0s.append(u0)
            u1s.append(u1)
        u = _clamp(tuple(a + b for a, b in zip(u0s, u1s)), self.torque_limit)
        return u, {"u0": tuple(u0s), "u1": tuple(u1s)}

    def advance(self, inputs, step):
        for inp, gains, ch in zip(inputs, self.surfaces, self.channels):
            ch.term_integral += step * sig(inp.e, gains.alpha)


def sac_control(controller, inputs):
    """Virtual torques ``(u1, u2, u3)`` of a SAC instance for sampled inputs."""
    return controller.control(inputs)[0]


def rsmc_control(controller, inputs):
    return controller.control(inputs)[0]


def ftsmc_control(controller, inputs):
    return controller.control(inputs)[0]


# Frozen default gain sets.
SAC_SURFACE = SurfaceGains(k_lin=8.0, k_term=0.3)
FTSMC_SURFACE = SurfaceGains(k_lin=1.7, k_term=0.2)
RSMC_SURFACE = SurfaceGains(k_lin=1.3, k_term=0.2)


@dataclass(frozen=True)
class ControllerConfig:
    """Controller selection and the gain sets of all three controllers."""

    kind: str = "sac"
    sac_surfaces: tuple = field(default_factory=lambda: (SAC_SURFACE,) * 3)
    sac_adaptation: AdaptationConfig = field(default_factory=AdaptationConfig)
    rsmc_surfaces: tuple = field(default_factory=lambda: (RSMC_SURFACE,) * 3)
    rsmc_xi: tuple = (50.0, 20.0)
    rsmc_sat_delta: float = 0.01
    rsmc_switching: str = "sat"
    ftsmc_surfaces: tuple = field(default_factory=lambda: (FTSMC_SURFACE,) * 3)
    ftsmc_k_s: float = 700.0
    ftsmc_k_w: float = 5.0
    ftsmc_boundary: float = 0.01
    torque_limit: tuple | None = None

    def __post_init__(self):
        if self.kind not in ("sac", "ftsmc", "rsmc"):
            raise ValueError(f"unknown controller {self.kind!r}")


def build_controller(config, inertia, kind=None):
    kind = kind or config.kind
    if kind == "sac":
        return SACController(config.sac_surfaces, config.sac_adaptation, inertia, config.torque_limit)
    if kind == "rsmc":
        adaptation = AdaptationConfig(xi_init=tuple(config.rsmc_xi), sat_delta=config.rsmc_sat_delta)
        return RSMCController(
            config.rsmc_surfaces, adaptation, inertia, config.torque_limit, config.rsmc_switching
        )
    if kind == "ftsmc":
        return FTSMCController(
            config.ftsmc_surfaces,
            config.ftsmc_k_s,
            config.ftsmc_k_w,
            config.ftsmc_boundary,
            inertia,
            config.torque_limit,
        )
    raise ValueError(f"unknown controller {kind!r}")
