"""Quick invariant suite behind ``tiltsac check``.

Each check returns a :class:`CheckResult`; none takes more than a few
seconds. The full acceptance suite lives in the test directory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .allocation import allocate, is_singular, mixer_apply, mixer_determinant, mixer_matrix
from .arsmc import ChannelInputs, SACController
from .integrate import rk4_step
from .report import max_rms
from .rigid_body import BodyState, RotorSet, VehicleParams, angular_momentum, state_derivative
from .simkernel import PhaseWindows, ScenarioConfig, run
from .steso import run_open_loop


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_surface_start(seed=0, trials=100):
    rng = np.random.default_rng(seed)
    ctrl = SACController(ScenarioConfig().controller.sac_surfaces)
    worst = 0.0
    for _ in range(trials):
        e = rng.uniform(-0.3, 0.3, 3)
        e_dot = rng.uniform(-1.0, 1.0, 3)
        ctrl.reset([ChannelInputs(a, b, 0.0, 0.0) for a, b in zip(e, e_dot)])
        worst = max(worst, max(abs(ch.s) for ch in ctrl.channels))
    return CheckResult("surface_start", bool(worst <= 1e-12), f"max |s(0)| = {worst:.2e}")


def check_mixer(seed=0, trials=1000):
    rng = np.random.default_rng(seed)
    worst_det = worst_trip = 0.0
    for _ in range(trials):
        params = VehicleParams(
            kt=rng.uniform(1e-6, 1e-4), kd=rng.uniform(1e-8, 1e-6), d_arm=rng.uniform(0.2, 1.0)
        )
        delta = rng.uniform(0.05, 1.5)
        closed = mixer_determinant(delta, params)
        brute = np.linalg.det(mixer_matrix(delta, params))
        worst_det = max(worst_det, abs(brute - closed) / abs(closed))
        squared = rng.uniform(1e5, 1e6, 4)
        command = mixer_apply(squared, delta, params)
        got = allocate(command, delta, params).achieved
        worst_trip = max(worst_trip, max(abs(g - c) for g, c in zip(got, command)) / max(map(abs, command)))
    singular = is_singular(math.pi / 2, VehicleParams())
    ok = bool(worst_det < 1e-10 and worst_trip < 1e-9 and singular)
    return CheckResult(
        "mixer",
        ok,
        f"det rel err {worst_det:.1e}, round trip rel err {worst_trip:.1e}, singular at 90 deg: {singular}",
    )


def check_observer():
    worst = 0.0
    for d in (-5.0, -1.0, 1.0, 5.0):
        t, plant, est = run_open_loop(lambda _t, d=d: d, 3.0)
        tail = t >= 2.0
        worst = max(worst, float(np.max(np.abs(est[tail, 2] - plant[tail, 2]))))
    return CheckResult("observer", bool(worst < 1e-2), f"max |d error| after 2 s = {worst:.1e}")


def check_metrics(seed=0):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=501)
    fast = max_rms(values)
    slow_max = max(abs(v) for v in values)
    slow_rms = math.sqrt(math.fsum(v * v for v in values) / len(values))
    ok = bool(fast[0] == slow_max and abs(fast[1] - slow_rms) <= 1e-14 * slow_rms and fast[0] >= fast[1])
    return CheckResult("metrics", ok, f"MAX {fast[0]:.6f}, RMS {fast[1]:.6f}")


def check_determinism(duration=1.0):
    config = ScenarioConfig(duration=duration, windows=PhaseWindows((0.0, 0.5), (0.5, duration)))
    a, b = run(config).as_array(), run(config).as_array()
    same = bool(a.shape == b.shape and a.tobytes() == b.tobytes())
    return CheckResult("determinism", same, f"{len(a)} rows compared byte for byte")


def check_momentum(duration=24.0, step=1e-3):
    params = VehicleParams(nacelle_moment=0.0)
    rotors = RotorSet((0.0, 0.0, 0.0, 0.0), 0.0)
    state = BodyState(p=0.5, q=0.02, r=0.01)
    x = state.to_array()
    h0 = np.linalg.norm(angular_momentum(state, params))

    def f(_t, y):
        return state_derivative(BodyState.from_array(y), rotors, params).to_array()

    for k in range(int(round(duration / step))):
        x = rk4_step(f, k * step, x, step)
    drift = abs(np.linalg.norm(angular_momentum(BodyState.from_array(x), params)) - h0) / h0
    return CheckResult("momentum", bool(drift < 1e-8), f"relative drift {drift:.1e} over {duration:g} s")


ALL_CHECKS = (
    check_surface_start,
    check_mixer,
    check_observer,
    check_metrics,
    check_determinism,
)


def run_checks(include_slow=False):
    checks = ALL_CHECKS + ((check_momentum,) if include_slow else ())
    return [check() for check in checks]
