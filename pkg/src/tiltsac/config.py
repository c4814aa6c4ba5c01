"""YAML scenario files.

A scenario file is a YAML mapping tagged ``schema: tiltsac/scenario-v1``.
Every section is optional; omitted keys keep the defaults of
:class:`~tiltsac.simkernel.ScenarioConfig`. Angles in the file are degrees,
tilt rates deg/s and deg/s^2, everything else SI.

Sections and keys::

    schema: tiltsac/scenario-v1
    duration: 24.0            # s
    step: 0.001               # s
    thrust_policy: rotor_share  # or hover
    det_floor: 1.0e-9
    noise_std: 0.0            # rad, additive on measured angles and rates
    seed: 0
    initial_deg: [0.57, 0.57, 1.14]   # roll, pitch, yaw
    reference_deg: [0.0, 0.0, 0.0]
    controller:
      kind: sac               # sac | ftsmc | rsmc
      torque_limit: null      # or [N*m, N*m, N*m]
      sac: {k_lin, k_term, alpha, lam, beta}        # scalars or 3-lists
      adaptation: {rho, epsilon, sat_delta, xi_init, adaptation_sign}
      ftsmc: {k_lin, k_term, alpha, lam, beta, k_s, k_w, boundary}
      rsmc: {k_lin, k_term, alpha, lam, beta, xi, sat_delta, switching}
    observer: {h1, h2, h3, switching, boundary}
    tilt:                     # null disables tilting
      conversion: {t0, start_deg, end_deg, accel, rate}
      reconversion: {t0, start_deg, end_deg, accel, rate}
    disturbance:
      kind: none              # none | burst | sine | constant
      # sine: amplitude, omega, t_on, t_off, axes; constant: values
    vehicle: {m, g, Ix, Iy, Iz, kt, kd, d_arm, nacelle_moment, ...}
    windows: {conversion: [3, 13], reconversion: [20, 22]}
"""

from __future__ import annotations

import dataclasses
import math
from importlib import resources

import yaml

from .allocation import TiltSchedule, TiltTimeline
from .arsmc import AdaptationConfig, AttitudeReference, SurfaceGains
from .rigid_body import BodyState
from .simkernel import (
    ConstantDisturbance,
    PhaseWindows,
    ScenarioConfig,
    WindowedSine,
    ZeroDisturbance,
    burst_disturbance,
)

SCHEMA = "tiltsac/scenario-v1"

_SURFACE_KEYS = ("k_lin", "k_term", "alpha", "lam", "beta")
_TOP_KEYS = {
    "schema", "duration", "step", "thrust_policy", "det_floor", "noise_std", "seed",
    "initial_deg", "reference_deg", "controller", "observer", "tilt", "disturbance",
    "vehicle", "windows",
}


class ConfigError(ValueError):
    """A scenario file is malformed or holds invalid values."""


def _check_keys(section, allowed, where):
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")


def _mapping(value, where):
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(value).__name__}")
    return value


def _triple(value, where):
    if isinstance(value, (int, float)):
        return (float(value),) * 3
    if isinstance(value, (list, tuple)) and len(value) == 3:
        return tuple(float(v) for v in value)
    raise ConfigError(f"{where}: expected a number or a list of three numbers")


def _surfaces(section, base, where):
    """Per-axis SurfaceGains from scalar or 3-list entries over ``base``."""
    per_axis = [dataclasses.asdict(g) for g in base]
    for key in _SURFACE_KEYS:
        if key in section:
            for axis, v in enumerate(_triple(section[key], f"{where}.{key}")):
                per_axis[axis][key] = v
    return tuple(SurfaceGains(**kw) for kw in per_axis)


def _controller(section, base):
    section = _mapping(section, "controller")
    _check_keys(section, {"kind", "torque_limit", "sac", "adaptation", "ftsmc", "rsmc"}, "controller")
    kw = {}
    if "kind" in section:
        kw["kind"] = section["kind"]
    if "torque_limit" in section:
        limit = section["torque_limit"]
        kw["torque_limit"] = None if limit is None else _triple(limit, "controller.torque_limit")

    sac = _mapping(section.get("sac"), "controller.sac")
    _check_keys(sac, _SURFACE_KEYS, "controller.sac")
    kw["sac_surfaces"] = _surfaces(sac, base.sac_surfaces, "controller.sac")

    adaptation = _mapping(section.get("adaptation"), "controller.adaptation")
    _check_keys(adaptation, [f.name for f in dataclasses.fields(AdaptationConfig)], "controller.adaptation")
    if "xi_init" in adaptation:
        adaptation = dict(adaptation, xi_init=tuple(adaptation["xi_init"]))
    kw["sac_adaptation"] = dataclasses.replace(base.sac_adaptation, **adaptation)

    ftsmc = _mapping(section.get("ftsmc"), "controller.ftsmc")
    _check_keys(ftsmc, _SURFACE_KEYS + ("k_s", "k_w", "boundary"), "controller.ftsmc")
    kw["ftsmc_surfaces"] = _surfaces(ftsmc, base.ftsmc_surfaces, "controller.ftsmc")
    for key in ("k_s", "k_w", "boundary"):
        if key in ftsmc:
            kw[f"ftsmc_{key}"] = float(ftsmc[key])

    rsmc = _mapping(section.get("rsmc"), "controller.rsmc")
    _check_keys(rsmc, _SURFACE_KEYS + ("xi", "sat_delta", "switching"), "controller.rsmc")
    kw["rsmc_surfaces"] = _surfaces(rsmc, base.rsmc_surfaces, "controller.rsmc")
    if "xi" in rsmc:
        kw["rsmc_xi"] = tuple(float(v) for v in rsmc["xi"])
    if "sat_delta" in rsmc:
        kw["rsmc_sat_delta"] = float(rsmc["sat_delta"])
    if "switching" in rsmc:
        kw["rsmc_switching"] = rsmc["switching"]
    return dataclasses.replace(base, **kw)


def _schedule(section, base, where):
    section = _mapping(section, where)
    _check_keys(section, {"t0", "start_deg", "end_deg", "accel", "rate"}, where)
    return TiltSchedule(
        t0=float(section.get("t0", base.t0)),
        start=math.radians(section["start_deg"]) if "start_deg" in section else base.start,
        end=math.radians(section["end_deg"]) if "end_deg" in section else base.end,
        accel=float(section.get("accel", base.accel)),
        rate=float(section.get("rate", base.rate)),
    )


def _disturbance(section):
    section = _mapping(section, "disturbance")
    kind = section.get("kind", "none")
    rest = {k: v for k, v in section.items() if k != "kind"}
    if kind == "none":
        _check_keys(rest, (), "disturbance")
        return ZeroDisturbance()
    if kind == "burst":
        _check_keys(rest, (), "disturbance")
        return burst_disturbance()
    if kind == "sine":
        _check_keys(rest, {"amplitude", "omega", "t_on", "t_off", "axes"}, "disturbance")
        if "axes" in rest:
            rest["axes"] = _triple(rest["axes"], "disturbance.axes")
        return WindowedSine(**rest)
    if kind == "constant":
        _check_keys(rest, {"values"}, "disturbance")
        return ConstantDisturbance(_triple(rest.get("values", 0.0), "disturbance.values"))
    raise ConfigError(f"disturbance: unknown kind {kind!r}")


def _angles(value, where):
    return tuple(math.radians(v) for v in _triple(value, where))


def scenario_from_dict(data, base=None):
    """Build a :class:`ScenarioConfig` from parsed YAML.

    Raises
    ------
    ConfigError
        On a missing or wrong schema tag, unknown keys or invalid values.
    """
    if not isinstance(data, dict):
        raise ConfigError("scenario file must hold a mapping")
    if data.get("schema") != SCHEMA:
        raise ConfigError(f"schema must be {SCHEMA!r}, got {data.get('schema')!r}")
    _check_keys(data, _TOP_KEYS, "scenario")
    base = base or ScenarioConfig()
    try:
        kw = {}
        for key in ("duration", "step", "det_floor", "noise_std"):
            if key in data:
                kw[key] = float(data[key])
        if "seed" in data:
            kw["seed"] = int(data["seed"])
        if "thrust_policy" in data:
            kw["thrust_policy"] = data["thrust_policy"]
        if "initial_deg" in data:
            phi, theta, psi = _angles(data["initial_deg"], "initial_deg")
            kw["initial"] = BodyState(phi=phi, theta=theta, psi=psi)
        if "reference_deg" in data:
            kw["reference"] = AttitudeReference(angles=_angles(data["reference_deg"], "reference_deg"))
        kw["controller"] = _controller(data.get("controller"), base.controller)
        if "observer" in data:
            kw["observer"] = dataclasses.replace(base.observer, **_mapping(data["observer"], "observer"))
        if "tilt" in data:
            tilt = data["tilt"]
            if tilt is None:
                kw["timeline"] = None
            else:
                tilt = _mapping(tilt, "tilt")
                _check_keys(tilt, {"conversion", "reconversion"}, "tilt")
                timeline = base.timeline or ScenarioConfig().timeline
                kw["timeline"] = TiltTimeline(
                    _schedule(tilt.get("conversion"), timeline.conversion, "tilt.conversion"),
                    _schedule(tilt.get("reconversion"), timeline.reconversion, "tilt.reconversion"),
                )
        if "disturbance" in data:
            kw["disturbance"] = _disturbance(data["disturbance"])
        if "vehicle" in data:
            vehicle = dict(_mapping(data["vehicle"], "vehicle"))
            if "surface_authority" in vehicle:
                vehicle["surface_authority"] = _triple(vehicle["surface_authority"], "vehicle.surface_authority")
            kw["vehicle"] = dataclasses.replace(base.vehicle, **vehicle)
        if "windows" in data:
            windows = _mapping(data["windows"], "windows")
            _check_keys(windows, {"conversion", "reconversion"}, "windows")
            kw["windows"] = PhaseWindows(
                **{k: tuple(float(x) for x in v) for k, v in windows.items()}
            )
        return dataclasses.replace(base, **kw)
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path):
    """Read a scenario file.

    Raises
    ------
    ConfigError
        On YAML syntax errors or invalid content.
    OSError
        When the file cannot be read.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return scenario_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def default_scenario_text():
    """Contents of the shipped default scenario file."""
    return resources.files("tiltsac").joinpath("data/default_scenario.yaml").read_text(encoding="utf-8")


def load_default_scenario():
    return scenario_from_dict(yaml.safe_load(default_scenario_text()))
