"""Compiled inner loops: the plant RK4 step without aerodynamics and the
sign-mode observer update.

The plant step mirrors :func:`tiltsac.rigid_body.stage_rates`; the simulator
falls back to that closure when aerodynamic coefficients are set or numba is
unavailable. Without numba every function here runs as plain Python.
"""

import math

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

HAVE_NUMBA = njit is not None


def _rates(x, h, k, wrench, consts, dist, out):
    """Write the twelve derivatives at ``x + h*k`` into ``out``."""
    u = x[0] + h * k[0]
    v = x[1] + h * k[1]
    w = x[2] + h * k[2]
    p = x[3] + h * k[3]
    q = x[4] + h * k[4]
    r = x[5] + h * k[5]
    phi = x[6] + h * k[6]
    theta = x[7] + h * k[7]
    psi = x[8] + h * k[8]
    m, g, Ix, Iy, Iz = consts[0], consts[1], consts[2], consts[3], consts[4]
    nac_moment, nac_inertia, delta, delta_acc, pitch_limit = (
        consts[5], consts[6], consts[7], consts[8], consts[9]
    )
    if not -pitch_limit < theta < pitch_limit:
        return False
    sph, cph = math.sin(phi), math.cos(phi)
    sth, cth = math.sin(theta), math.cos(theta)
    sps, cps = math.sin(psi), math.cos(psi)
    tth = sth / cth
    mg = m * g
    tx, ty, tz = wrench[3], wrench[4], wrench[5]
    if nac_moment != 0.0 or nac_inertia != 0.0:
        ax, az = math.sin(delta), 1.0 - math.cos(delta)
        kn = nac_moment * g
        gx, gy, gz = -sth, cth * sph, cth * cph
        tx += kn * (-az * gy)
        ty += kn * (az * gx - ax * gz) - nac_inertia * delta_acc
        tz += kn * (ax * gy)
    out[0] = r * v - q * w + (wrench[0] - sth * mg) / m
    out[1] = p * w - r * u + (wrench[1] + cth * sph * mg) / m
    out[2] = q * u - p * v + (wrench[2] + cth * cph * mg) / m
    out[3] = (Iy - Iz) / Ix * q * r + tx / Ix + dist[0]
    out[4] = (Iz - Ix) / Iy * p * r + ty / Iy + dist[1]
    out[5] = (Ix - Iy) / Iz * p * q + tz / Iz + dist[2]
    out[6] = p + sph * tth * q + cph * tth * r
    out[7] = cph * q - sph * r
    out[8] = (sph * q + cph * r) / cth
    out[9] = cth * cps * u + (sph * sth * cps - cph * sps) * v + (sph * sps + cph * sth * cps) * w
    out[10] = cth * sps * u + (sph * sth * sps + cph * cps) * v + (-sph * cps + cph * sth * sps) * w
    out[11] = sth * u - sph * cth * v - cph * cth * w
    return True


def _rk4(x, h, wrench, consts, d0, dm, d1, out):
    """One RK4 step into ``out``; False if a stage hits the pitch singularity."""
    zero = np.zeros(12)
    k1, k2, k3, k4 = np.empty(12), np.empty(12), np.empty(12), np.empty(12)
    if not _rates(x, 0.0, zero, wrench, consts, d0, k1):
        return False
    if not _rates(x, 0.5 * h, k1, wrench, consts, dm, k2):
        return False
    if not _rates(x, 0.5 * h, k2, wrench, consts, dm, k3):
        return False
    if not _rates(x, h, k3, wrench, consts, d1, k4):
        return False
    h6 = h / 6.0
    for i in range(12):
        out[i] = x[i] + h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return True


def observer_sign_step(x1, x2, d, h1, h2, h3, measured, accel, h):
    """Implicit observer step with ``sign`` switching; see
    :func:`tiltsac.steso.implicit_update`."""
    c = x1 - measured + h * x2 + h * h * (d + accel)
    a, b, top = h * h1, h * h * h2, h * h * h * h3
    if abs(c) <= top:
        err, switch = 0.0, c / top
    else:
        # positive root of z**3 + a*z**2 + b*z = rhs; each term alone bounds
        # z from above and Newton from the right is monotone
        rhs = abs(c) - top
        z = rhs ** (1.0 / 3.0)
        if b > 0.0:
            z = min(z, rhs / b)
        if a > 0.0:
            z = min(z, math.sqrt(rhs / a))
        for _ in range(100):
            f = z * z * z + a * z * z + b * z - rhs
            z_next = z - f / (3.0 * z * z + 2.0 * a * z + b)
            if abs(z_next - z) <= 4e-16 * z:
                z = z_next
                break
            z = z_next
        err, switch = math.copysign(z * z * z, c), math.copysign(1.0, c)
    mag = abs(err)
    d_next = d - h * h3 * switch
    x2_next = x2 + h * (d_next + accel - h2 * math.copysign(mag ** (1.0 / 3.0), err))
    x1_next = x1 + h * (x2_next - h1 * math.copysign(mag ** (2.0 / 3.0), err))
    return x1_next, x2_next, d_next


if HAVE_NUMBA:
    _rates = njit(cache=True)(_rates)
    _rk4 = njit(cache=True)(_rk4)
    observer_sign_step = njit(cache=True)(observer_sign_step)


def plant_rk4(x, h, wrench, consts, d0, dm, d1):
    """Advance the flat state ``x`` by one RK4 step.

    ``wrench`` is the held body force and moment (rotor plus surfaces),
    ``consts`` is ``(m, g, Ix, Iy, Iz, nacelle_moment, nacelle_inertia, delta,
    delta_accel, pitch_limit)``; all arguments are float sequences. Returns the
    new state as a list, or ``None`` when a stage reaches the pitch singularity.
    """
    out = np.empty(12)
    ok = _rk4(
        tuple(x), h, tuple(wrench), tuple(consts), tuple(d0), tuple(dm), tuple(d1), out
    )
    return out.tolist() if ok else None
