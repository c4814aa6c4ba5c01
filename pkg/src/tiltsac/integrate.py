"""Classical fixed-step fourth-order Runge-Kutta."""

import numpy as np


def rk4_step(f, t, y, h):
    """Advance ``y' = f(t, y)`` by one step of size ``h``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def grid(duration, step):
    """Uniform time grid ``0, step, ..., n*step`` with ``n = round(duration/step)``."""
    n = int(round(duration / step))
    return np.arange(n + 1) * step
