"""Odd power and saturation functions shared by the observer and controllers."""

import math


def sign(x):
    if x > 0.0:
        return 1.0
    if x < 0.0:
        return -1.0
    return 0.0


def sig(x, a):
    """``|x|**a * sign(x)``, with ``sig(0, a) == 0``."""
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** a, x)


def sat(x, boundary):
    """Boundary-layer replacement for ``sign``: linear inside ``[-boundary, boundary]``."""
    if x > boundary:
        return 1.0
    if x < -boundary:
        return -1.0
    return x / boundary


def sat_sig(x, a, boundary):
    """``|x|**a * sat(x)``; the smoothed form of ``sig`` used in switching laws."""
    if x == 0.0:
        return 0.0
    return abs(x) ** a * sat(x, boundary)
