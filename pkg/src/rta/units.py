"""Unit conversions and angle helpers.

Everything internal is SI (m, m/s, rad). Feet appear only at config and
telemetry boundaries; load factor is dimensionless (g).
"""

import math

M_PER_FT = 0.3048
G_STANDARD = 9.80665  # m/s^2


def ft_to_m(x: float) -> float:
    return x * M_PER_FT


def m_to_ft(x: float) -> float:
    return x / M_PER_FT


def wrap_pi(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.fmod(a, 2.0 * math.pi)
    if a > math.pi:
        a -= 2.0 * math.pi
    elif a <= -math.pi:
        a += 2.0 * math.pi
    return a


def ang_diff(a: float, b: float) -> float:
    """Smallest signed angle a - b, in (-pi, pi]."""
    return wrap_pi(a - b)
