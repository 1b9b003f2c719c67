"""Physical constants and unit conversions."""

import math

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact
FOOT = 0.3048  # m, exact
FOUR_PI = 4.0 * math.pi


def ft_to_m(feet):
    return feet * FOOT


def m_to_ft(meters):
    return meters / FOOT


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(value):
    if value <= 0.0:
        return -math.inf
    return 10.0 * math.log10(value)


def power_sum_dbm(levels_dbm):
    """Incoherent (linear mW) sum of dBm levels; -inf for an empty input."""
    total = 0.0
    for level in levels_dbm:
        if level != -math.inf:
            total += 10.0 ** (level / 10.0)
    return linear_to_db(total)
