"""Exact integer and rational arithmetic helpers.

All simulated quantities are integer nanoseconds; rates are `fractions.Fraction`.
Rounding conventions are fixed here so every module rounds identically:
integer halvings (and general scalings) round half away from zero.
"""

from __future__ import annotations

import math
from fractions import Fraction


def div_round_half_away(num: int, den: int) -> int:
    """num/den rounded half away from zero. den must be positive."""
    if den <= 0:
        raise ValueError(f"denominator must be positive, got {den}")
    if num >= 0:
        return (2 * num + den) // (2 * den)
    return -((-2 * num + den) // (2 * den))


def halve_round_half_away(num: int) -> int:
    """num/2 rounded half away from zero."""
    return div_round_half_away(num, 2)


def scale_round_half_away(value: int, factor: Fraction) -> int:
    """value*factor rounded half away from zero, computed exactly."""
    return div_round_half_away(value * factor.numerator, factor.denominator)


def ceil_frac(x: Fraction) -> int:
    return math.ceil(x)


def floor_frac(x: Fraction) -> int:
    return math.floor(x)


def sgn(x: int) -> int:
    return (x > 0) - (x < 0)
