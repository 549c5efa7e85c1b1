"""Detection-boundary functions of the (r, beta) and (r, s, beta) phase diagrams."""

from __future__ import annotations

import math
from enum import IntEnum

from .numerics import bisect_root

__all__ = [
    "RegionId",
    "min_signal",
    "beta_idj",
    "beta_bar_equal",
    "beta_star_equal",
    "beta_bar_general",
    "beta_star_general",
    "region_of",
    "t_star",
    "root_of_s",
    "exact_equality_detectable",
]


class RegionId(IntEnum):
    """Branches of the joint detection boundary, in the order they are tested."""

    SMALL_SIGNAL_UNBALANCED = 1
    SMALL_SIGNAL_BALANCED = 2
    INTERIOR = 3
    EXACT_TAIL = 4
    SATURATED = 5


def _check(r: float, s: float = 0.0) -> None:
    if not (r > 0 and math.isfinite(r)):
        raise ValueError(f"r must be positive and finite, got {r}")
    if not (s >= 0 and math.isfinite(s)):
        raise ValueError(f"s must be nonnegative and finite, got {s}")


def min_signal(r: float, s: float) -> float:
    """``r + s - sqrt(s) sqrt(r + s)``, i.e. ``min(|theta|^2, |eta|^2) / log n``."""
    _check(r, s)
    return r * (r + s) / (r + s + math.sqrt(s) * math.sqrt(r + s))


def beta_idj(r: float) -> float:
    _check(r)
    if r <= 0.25:
        return 0.5 + r
    return 1.0 - max(1.0 - math.sqrt(r), 0.0) ** 2


def beta_bar_equal(r: float) -> float:
    _check(r)
    return min(1.0, 0.5 * (r + 1.0))


def beta_star_equal(r: float) -> float:
    _check(r)
    if r <= 0.2:
        return 0.5 * (1.0 + 3.0 * r)
    return math.sqrt(1.0 - max(1.0 - 2.0 * r, 0.0) ** 2)


def beta_bar_general(r: float, s: float) -> float:
    """Boundary for tests that see only the shared-sign coordinate."""
    _check(r, s)
    gap = math.sqrt(r + s) - math.sqrt(s)
    gap2 = gap * gap
    if 3.0 * s > r and gap2 <= 0.25:
        return 0.5 + r - 2.0 * math.sqrt(s) * gap
    if 3.0 * s <= r and r + s <= 1.0:
        return 0.5 * (1.0 + r - s)
    if r + s > 1.0 and 0.25 < gap2 <= 1.0:
        return r - 2.0 * gap * (math.sqrt(r + s) - 1.0)
    if gap2 > 1.0:
        return 1.0
    raise ArithmeticError(f"(r, s) = ({r}, {s}) matched no branch")


def region_of(r: float, s: float) -> RegionId:
    _check(r, s)
    a = min_signal(r, s)
    if 3.0 * s > r and a <= 0.125:
        return RegionId.SMALL_SIGNAL_UNBALANCED
    if 3.0 * s <= r and 5.0 * r + s <= 1.0:
        return RegionId.SMALL_SIGNAL_BALANCED
    if a > 0.5:
        return RegionId.SATURATED
    if 5.0 * r + s > 1.0 and 0.125 < a:
        if 2.0 * (1.0 - r - s) * a > r:
            return RegionId.INTERIOR
        return RegionId.EXACT_TAIL
    raise ArithmeticError(f"(r, s) = ({r}, {s}) matched no region")


def beta_star_general(r: float, s: float) -> float:
    """Joint detection boundary using both coordinates."""
    region = region_of(r, s)
    a = min_signal(r, s)
    if region is RegionId.SMALL_SIGNAL_UNBALANCED:
        return 0.5 + 2.0 * a
    if region is RegionId.SMALL_SIGNAL_BALANCED:
        return 0.5 * (1.0 + 3.0 * r - s)
    if region is RegionId.INTERIOR:
        return 2.0 * math.sqrt(r) * math.sqrt(1.0 - r - s)
    if region is RegionId.EXACT_TAIL:
        return 2.0 * math.sqrt(2.0 * a) - 2.0 * a
    return 1.0


def t_star(r: float, s: float) -> float:
    """Limit of the scaled maximum null contrast."""
    _check(r, s)
    a = min_signal(r, s)
    big = r + s + math.sqrt(s) * math.sqrt(r + s)
    if 2.0 * (r + s) * big <= r and r + s <= 1.0:
        return math.sqrt(r * (1.0 - r - s))
    return math.sqrt(2.0 * a) - a


def _root_equation(r: float, s: float) -> float:
    return 2.0 * (1.0 - r - s) * min_signal(r, s) - r


def root_of_s(s: float) -> float:
    """Unique ``r`` in ``[3/16, 1/2]`` where the interior and exact-tail branches meet."""
    if not (0.0 < s < 1.0 / 16.0):
        raise ValueError(f"s must lie in (0, 1/16), got {s}")
    return bisect_root(lambda r: _root_equation(r, s), 3.0 / 16.0, 0.5, tol=1e-13)


def exact_equality_detectable(r: float, s: float) -> bool:
    return min_signal(r, s) > 0.5
