"""Shared oracles and grid utilities for the test suite."""

from __future__ import annotations

import math

import numpy as np

from clusterequiv import boundaries as bd

R_GRID = np.linspace(0.02, 4.0, 200)
S_GRID = np.linspace(0.0, 4.0, 200)


def one_sided_limits(f, x: float, h: float = 1e-7) -> tuple[float, float]:
    """Linear extrapolation of ``f`` to ``x`` from the left and from the right."""
    left = 2.0 * f(x - h) - f(x - 2.0 * h)
    right = 2.0 * f(x + h) - f(x + 2.0 * h)
    return left, right


def region_switch_points(s: float, r_values=None):
    """Values of ``r`` (at fixed ``s``) where ``region_of`` changes, located by bisection."""
    r_values = np.linspace(1e-3, 4.0, 2001) if r_values is None else r_values
    regions = [bd.region_of(float(r), s) for r in r_values]
    out = []
    for k in range(len(r_values) - 1):
        if regions[k] != regions[k + 1]:
            lo, hi = float(r_values[k]), float(r_values[k + 1])
            while hi - lo > 1e-13:
                mid = 0.5 * (lo + hi)
                if bd.region_of(mid, s) == regions[k]:
                    lo = mid
                else:
                    hi = mid
            out.append((0.5 * (lo + hi), regions[k], regions[k + 1]))
    return out


def boundary_continuity_gaps(s_values, h: float = 1e-7) -> list[float]:
    gaps = []
    for s in s_values:
        for r0, _, _ in region_switch_points(float(s)):
            if r0 - 2 * h <= 0:
                continue
            left, right = one_sided_limits(lambda r: bd.beta_star_general(r, float(s)), r0, h)
            gaps.append(abs(left - right))
    return gaps


def t_star_property_violations(r_values=R_GRID, s_values=S_GRID) -> list[tuple]:
    bad = []
    for r in r_values:
        for s in s_values:
            r, s = float(r), float(s)
            a = bd.min_signal(r, s)
            t = bd.t_star(r, s)
            checks = (
                t <= math.sqrt(2 * a) - a + 1e-12,
                not (a > 0.5) or t < a,
                not (a < 0.5) or t > a,
                not (t >= 3 * a) or a <= 0.125,
            )
            for k, ok in enumerate(checks, start=1):
                if not ok:
                    bad.append((r, s, k))
    return bad


def dense_hc_sup(values, surv_fn, lo, hi, extra=(), num=200_001, use_q=True, upper=True):
    """Brute-force HC supremum: evaluate on a dense grid plus points just beside each sample."""
    v = np.sort(np.asarray(values, dtype=float))
    m = v.size
    pts = [np.linspace(lo, hi, num)]
    span = max(1.0, float(np.max(np.abs(v))))
    for eps in (1e-9 * span, 0.0, -1e-9 * span):
        pts.append(v + eps)
    pts.append(np.asarray(extra, dtype=float))
    t = np.concatenate(pts)
    t = t[(t >= lo) & (t <= hi)]
    s = np.asarray(surv_fn(t), dtype=float)
    keep = (s > 0) & (s < 1) if use_q else s > 0
    t, s = t[keep], s[keep]
    p = s if upper else 1 - s
    count = m - np.searchsorted(v, t, side="right") if upper else np.searchsorted(v, t, side="right")
    den = np.sqrt(m * s * (1 - s)) if use_q else np.sqrt(m * p)
    return float(np.max(np.abs(count - m * p) / den))
