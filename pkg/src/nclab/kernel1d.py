"""Closed-form 1D interactions for the kernel |x - y|^(-1-s).

For J = (a, b) left of I = (c, d) the double integral is

    L(I, J) = [f(c-a) - f(c-b) - f(d-a) + f(d-b)] / (s (1 - s)),   f(t) = t^(1-s),

and half-lines are handled by the limiting forms, never by inf - inf.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Domain1D, Interval, IntervalSet


class DivergentInteraction(ArithmeticError):
    """The requested interaction integral is infinite."""


def check_order(s: float) -> float:
    s = float(s)
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s must lie in (0, 1), got {s}")
    return s


def _incr(s: float, x: float, t: float) -> float:
    """f(x + t) - f(x) for x, t >= 0, without cancellation for small t / x."""
    if t == 0.0:
        return 0.0
    if x == 0.0:
        return t ** (1.0 - s)
    return x ** (1.0 - s) * math.expm1((1.0 - s) * math.log1p(t / x))


def l_interval(s: float, I: Interval, J: Interval) -> float:
    """L^s(I, J) for intervals with disjoint interiors."""
    s = check_order(s)
    if I.empty or J.empty:
        return 0.0
    if I.lo < J.lo:
        I, J = J, I
    # now J starts first; J must end before I starts
    if J.hi > I.lo:
        raise ValueError(f"intervals overlap: ({J.lo}, {J.hi}) and ({I.lo}, {I.hi})")
    a, b, c, d = J.lo, J.hi, I.lo, I.hi
    gap = c - b
    lj, li = b - a, d - c
    if math.isinf(a) and math.isinf(d):
        raise DivergentInteraction("interaction of two opposite half-lines diverges")
    if math.isinf(a):
        val = _incr(s, gap, li)
    elif math.isinf(d):
        val = _incr(s, gap, lj)
    else:
        val = _incr(s, gap, lj) - _incr(s, gap + li, lj)
    return max(val, 0.0) / (s * (1.0 - s))


def l_sets_1d(s: float, A: IntervalSet, B: IntervalSet) -> float:
    """Bilinear extension of :func:`l_interval` over components."""
    terms = [l_interval(s, I, J) for I in A for J in B]
    return math.fsum(terms)


def per_s_omega_1d(s: float, om: Domain1D, A: IntervalSet, B: IntervalSet) -> float:
    """Relative interaction Per^s_Omega(A, B): all A x B pairs except those with both points outside omega."""
    inside, outside = om.as_set, om.exterior
    Ai, Ao = A.intersect(inside), A.intersect(outside)
    Bi, Bo = B.intersect(inside), B.intersect(outside)
    return math.fsum([l_sets_1d(s, Ai, Bi), l_sets_1d(s, Ai, Bo), l_sets_1d(s, Ao, Bi)])


def per_s_1d(s: float, om: Domain1D, E: IntervalSet) -> float:
    return per_s_omega_1d(s, om, E, E.complement())


# ---------------------------------------------------------------------------
# vectorised form used by the exhaustive minimizer
# ---------------------------------------------------------------------------


def _incr_v(s: float, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        safe = np.where(x > 0, x, 1.0)
        out = safe ** (1.0 - s) * np.expm1((1.0 - s) * np.log1p(t / safe))
    out = np.where(x > 0, out, t ** (1.0 - s))
    return np.where(t > 0, out, 0.0)


def l_interval_v(s: float, a, b, c, d) -> np.ndarray:
    """Vectorised L for J = (a, b) left of I = (c, d); a may be -inf, d may be +inf.

    Empty intervals give 0.  Both infinite at once is not allowed (checked).
    """
    a, b, c, d = (np.asarray(v, dtype=float) for v in (a, b, c, d))
    a, b, c, d = np.broadcast_arrays(a, b, c, d)
    left_inf, right_inf = np.isinf(a), np.isinf(d)
    if (left_inf & right_inf & (b > a) & (d > c)).any():
        raise DivergentInteraction("interaction of two opposite half-lines diverges")
    gap = c - b
    lj = np.where(left_inf, 0.0, b - a)
    li = np.where(right_inf, 0.0, d - c)
    both = _incr_v(s, gap, lj) - _incr_v(s, gap + li, lj)
    val = np.where(left_inf, _incr_v(s, gap, li), np.where(right_inf, _incr_v(s, gap, lj), both))
    empty = (b <= a) | (d <= c)
    return np.where(empty, 0.0, np.maximum(val, 0.0)) / (s * (1.0 - s))
