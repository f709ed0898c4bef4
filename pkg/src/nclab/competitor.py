"""Strip competitors: relabel a thin band next to a (-1|+1) interface to phase 0.

The energy gap F^s(E) - F^s(E^eps) is computed twice, once as the difference
of two full energies and once from the interaction formulas that only
involve the relabelled set A.  Both must agree; their ratio to eps^(1-s) is
the object of the scaling fit.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernel1d, kernel2d
from .energy import SigmaWeights, alphas_from_sigmas, f_one, f_s, warn_if_triangle
from .geometry import (
    CellRegion,
    Domain1D,
    GeometryError,
    GridPartition2D,
    Interval,
    IntervalSet,
    LipschitzGraph,
    Partition1D,
    strip_region_1d,
    strip_region_2d,
)
from .summation import ordered_map

ONE_D_TOL = 1e-10


@dataclass(frozen=True)
class GapScanRow:
    eps: float
    f_original: float
    f_competitor: float
    gap_direct: float
    gap_formula: float
    below_eps0: bool = True

    CSV_HEADER = ("eps", "f_original", "f_competitor", "gap_direct", "gap_formula", "below_eps0")

    def csv_row(self) -> list:
        return [self.eps, self.f_original, self.f_competitor, self.gap_direct, self.gap_formula, int(self.below_eps0)]


@dataclass(frozen=True)
class EpsilonZeroEstimate:
    value: float
    c0_const: float
    c1_const: float


# ---------------------------------------------------------------------------
# a small set algebra shared by the two geometries
# ---------------------------------------------------------------------------


class _Sets1D:
    def __init__(self, s: float, p: Partition1D, dom: Domain1D):
        self.s, self.p, self.dom = s, p, dom

    def phase(self, i):
        return self.p.phase(i)

    def inside(self):
        return self.dom.as_set

    @staticmethod
    def inter(A, B):
        return A.intersect(B)

    @staticmethod
    def comp(A):
        return A.complement()

    @staticmethod
    def subset(A, B):
        return B.contains(A)

    @staticmethod
    def empty(A):
        return A.empty

    def L(self, A, B):
        return kernel1d.l_sets_1d(self.s, A, B)


class _Sets2D:
    """Cell sets as (frame mask, phases continued beyond the frame)."""

    ALL = frozenset((-1, 0, 1))

    def __init__(self, tab, g: GridPartition2D):
        self.tab, self.g = tab, g

    def phase(self, i):
        return (self.g.phase_mask(i), frozenset((i,)))

    def inside(self):
        return (self.g.omega_mask, frozenset())

    @staticmethod
    def inter(A, B):
        return (A[0] & B[0], A[1] & B[1])

    @classmethod
    def comp(cls, A):
        return (~A[0], cls.ALL - A[1])

    @staticmethod
    def subset(A, B):
        return not (A[0] & ~B[0]).any() and A[1] <= B[1]

    @staticmethod
    def empty(A):
        return not A[0].any() and not A[1]

    def L(self, A, B):
        # A always lies inside omega here, so only B can reach beyond the frame
        if A[1]:
            raise ValueError("the first set must lie inside the frame")
        terms = [kernel2d.l_exterior(self.tab, self.g, A[0], B[1])]
        if A[0].any() and B[0].any():
            terms.append(kernel2d.l_grid(self.tab, A[0], B[0]))
        return math.fsum(terms)


def _as_region_1d(strip) -> IntervalSet:
    if isinstance(strip, Interval):
        return IntervalSet((strip,))
    if isinstance(strip, IntervalSet):
        return strip
    lo, hi = strip
    return IntervalSet.of((lo, hi))


def _as_mask(strip, g: GridPartition2D) -> np.ndarray:
    m = strip.mask if isinstance(strip, CellRegion) else np.asarray(strip, dtype=bool)
    if m.shape != g.frame.shape:
        raise GeometryError(f"strip mask shape {m.shape} does not match frame {g.frame.shape}")
    return m


def _as_set_2d(strip, g: GridPartition2D):
    return (_as_mask(strip, g), frozenset())


def _context(s, cluster, strip, domain, table):
    if isinstance(cluster, Partition1D):
        if not isinstance(domain, Domain1D):
            raise TypeError("a 1D cluster needs a Domain1D")
        return _Sets1D(kernel1d.check_order(s), cluster, domain), _as_region_1d(strip)
    if isinstance(cluster, GridPartition2D):
        tab = table if table is not None else kernel2d.build_offset_table(s, cluster.h)
        return _Sets2D(tab, cluster), _as_set_2d(strip, cluster)
    raise TypeError(f"unsupported cluster type {type(cluster).__name__}")


def _check_strip(ctx, A, two_sided: bool) -> None:
    if not ctx.subset(A, ctx.inside()):
        raise GeometryError("strip leaves omega")
    allowed = ctx.phase(1)
    if two_sided:
        allowed = ctx.comp(ctx.phase(0))
    if not ctx.subset(A, allowed):
        what = "phases -1 and +1" if two_sided else "phase +1"
        raise GeometryError(f"strip is not contained in {what}")


# ---------------------------------------------------------------------------
# construction and gap formulas
# ---------------------------------------------------------------------------


def build_strip_competitor(cluster, strip, domain: Domain1D | None = None, two_sided: bool = False):
    """Relabel ``strip`` to phase 0 after checking it lies in omega and in phase +1.

    With ``two_sided`` the strip may also cover phase -1 cells.
    """
    if isinstance(cluster, Partition1D):
        if not isinstance(domain, Domain1D):
            raise TypeError("a 1D cluster needs a Domain1D")
        A = _as_region_1d(strip)
        _check_strip(_Sets1D(0.5, cluster, domain), A, two_sided)
        return cluster.relabel(A, 0)
    if isinstance(cluster, GridPartition2D):
        A = _as_set_2d(strip, cluster)
        _check_strip(_Sets2D(None, cluster), A, two_sided)
        return cluster.relabel(A[0], 0)
    raise TypeError(f"unsupported cluster type {type(cluster).__name__}")


def gap_formula_one_sided(s, weights, cluster, strip, domain=None, table=None) -> float:
    """-2 alpha_0 L(A, E_-1) + sigma_01 [L(A, E_1^c) - L(A, E_1 minus A)]."""
    sw = SigmaWeights.of(weights)
    ctx, A = _context(s, cluster, strip, domain, table)
    _check_strip(ctx, A, two_sided=False)
    if ctx.empty(A):
        return 0.0
    a0 = alphas_from_sigmas(sw).a_0
    E1, Em1 = ctx.phase(1), ctx.phase(-1)
    bracket = ctx.L(A, ctx.comp(E1)) - ctx.L(A, ctx.inter(E1, ctx.comp(A)))
    return -2.0 * a0 * ctx.L(A, Em1) + sw.s_01 * bracket


def gap_formula_two_sided(s, weights, cluster, A, domain=None, table=None) -> float:
    """Energy drop when a set A inside omega and inside phases +-1 is relabelled to 0."""
    sw = SigmaWeights.of(weights)
    ctx, A = _context(s, cluster, A, domain, table)
    _check_strip(ctx, A, two_sided=True)
    if ctx.empty(A):
        return 0.0
    a0 = alphas_from_sigmas(sw).a_0
    Ac = ctx.comp(A)
    Em1, E1 = ctx.phase(-1), ctx.phase(1)
    Am, Ap = ctx.inter(Em1, A), ctx.inter(E1, A)
    t_m = ctx.L(Am, ctx.comp(Em1)) - ctx.L(Am, ctx.inter(Em1, Ac))
    t_p = ctx.L(Ap, ctx.comp(E1)) - ctx.L(Ap, ctx.inter(E1, Ac))
    cross = math.fsum([ctx.L(Am, Ap), ctx.L(Am, ctx.inter(E1, Ac)), ctx.L(Ap, ctx.inter(Em1, Ac))])
    return math.fsum([sw.s_m10 * t_m, sw.s_01 * t_p, -2.0 * a0 * cross])


def epsilon_zero_1d(s: float, weights, r: float, dist_boundary: float = math.inf) -> EpsilonZeroEstimate:
    """Strip-width threshold below which the 1D gap is at least |alpha_0| C0 eps^(1-s).

    ``r`` is the half-width of the (-1|+1) neighbourhood around the interface
    point, ``dist_boundary`` its distance to the boundary of omega.
    """
    s = kernel1d.check_order(s)
    sw = SigmaWeights.of(weights)
    a0 = alphas_from_sigmas(sw).a_0
    if a0 >= 0:
        raise ValueError(f"epsilon_zero_1d needs alpha_0 < 0, got {a0}")
    if not r > 0:
        raise ValueError(f"r must be positive, got {r}")
    c0 = (2.0 - 2.0 ** (1.0 - s)) / (s * (1.0 - s))
    c1 = 0.0 if math.isinf(r) else 2.0 ** (1.0 + s) / (s * r**s)
    third = math.inf if c1 == 0.0 else (abs(a0) * c0 / (sw.s_01 * c1)) ** (1.0 / s)
    return EpsilonZeroEstimate(min(dist_boundary, r, third), c0, c1)


def interface_radius_1d(p: Partition1D, x0: float) -> float:
    """Largest r with (x0 - r, x0) and (x0, x0 + r) each inside one phase."""
    k = p.breakpoints.index(x0)
    left = p.breakpoints[k - 1] if k > 0 else -math.inf
    right = p.breakpoints[k + 1] if k + 1 < len(p.breakpoints) else math.inf
    return min(x0 - left, right - x0)


def default_eps_ladder(eps0: float, h: float | None = None, count: int = 8) -> list[float]:
    """eps_k = eps0 2^-k for k = 1..count, dropping values below 4h on grids (kept sorted)."""
    ladder = [eps0 * 2.0**-k for k in range(1, count + 1)]
    if h is not None:
        ladder = [e for e in ladder if e >= 4 * h]
    return sorted(ladder)


def scan_gap(
    s: float,
    weights,
    cluster,
    where,
    eps_list: Sequence[float],
    domain: Domain1D | None = None,
    table=None,
) -> list[GapScanRow]:
    """One :class:`GapScanRow` per strip width.

    ``where`` is the interface point x0 for a 1D partition or a
    :class:`LipschitzGraph` for a grid.  ``below_eps0`` uses the explicit 1D
    threshold; on grids only the geometric part min(1/2, R/2) is known.
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("eps_list is empty")
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps_list entries must be positive")
    if any(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be sorted increasing")
    sw = SigmaWeights.of(weights)
    warn_if_triangle(sw, "scan_gap")
    a0 = alphas_from_sigmas(sw).a_0

    if isinstance(cluster, Partition1D):
        x0 = float(where)
        if a0 < 0:
            dist = min(x0 - domain.a, domain.b - x0)
            eps0 = epsilon_zero_1d(s, sw, interface_radius_1d(cluster, x0), dist).value
        else:
            eps0 = 0.0
        make = lambda e: strip_region_1d(cluster, x0, e)  # noqa: E731
    elif isinstance(cluster, GridPartition2D):
        if not isinstance(where, LipschitzGraph):
            raise TypeError("a grid scan needs a LipschitzGraph")
        if table is None:
            table = kernel2d.build_offset_table(s, cluster.h)
        eps0 = min(0.5, where.R / 2) if a0 < 0 else 0.0
        make = lambda e: strip_region_2d(cluster, where, e)  # noqa: E731
    else:
        raise TypeError(f"unsupported cluster type {type(cluster).__name__}")

    f0 = f_s(s, sw, cluster, domain, table).total

    def row(e: float) -> GapScanRow:
        A = make(e)
        comp = build_strip_competitor(cluster, A, domain)
        f1 = f_s(s, sw, comp, domain, table).total
        gf = gap_formula_one_sided(s, sw, cluster, A, domain, table)
        return GapScanRow(e, f0, f1, f0 - f1, gf, e < eps0)

    return ordered_map(row, eps_list)


def fit_gap_exponent(rows: Sequence[GapScanRow], excluded: list | None = None) -> tuple[float, float, float]:
    """Least-squares line through (log eps, log gap_direct).

    Rows with a nonpositive gap are skipped; their eps values are appended to
    ``excluded`` when a list is passed, and a warning names them.
    Returns (slope, intercept, max absolute residual).
    """
    good = [r for r in rows if r.gap_direct > 0]
    bad = [r.eps for r in rows if not r.gap_direct > 0]
    if bad:
        warnings.warn(f"fit_gap_exponent: skipped rows with nonpositive gap at eps = {bad}", stacklevel=2)
        if excluded is not None:
            excluded.extend(bad)
    if len(good) < 3:
        raise ValueError(f"need at least 3 rows with positive gap, got {len(good)}")
    x = np.log([r.eps for r in good])
    y = np.log([r.gap_direct for r in good])
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), float(intercept), resid


def classical_gap_1d(weights, p: Partition1D, dom: Domain1D, strip) -> float:
    """F^1(E) - F^1(E^eps) for a 1D strip competitor."""
    comp = build_strip_competitor(p, strip, dom)
    return f_one(weights, p, dom).total - f_one(weights, comp, dom).total
