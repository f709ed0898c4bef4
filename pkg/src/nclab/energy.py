"""Weighted three-phase cluster energies and their coefficient transforms.

Pair terms are indexed by the phase pairs (-1, 0), (-1, 1) and (0, 1).
A "cluster" is either a :class:`Partition1D` together with a
:class:`Domain1D`, or a :class:`GridPartition2D` (which carries omega).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernel1d, kernel2d
from .geometry import Domain1D, GridPartition2D, Partition1D, check_label

PAIRS = ((-1, 0), (-1, 1), (0, 1))

FORMS = ("s-nonlocal", "classical-open", "classical-closure", "star")


class TriangleWarning(UserWarning):
    """The surface tensions satisfy the triangle inequality where alpha_0 <= 0 was assumed."""


@dataclass(frozen=True)
class SigmaWeights:
    s_m10: float
    s_m11: float
    s_01: float

    def __post_init__(self):
        for name in ("s_m10", "s_m11", "s_01"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"sigma {name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def of(cls, values) -> "SigmaWeights":
        return values if isinstance(values, cls) else cls(*values)

    def sigma(self, i: int, j: int) -> float:
        check_label(i)
        check_label(j)
        if i == j:
            return 0.0
        return {(-1, 0): self.s_m10, (-1, 1): self.s_m11, (0, 1): self.s_01}[(min(i, j), max(i, j))]

    def matrix(self) -> np.ndarray:
        """3x3 array indexed by label + 1."""
        m = np.zeros((3, 3))
        for i, j in PAIRS:
            m[i + 1, j + 1] = m[j + 1, i + 1] = self.sigma(i, j)
        return m

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.s_m10, self.s_m11, self.s_01)


@dataclass(frozen=True)
class AlphaWeights:
    a_m1: float
    a_0: float
    a_1: float

    def alpha(self, i: int) -> float:
        return {-1: self.a_m1, 0: self.a_0, 1: self.a_1}[check_label(i)]

    @property
    def triangle_inequality(self) -> bool:
        return min(self.a_m1, self.a_0, self.a_1) >= 0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a_m1, self.a_0, self.a_1)


@dataclass(frozen=True)
class SigmaStarWeights:
    s_m10: float
    s_m11: float
    s_01: float

    def sigma(self, i: int, j: int) -> float:
        return SigmaWeights.sigma(self, i, j)  # same lookup


def alphas_from_sigmas(sw) -> AlphaWeights:
    sw = SigmaWeights.of(sw)
    return AlphaWeights(
        0.5 * (sw.s_m11 + sw.s_m10 - sw.s_01),
        0.5 * (sw.s_m10 + sw.s_01 - sw.s_m11),
        0.5 * (sw.s_m11 + sw.s_01 - sw.s_m10),
    )


def sigma_star(sw) -> SigmaStarWeights:
    sw = SigmaWeights.of(sw)
    return SigmaStarWeights(sw.s_m10, sw.s_m10 + sw.s_01, sw.s_01)


def alpha_star(sw) -> dict[int, float]:
    """alpha*_i = alpha_i + alpha_0 = sigma_{i,0} for i = -1, 1; alpha*_0 = 0."""
    sw = SigmaWeights.of(sw)
    return {-1: sw.s_m10, 0: 0.0, 1: sw.s_01}


def warn_if_triangle(sw, where: str) -> bool:
    """Warn when alpha_0 > 0 for an experiment built around alpha_0 <= 0; returns True if warned."""
    a = alphas_from_sigmas(sw)
    if a.a_0 > 0:
        warnings.warn(f"{where}: alpha_0 = {a.a_0} > 0 (triangle inequality holds)", TriangleWarning, stacklevel=3)
        return True
    return False


@dataclass(frozen=True)
class EnergyBreakdown:
    term_m10: float
    term_m11: float
    term_01: float
    total: float
    form: str

    def term(self, i: int, j: int) -> float:
        return {(-1, 0): self.term_m10, (-1, 1): self.term_m11, (0, 1): self.term_01}[(min(i, j), max(i, j))]

    def csv_row(self) -> list:
        return [self.form, self.term_m10, self.term_m11, self.term_01, self.total]

    CSV_HEADER = ("form", "term_m10", "term_m11", "term_01", "total")


def _breakdown(terms: dict, weights, form: str) -> EnergyBreakdown:
    total = math.fsum(weights.sigma(i, j) * terms[(i, j)] for i, j in PAIRS)
    return EnergyBreakdown(terms[(-1, 0)], terms[(-1, 1)], terms[(0, 1)], total, form)


def _need_domain(domain):
    if not isinstance(domain, Domain1D):
        raise TypeError("a 1D cluster needs a Domain1D")
    return domain


def _table_for(s, g: GridPartition2D, table):
    if table is None:
        return kernel2d.build_offset_table(s, g.h)
    if table.s != s or table.h != g.h:
        raise ValueError(f"table (s={table.s}, h={table.h}) does not match s={s}, h={g.h}")
    return table


# ---------------------------------------------------------------------------
# nonlocal energies
# ---------------------------------------------------------------------------


def pair_terms(s: float, cluster, domain=None, table=None) -> dict[tuple[int, int], float]:
    """Per^s_Omega(E_i, E_j) for the three phase pairs."""
    if isinstance(cluster, Partition1D):
        dom = _need_domain(domain)
        ph = {k: cluster.phase(k) for k in (-1, 0, 1)}
        return {(i, j): kernel1d.per_s_omega_1d(s, dom, ph[i], ph[j]) for i, j in PAIRS}
    if isinstance(cluster, GridPartition2D):
        return kernel2d.pair_terms_2d(_table_for(s, cluster, table), cluster)
    raise TypeError(f"unsupported cluster type {type(cluster).__name__}")


def phase_perimeters(s: float, cluster, domain=None, table=None) -> dict[int, float]:
    """Per^s_Omega(E_i) for each phase."""
    if isinstance(cluster, Partition1D):
        dom = _need_domain(domain)
        return {k: kernel1d.per_s_1d(s, dom, cluster.phase(k)) for k in (-1, 0, 1)}
    if isinstance(cluster, GridPartition2D):
        tab = _table_for(s, cluster, table)
        return {k: kernel2d.per_s_2d(tab, cluster, k) for k in (-1, 0, 1)}
    raise TypeError(f"unsupported cluster type {type(cluster).__name__}")


def f_s(s: float, weights, cluster, domain=None, table=None) -> EnergyBreakdown:
    """Sigma-weighted sum of the pairwise nonlocal interactions."""
    sw = SigmaWeights.of(weights)
    return _breakdown(pair_terms(s, cluster, domain, table), sw, "s-nonlocal")


def f_s_alpha(s: float, weights, cluster, domain=None, table=None) -> EnergyBreakdown:
    """Alpha-weighted sum of the one-set perimeters.

    ``weights`` may be :class:`AlphaWeights` or sigmas (converted).  The pair
    terms are recovered from the one-set perimeters by inclusion-exclusion;
    the total is formed from the one-set perimeters directly.
    """
    aw = weights if isinstance(weights, AlphaWeights) else alphas_from_sigmas(weights)
    per = phase_perimeters(s, cluster, domain, table)
    total = math.fsum(aw.alpha(k) * per[k] for k in (-1, 0, 1))
    pair = {}
    for i, j in PAIRS:
        (k,) = {-1, 0, 1} - {i, j}
        pair[(i, j)] = 0.5 * (per[i] + per[j] - per[k])
    return EnergyBreakdown(pair[(-1, 0)], pair[(-1, 1)], pair[(0, 1)], total, "s-nonlocal")


def f_s_star_form(s: float, weights, cluster, domain=None, table=None) -> float:
    """sum_{i=+-1} alpha*_i Per^s(E_i) - 2 alpha_0 Per^s(E_-1, E_1)."""
    sw = SigmaWeights.of(weights)
    ast = alpha_star(sw)
    per = phase_perimeters(s, cluster, domain, table)
    cross = pair_terms(s, cluster, domain, table)[(-1, 1)]
    a0 = alphas_from_sigmas(sw).a_0
    return math.fsum([ast[-1] * per[-1], ast[1] * per[1], -2.0 * a0 * cross])


# ---------------------------------------------------------------------------
# classical energies
# ---------------------------------------------------------------------------


def classical_pair_1d(p: Partition1D, dom: Domain1D, i: int, j: int, closure: bool = False) -> float:
    """Number of (i|j) breakpoints in the open (or closed) domain."""
    pts = p.interfaces(i, j)
    if closure:
        return float(sum(dom.a <= x <= dom.b for x in pts))
    return float(sum(dom.a < x < dom.b for x in pts))


def classical_per_1d(p: Partition1D, dom: Domain1D, i: int, closure: bool = False) -> float:
    return math.fsum(classical_pair_1d(p, dom, i, k, closure) for k in (-1, 0, 1) if k != i)


def classical_terms(cluster, domain=None, closure: bool = False) -> dict[tuple[int, int], float]:
    if isinstance(cluster, Partition1D):
        dom = _need_domain(domain)
        return {(i, j): classical_pair_1d(cluster, dom, i, j, closure) for i, j in PAIRS}
    if isinstance(cluster, GridPartition2D):
        return {(i, j): kernel2d.classical_per_pair(cluster, i, j, closure) for i, j in PAIRS}
    raise TypeError(f"unsupported cluster type {type(cluster).__name__}")


def classical_phase_perimeters(cluster, domain=None, closure: bool = False) -> dict[int, float]:
    if isinstance(cluster, Partition1D):
        dom = _need_domain(domain)
        return {k: classical_per_1d(cluster, dom, k, closure) for k in (-1, 0, 1)}
    return {k: kernel2d.classical_per_2d(cluster, k, closure) for k in (-1, 0, 1)}


def f_one(weights, cluster, domain=None, closure: bool = False) -> EnergyBreakdown:
    sw = SigmaWeights.of(weights)
    form = "classical-closure" if closure else "classical-open"
    return _breakdown(classical_terms(cluster, domain, closure), sw, form)


def f_star(weights, cluster, domain=None, closure: bool = False) -> EnergyBreakdown:
    """Classical energy with sigma_{-1,1} replaced by sigma_{-1,0} + sigma_{0,1}."""
    st = sigma_star(weights)
    return _breakdown(classical_terms(cluster, domain, closure), st, "star")


# ---------------------------------------------------------------------------
# phase-field identity
# ---------------------------------------------------------------------------


def _u_integral_1d(s: float, p: Partition1D, dom: Domain1D) -> float:
    """1/2 u(Om, Om) + u(Om, Om^c) with u = label, by ordered piece pairs."""
    pieces = []
    for I, lab in p.pieces():
        for part, inside in ((I.intersect(dom.interval), True),):
            if not part.empty:
                pieces.append((part, lab, inside))
        for J in dom.exterior:
            K = I.intersect(J)
            if not K.empty:
                pieces.append((K, lab, False))
    terms = []
    for P, up, p_in in pieces:
        if not p_in:
            continue
        for Q, uq, q_in in pieces:
            if uq == up:
                continue
            w = 0.5 if q_in else 1.0
            terms.append(w * (up - uq) ** 2 * kernel1d.l_interval(s, P, Q))
    return math.fsum(terms)


def _u_integral_2d(tab, g: GridPartition2D) -> float:
    corr = kernel2d.correlator(tab, g.frame.shape)
    om = g.omega_mask
    half = np.where(om, 0.5, 1.0)
    u = g.labels.astype(float)
    terms = []
    for v in (-1, 0, 1):
        phi = corr.field(half * (g.labels == v))
        terms.append(kernel2d.block_sum(((u - v) ** 2 * phi)[om]))
    ext = kernel2d.exterior_fields(tab, g)
    if ext is not None:
        # cells beyond the frame lie outside omega, so they carry full weight
        for v in (-1, 0, 1):
            terms.append(kernel2d.block_sum(((u - v) ** 2 * ext[v])[om]))
    return math.fsum(terms)


def phase_field_identity_check(s: float, cluster, domain=None, table=None) -> tuple[float, float]:
    """(u-based double integral, Per(E-1,E0) + Per(E0,E1) + 4 Per(E-1,E1))."""
    if isinstance(cluster, Partition1D):
        lhs = _u_integral_1d(s, cluster, _need_domain(domain))
    elif isinstance(cluster, GridPartition2D):
        lhs = _u_integral_2d(_table_for(s, cluster, table), cluster)
    else:
        raise TypeError(f"unsupported cluster type {type(cluster).__name__}")
    t = pair_terms(s, cluster, domain, table)
    rhs = math.fsum([t[(-1, 0)], t[(0, 1)], 4.0 * t[(-1, 1)]])
    return lhs, rhs
