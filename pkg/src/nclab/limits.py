"""Behaviour of the nonlocal energies as s increases to 1.

Scaled energies are compared with classical perimeters counted in the open
domain and in its closure, and the recovery construction (relabel a
neighbourhood of the (-1|+1) contact to phase 0) is checked for the decay of
the remaining cross interaction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from . import energy, kernel1d, kernel2d
from .geometry import (
    Domain1D,
    GridPartition2D,
    Partition1D,
    interface_neighborhood,
    interface_neighborhood_1d,
)

TARGETS = ("energy", "star", "phase:-1", "phase:0", "phase:1")


def omega_measure(k: int) -> float:
    """Volume of the unit ball in R^k (omega_0 = 1)."""
    if k < 0 or int(k) != k:
        raise ValueError(f"dimension must be a nonnegative integer, got {k}")
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


def nu(n: int, s: float) -> float:
    """Normalizing constant nu(n, s) with nu(n, 1) = omega_{n-1}.

    For n = 1 the prefactor (n - 1) vanishes and 0 is returned; 1D
    normalizations use omega_0 = 1 instead.
    """
    if n not in (1, 2):
        raise ValueError(f"nu is implemented for n in {{1, 2}}, got {n}")
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    if n == 1:
        return 0.0
    val, _ = integrate.quad(lambda t: (1.0 + t * t) ** (-(n + s) / 2.0), 0.0, np.inf, epsabs=1e-12, epsrel=1e-12)
    return 2.0 * (1.0 - 2.0**-s) * (n - 1) * omega_measure(n - 1) * val


# ---------------------------------------------------------------------------
# s-sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    s: float
    raw: float
    scaled_nu: float
    scaled_omega: float
    target_open: float
    target_closure: float
    bound_1d: float = math.nan
    warn_quadrature: bool = False

    CSV_HEADER = ("s", "raw", "scaled_nu", "scaled_omega", "target_open", "target_closure", "bound_1d", "warn_quadrature")

    def csv_row(self) -> list:
        return [
            self.s, self.raw, self.scaled_nu, self.scaled_omega,
            self.target_open, self.target_closure, self.bound_1d, int(self.warn_quadrature),
        ]


def _check_target(target: str) -> str:
    if target not in TARGETS:
        raise ValueError(f"unknown sweep target {target!r}; expected one of {TARGETS}")
    return target


def _raw(s, cluster, domain, weights, target, table):
    if target in ("energy", "star"):
        return energy.f_s(s, weights, cluster, domain, table).total
    i = int(target.split(":")[1])
    return energy.phase_perimeters(s, cluster, domain, table)[i]


def _classical(cluster, domain, weights, target, closure):
    if target == "energy":
        return energy.f_one(weights, cluster, domain, closure).total
    if target == "star":
        return energy.f_star(weights, cluster, domain, closure).total
    i = int(target.split(":")[1])
    return energy.classical_phase_perimeters(cluster, domain, closure)[i]


def boundary_radius_1d(p: Partition1D, dom: Domain1D) -> float:
    """Half the smallest gap between points of (jumps inside omega) together with the endpoints of omega."""
    pts = sorted({x for x in p.breakpoints if dom.a < x < dom.b} | {dom.a, dom.b})
    return 0.5 * min(b - a for a, b in zip(pts, pts[1:]))


def _bound_factor(s: float, r: float) -> float:
    return abs((2.0 - 2.0 ** (1.0 - s)) * r ** (1.0 - s) - 1.0)


def _open_weight_1d(p, dom, weights, target) -> float:
    """The open-domain perimeter entering the 1D error bound (alpha-weighted for energies)."""
    per = energy.classical_phase_perimeters(p, dom, closure=False)
    if target.startswith("phase:"):
        return per[int(target.split(":")[1])]
    a = energy.alphas_from_sigmas(weights)
    if target == "star":
        st = energy.alpha_star(weights)
        return abs(st[-1]) * per[-1] + abs(st[1]) * per[1]
    return math.fsum(abs(a.alpha(k)) * per[k] for k in (-1, 0, 1))


def s_sweep(
    cluster,
    domain,
    weights,
    s_list: Sequence[float],
    target: str = "energy",
    table_factory=None,
) -> list[SweepRow]:
    """Raw and scaled nonlocal values along ``s_list`` next to the classical targets.

    In 1D the scaled value s(1-s) raw uses omega_0 = 1 in place of nu and the
    ``bound_1d`` column holds |(2 - 2^(1-s)) r^(1-s) - 1| Per_Omega + (1-s) K,
    with K fitted at the first s.  The ``star`` target compares with F*, which
    is only a Gamma-limit: the pointwise limit is F^1, so no bound is reported
    (NaN).  ``table_factory(s, h)`` may supply weight tables for grids.
    """
    target = _check_target(target)
    s_list = [kernel1d.check_order(s) for s in s_list]
    if any(b <= a for a, b in zip(s_list, s_list[1:])):
        raise ValueError("s_list must be strictly increasing")
    weights = energy.SigmaWeights.of(weights)
    one_d = isinstance(cluster, Partition1D)
    if not one_d and not isinstance(cluster, GridPartition2D):
        raise TypeError(f"unsupported cluster type {type(cluster).__name__}")
    t_open = _classical(cluster, domain, weights, target, False)
    t_closed = _classical(cluster, domain, weights, target, True)
    rows = []
    if one_d:
        r = boundary_radius_1d(cluster, domain)
        per_open = _open_weight_1d(cluster, domain, weights, target)
        K = None
        for s in s_list:
            raw = _raw(s, cluster, domain, weights, target, None)
            scaled = s * (1.0 - s) * raw
            lead = _bound_factor(s, r) * per_open
            if K is None:
                K = max(0.0, (abs(scaled - t_closed) - lead) / (1.0 - s))
            bound = math.nan if target == "star" else lead + (1.0 - s) * K
            rows.append(SweepRow(s, raw, scaled, (1.0 - s) * raw, t_open, t_closed, bound, False))
        return rows
    om = omega_measure(1)
    for s in s_list:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", kernel2d.QuadratureWarning)
            tab = (table_factory or kernel2d.build_offset_table)(s, cluster.h)
        raw = _raw(s, cluster, domain, weights, target, tab)
        rows.append(SweepRow(
            s, raw, s * (1.0 - s) / nu(2, s) * raw, (1.0 - s) / om * raw,
            t_open, t_closed, math.nan, s > kernel2d.S_WARN,
        ))
    return rows


# ---------------------------------------------------------------------------
# recovery construction
# ---------------------------------------------------------------------------


def separate_phases(cluster, eps: float, domain: Domain1D | None = None):
    """Relabel the eps-neighbourhood (inside omega) of the (-1|+1) contact to phase 0."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if isinstance(cluster, Partition1D):
        if not isinstance(domain, Domain1D):
            raise TypeError("a 1D cluster needs a Domain1D")
        A = interface_neighborhood_1d(cluster, domain, eps)
        return cluster if A.empty else cluster.relabel(A, 0)
    if isinstance(cluster, GridPartition2D):
        A = interface_neighborhood(cluster, eps)
        return cluster if A.empty else cluster.relabel(A.mask, 0)
    raise TypeError(f"unsupported cluster type {type(cluster).__name__}")


def _set_distance_1d(A, B) -> float:
    best = math.inf
    for I in A:
        for J in B:
            if I.hi <= J.lo:
                best = min(best, J.lo - I.hi)
            elif J.hi <= I.lo:
                best = min(best, I.lo - J.hi)
            else:
                return 0.0
    return best


def _set_distance_2d(g: GridPartition2D, A: np.ndarray, B: np.ndarray) -> float:
    P = np.argwhere(A)
    Q = np.argwhere(B)
    if len(P) == 0 or len(Q) == 0:
        return math.inf
    best = math.inf
    for k in range(0, len(P), 512):
        d = P[k:k + 512, None, :] - Q[None, :, :]
        best = min(best, float(np.sqrt((d * d).sum(axis=2).min())))
    return best * g.h


def phase_separation(cluster, domain: Domain1D | None = None) -> float:
    """min(dist(E_1 in omega, E_-1), dist(E_1, E_-1 in omega)); cell-centre distances on grids."""
    if isinstance(cluster, Partition1D):
        om = domain.as_set
        E1, Em = cluster.phase(1), cluster.phase(-1)
        return min(_set_distance_1d(E1.intersect(om), Em), _set_distance_1d(E1, Em.intersect(om)))
    om = cluster.omega_mask
    E1, Em = cluster.phase_mask(1), cluster.phase_mask(-1)
    return min(_set_distance_2d(cluster, E1 & om, Em), _set_distance_2d(cluster, E1, Em & om))


@dataclass(frozen=True)
class DecayRow:
    s: float
    value: float
    bound: float
    C: float

    CSV_HEADER = ("s", "value", "bound", "C")

    def csv_row(self) -> list:
        return [self.s, self.value, self.bound, self.C]


def cross_interaction_decay(cluster_eps, domain, weights, s_list: Sequence[float], eps: float, table_factory=None) -> list[DecayRow]:
    """(1-s) Per^s_Omega(E_1, E_-1) of a separated cluster next to (1-s) C / (s eps^s), C = 2 n omega_n |Omega|."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    s_list = [kernel1d.check_order(s) for s in s_list]
    energy.SigmaWeights.of(weights)  # validated for symmetry with the other experiments
    if isinstance(cluster_eps, Partition1D):
        n, vol = 1, domain.length
    else:
        i0, j0, i1, j1 = cluster_eps.omega
        n, vol = 2, (i1 - i0) * (j1 - j0) * cluster_eps.h**2
    C = 2.0 * n * omega_measure(n) * vol
    rows = []
    for s in s_list:
        if n == 1:
            val = kernel1d.per_s_omega_1d(s, domain, cluster_eps.phase(1), cluster_eps.phase(-1))
        else:
            tab = (table_factory or kernel2d.build_offset_table)(s, cluster_eps.h)
            val = kernel2d.per_s_omega_2d(tab, cluster_eps, 1, -1)
        rows.append(DecayRow(s, (1.0 - s) * val, (1.0 - s) * C / (s * eps**s), C))
    return rows


@dataclass(frozen=True)
class RecoveryRow:
    s: float
    eps: float
    scaled_energy: float
    target: float


def recovery_energy_1d(p: Partition1D, dom: Domain1D, weights, s: float, eps: float) -> RecoveryRow:
    """(1-s) F^s of the separated cluster next to F*(E) counted in the closure of omega."""
    sep = separate_phases(p, eps, dom)
    raw = energy.f_s(s, weights, sep, dom).total
    return RecoveryRow(s, eps, (1.0 - s) * raw, energy.f_star(weights, p, dom, closure=True).total)
