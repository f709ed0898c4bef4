"""Desk-scale minimization of F^s with the exterior data held fixed.

Two searches are provided: a greedy single-cell relabelling descent on grids
(and on a uniform 1D cell grid), and a brute-force enumeration over 1D
partitions whose breakpoints lie on a uniform grid inside omega.  Results of
the greedy search are single-move-stable, which is weaker than being a local
minimizer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import energy, kernel1d, kernel2d
from .competitor import gap_formula_one_sided
from .energy import SigmaWeights, alphas_from_sigmas, warn_if_triangle
from .geometry import Domain1D, GridPartition2D, Interval, Partition1D

CANDIDATE_CAP = 10_000_000
MAX_BREAKS = 4
TIE_RTOL = 1e-12


class SearchTooLarge(ArithmeticError):
    """The enumeration would exceed the candidate cap."""


@dataclass
class MinimizeReport:
    initial_energy: float
    final_energy: float
    moves_accepted: int
    final_cluster: object
    direct_interface_measure: float
    strip_would_improve: bool = False
    converged: bool = True
    sweeps: int = 0
    candidates: int = 0
    trace: list = field(default_factory=list, repr=False)

    CSV_HEADER = ("initial_energy", "final_energy", "moves_accepted", "direct_interface_measure", "strip_would_improve")

    def csv_row(self) -> list:
        return [
            self.initial_energy, self.final_energy, self.moves_accepted,
            self.direct_interface_measure, int(self.strip_would_improve),
        ]


# ---------------------------------------------------------------------------
# greedy descent on grids
# ---------------------------------------------------------------------------


def _shift(W: np.ndarray, p: tuple[int, int], shape: tuple[int, int]) -> np.ndarray:
    """W(x - p) over the frame, read off the centred offset array."""
    nx, ny = shape
    i, j = p
    return W[nx - 1 - i:2 * nx - 1 - i, ny - 1 - j:2 * ny - 1 - j]


def _touching_strip(g: GridPartition2D) -> np.ndarray:
    """+1 cells in omega sharing an edge with a -1 cell."""
    lab = g.labels
    neg = lab == -1
    near = np.zeros_like(neg)
    near[1:, :] |= neg[:-1, :]
    near[:-1, :] |= neg[1:, :]
    near[:, 1:] |= neg[:, :-1]
    near[:, :-1] |= neg[:, 1:]
    return near & (lab == 1) & g.omega_mask


def greedy_descent(
    s: float,
    weights,
    g: GridPartition2D,
    max_sweeps: int = 100,
    table=None,
    record_trace: bool = False,
) -> MinimizeReport:
    """Single-cell relabelling descent over the omega cells of ``g``.

    Cells are visited row by row (j outer, i inner, bottom row first); a cell
    takes the label with the most negative energy change, ties going to the
    lower label, and only strict decreases are accepted.  With
    ``record_trace`` the report lists (cell, old, new, predicted delta).
    """
    sw = SigmaWeights.of(weights)
    warn_if_triangle(sw, "greedy_descent")
    tab = table if table is not None else kernel2d.build_offset_table(s, g.h)
    shape = g.frame.shape
    corr = kernel2d.correlator(tab, shape)
    W = corr.W
    ext = kernel2d.exterior_fields(tab, g)
    sig = sw.matrix()

    labels = np.array(g.labels, dtype=np.int8)
    phi = {k: corr.field(labels == k) for k in (-1, 0, 1)}
    if ext is not None:
        phi = {k: phi[k] + ext[k] for k in phi}

    e0 = energy.f_s(s, sw, g, table=tab).total
    e = e0
    i0, j0, i1, j1 = g.omega
    moves = 0
    sweeps = 0
    converged = False
    trace = []
    while sweeps < max_sweeps:
        sweeps += 1
        accepted = 0
        for j in range(j0, j1):
            for i in range(i0, i1):
                a = int(labels[i, j])
                vals = np.array([phi[k][i, j] for k in (-1, 0, 1)])
                best_b, best_d = a, 0.0
                for b in (-1, 0, 1):
                    if b == a:
                        continue
                    d = float(np.dot(sig[b + 1] - sig[a + 1], vals))
                    if d < best_d:
                        best_b, best_d = b, d
                if best_b == a or best_d >= -1e-13 * max(abs(e), 1.0):
                    continue
                labels[i, j] = best_b
                Wp = _shift(W, (i, j), shape)
                phi[a] = phi[a] - Wp
                phi[best_b] = phi[best_b] + Wp
                e += best_d
                moves += 1
                accepted += 1
                if record_trace:
                    trace.append(((i, j), a, best_b, best_d))
        if accepted == 0:
            converged = True
            break

    final = g.with_labels(labels)
    e1 = energy.f_s(s, sw, final, table=tab).total
    direct = kernel2d.classical_per_pair(final, 1, -1)
    strip = _touching_strip(final)
    improve = False
    if strip.any():
        improve = gap_formula_one_sided(s, sw, final, strip, table=tab) > 0
    return MinimizeReport(e0, e1, moves, final, direct, improve, converged, sweeps, 0, trace)


# ---------------------------------------------------------------------------
# 1D: candidate grids, greedy analogue and exhaustive search
# ---------------------------------------------------------------------------


def grid_points(dom: Domain1D, m: int) -> np.ndarray:
    """x_k = a + k (b - a)/(m + 1), k = 1..m."""
    if m < 0:
        raise ValueError(f"grid_m must be >= 0, got {m}")
    k = np.arange(1, m + 1)
    return dom.a + k * (dom.b - dom.a) / (m + 1)


def _exterior_pieces(ext: Partition1D, dom: Domain1D):
    left, right = [], []
    for I, lab in ext.pieces():
        L = I.intersect(Interval(-math.inf, dom.a))
        R = I.intersect(Interval(dom.b, math.inf))
        if not L.empty:
            left.append((L, lab))
        if not R.empty:
            right.append((R, lab))
    return left, right


def _label_sequences(k: int) -> np.ndarray:
    """All label words of length k + 1 over {-1, 0, 1} with no equal neighbours."""
    out = []
    for first in (-1, 0, 1):
        for steps in itertools.product((1, 2), repeat=k):
            w = [first]
            for st in steps:
                w.append((w[-1] + 1 + st) % 3 - 1)
            out.append(w)
    return np.array(out, dtype=np.int64).reshape(-1, k + 1)


def search_size(m: int, max_breaks: int = MAX_BREAKS) -> int:
    return sum(math.comb(m, k) * 3 * 2**k for k in range(0, min(m, max_breaks) + 1))


def _energies_1d(s, sig, dom, left, right, ends, labs) -> np.ndarray:
    """F^s for candidates given inner segment ends (N, k+2) and labels (N, k+1)."""
    N, nseg = labs.shape
    total = np.zeros(N)
    lo, hi = ends[:, :-1], ends[:, 1:]
    # inner-inner
    for p in range(nseg):
        for q in range(p + 1, nseg):
            w = sig[labs[:, p] + 1, labs[:, q] + 1]
            if not w.any():
                continue
            total += w * kernel1d.l_interval_v(s, lo[:, p], hi[:, p], lo[:, q], hi[:, q])
    # inner-exterior
    for I, lab in left:
        for p in range(nseg):
            w = sig[lab + 1, labs[:, p] + 1]
            total += w * kernel1d.l_interval_v(s, I.lo, I.hi, lo[:, p], hi[:, p])
    for I, lab in right:
        for p in range(nseg):
            w = sig[labs[:, p] + 1, lab + 1]
            total += w * kernel1d.l_interval_v(s, lo[:, p], hi[:, p], I.lo, I.hi)
    return total


def _candidates(dom: Domain1D, m: int, max_breaks: int):
    pts = grid_points(dom, m)
    for k in range(0, min(m, max_breaks) + 1):
        combos = np.array(list(itertools.combinations(range(m), k)), dtype=np.int64)
        combos = combos.reshape(len(combos), k)
        words = _label_sequences(k)
        bps = pts[combos]  # (C, k)
        ends = np.concatenate([np.full((len(bps), 1), dom.a), bps, np.full((len(bps), 1), dom.b)], axis=1)
        yield k, ends, words


def _assemble(ext: Partition1D, dom: Domain1D, ends_row, labs_row) -> Partition1D:
    inner = Partition1D(tuple(ends_row[1:-1]), tuple(int(v) for v in labs_row))
    return ext.with_interior(dom, inner)


def _key(p: Partition1D):
    return (p.breakpoints, p.labels)


def _enumerate(weights_matrix, dom, ext, m, max_breaks, energy_fn):
    """Minimum of ``energy_fn(ends, labs)`` over the candidate class with the lexicographic tie-break."""
    n = search_size(m, max_breaks)
    if n > CANDIDATE_CAP:
        raise SearchTooLarge(f"{n} candidates exceed the cap of {CANDIDATE_CAP}")
    blocks = []
    for k, ends, words in _candidates(dom, m, max_breaks):
        C, W = len(ends), len(words)
        e_rep = np.repeat(ends, W, axis=0)
        l_rep = np.tile(words, (C, 1))
        blocks.append((e_rep, l_rep, energy_fn(e_rep, l_rep)))
    best = min(float(b[2].min()) for b in blocks if len(b[2]))
    tol = TIE_RTOL * max(abs(best), 1e-300)
    winners = []
    for e_rep, l_rep, vals in blocks:
        for idx in np.nonzero(vals <= best + tol)[0]:
            winners.append((_assemble(ext, dom, e_rep[idx], l_rep[idx]), float(vals[idx])))
    part, val = min(winners, key=lambda t: _key(t[0]))
    return part, val, n


def _direct_measure_1d(p: Partition1D, dom: Domain1D) -> float:
    return energy.classical_pair_1d(p, dom, 1, -1, closure=False)


def exhaustive_1d(
    s: float,
    weights,
    dom: Domain1D,
    exterior: Partition1D,
    grid_m: int,
    max_breaks: int = MAX_BREAKS,
) -> MinimizeReport:
    """Exact minimizer of F^s over partitions agreeing with ``exterior`` off omega
    whose jumps inside omega sit on the grid (at most ``max_breaks`` of them)."""
    s = kernel1d.check_order(s)
    sw = SigmaWeights.of(weights)
    sig = sw.matrix()
    left, right = _exterior_pieces(exterior, dom)
    fn = lambda ends, labs: _energies_1d(s, sig, dom, left, right, ends, labs)  # noqa: E731
    part, val, n = _enumerate(sig, dom, exterior, grid_m, max_breaks, fn)
    e0 = energy.f_s(s, sw, exterior, dom).total
    final = energy.f_s(s, sw, part, dom).total
    return MinimizeReport(e0, final, 0, part, _direct_measure_1d(part, dom), False, True, 0, n)


def star_minimum_1d(weights, dom: Domain1D, exterior: Partition1D, grid_m: int, max_breaks: int = MAX_BREAKS):
    """Minimizer of F* counted in the closure of omega over the same candidate class."""
    st = energy.sigma_star(weights)
    sig = SigmaWeights(st.s_m10, st.s_m11, st.s_01).matrix()
    left, right = _exterior_pieces(exterior, dom)
    lab_left = left[-1][1]
    lab_right = right[0][1]

    def fn(ends, labs):
        total = sig[lab_left + 1, labs[:, 0] + 1] + sig[labs[:, -1] + 1, lab_right + 1]
        for p in range(labs.shape[1] - 1):
            total = total + sig[labs[:, p] + 1, labs[:, p + 1] + 1]
        return total

    part, val, n = _enumerate(sig, dom, exterior, grid_m, max_breaks, fn)
    return part, energy.f_star(weights, part, dom, closure=True).total


def greedy_descent_1d(
    s: float,
    weights,
    dom: Domain1D,
    exterior: Partition1D,
    grid_m: int,
    max_sweeps: int = 100,
) -> MinimizeReport:
    """Single-cell descent on the m + 1 grid cells of omega, scanned left to right."""
    s = kernel1d.check_order(s)
    sw = SigmaWeights.of(weights)
    pts = np.concatenate([[dom.a], grid_points(dom, grid_m), [dom.b]])
    mids = 0.5 * (pts[:-1] + pts[1:])
    cells = [exterior.label_at(x) for x in mids]

    def build(labs):
        return _assemble(exterior, dom, pts, labs)

    def f(labs):
        return energy.f_s(s, sw, build(labs), dom).total

    e0 = energy.f_s(s, sw, exterior, dom).total
    cur = f(cells)
    moves = 0
    sweeps = 0
    converged = False
    trace = []
    while sweeps < max_sweeps:
        sweeps += 1
        accepted = 0
        for c in range(len(cells)):
            a = cells[c]
            best_b, best_e = a, cur
            for b in (-1, 0, 1):
                if b == a:
                    continue
                trial = cells[:c] + [b] + cells[c + 1:]
                val = f(trial)
                if val < best_e - 1e-13 * max(abs(cur), 1.0):
                    best_b, best_e = b, val
            if best_b != a:
                trace.append((c, a, best_b, best_e - cur))
                cells[c] = best_b
                cur = best_e
                moves += 1
                accepted += 1
        if accepted == 0:
            converged = True
            break
    final = build(cells)
    return MinimizeReport(e0, f(cells), moves, final, _direct_measure_1d(final, dom), False, converged, sweeps, 0, trace)


@dataclass(frozen=True)
class GammaRow:
    s: float
    raw: float
    scaled: float
    star_min: float
    deviation: float
    minimizer: Partition1D

    CSV_HEADER = ("s", "raw", "scaled", "star_min", "deviation")

    def csv_row(self) -> list:
        return [self.s, self.raw, self.scaled, self.star_min, self.deviation]


def gamma_min_convergence_experiment(
    weights,
    dom: Domain1D,
    exterior: Partition1D,
    s_list: Sequence[float],
    grid_m: int,
) -> list[GammaRow]:
    """(1 - s) F^s at the exhaustive minimizer for each s, next to min F* (closure)."""
    sw = SigmaWeights.of(weights)
    if alphas_from_sigmas(sw).a_0 > 0:
        warn_if_triangle(sw, "gamma_min_convergence_experiment")
    _, star = star_minimum_1d(sw, dom, exterior, grid_m)
    rows = []
    for s in s_list:
        rep = exhaustive_1d(s, sw, dom, exterior, grid_m)
        scaled = (1.0 - s) * rep.final_energy
        rows.append(GammaRow(s, rep.final_energy, scaled, star, abs(scaled - star), rep.final_cluster))
    return rows


def restricted_minimum_1d(s, weights, dom, exterior, grid_m, max_breaks: int = MAX_BREAKS) -> float:
    """Minimum of F^s over the candidate class without phase 0 inside omega."""
    sw = SigmaWeights.of(weights)
    sig = sw.matrix()
    left, right = _exterior_pieces(exterior, dom)
    best = math.inf
    for k, ends, words in _candidates(dom, grid_m, max_breaks):
        words = words[(words != 0).all(axis=1)]
        if len(words) == 0:
            continue
        e_rep = np.repeat(ends, len(words), axis=0)
        l_rep = np.tile(words, (len(ends), 1))
        best = min(best, float(_energies_1d(s, sig, dom, left, right, e_rep, l_rep).min()))
    return best
