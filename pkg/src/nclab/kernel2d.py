"""Cell-pair quadrature for the planar kernel |x - y|^(-2-s) on uniform grids.

The interaction of two cells only depends on their integer offset, so one
table of unit-cell pair integrals (scaled by h^(2-s)) serves every grid.
Interactions between cell sets are sums of table entries; for whole-frame
masks they are evaluated as FFT correlations, with a brute-force pair sum
kept as the reference path.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import fft as sfft
from scipy import special

from .geometry import GridPartition2D, check_label, omega_mask
from .kernel1d import check_order
from .summation import BLOCK, block_sum, ordered_map

DEFAULT_FAR_CUTOFF = 8
DEFAULT_NEAR_DEPTH = 6
S_WARN = 0.95
CONSISTENCY_TOL = 0.01


class QuadratureWarning(UserWarning):
    """Near-field quadrature is unreliable in this regime."""


class QuadratureError(ArithmeticError):
    """Near-field quadrature failed its self-consistency gate."""


# ---------------------------------------------------------------------------
# unit-cell pair integrals
# ---------------------------------------------------------------------------


def _subdivided(s: float, offsets: np.ndarray, depth: int) -> np.ndarray:
    """Midpoint rule on 4**depth subcells per cell, for separated cell pairs.

    Subcell pairs sharing a difference vector are grouped, which turns the
    4**(2 depth) pair sum into a (2**(depth+1) - 1)**2 weighted sum.
    """
    n = 2 ** depth
    d = np.arange(-n + 1, n)
    mult = (n - np.abs(d)).astype(float)
    w2 = np.outer(mult, mult)
    hs = 1.0 / n
    out = np.empty(len(offsets))
    for k, (ox, oy) in enumerate(offsets):
        vx = (ox * n + d)[:, None] * hs
        vy = (oy * n + d)[None, :] * hs
        r2 = vx * vx + vy * vy
        out[k] = hs ** 4 * np.sum(w2 * r2 ** (-(2.0 + s) / 2.0))
    return out


def _unit_values(s: float, far_cutoff: int, depth: int) -> dict[tuple[int, int], float]:
    """Unit-cell integrals for canonical offsets 0 <= dy <= dx < far_cutoff, (dx, dy) != (0, 0)."""
    canon = [(dx, dy) for dx in range(far_cutoff + 2) for dy in range(dx + 1) if (dx, dy) != (0, 0)]
    sep = [o for o in canon if o not in ((1, 0), (1, 1))]
    vals = dict(zip(sep, _subdivided(s, np.array(sep), depth)))

    def g(dx, dy):
        dx, dy = abs(dx), abs(dy)
        return vals[(max(dx, dy), min(dx, dy))]

    # one level of 4-way subdivision of both cells expresses each touching
    # pair through half-size pairs; the touching half-size pairs are the same
    # integrals scaled by c = 2^-(2-s), which closes the recursion.
    c = 2.0 ** (-(2.0 - s))
    n11 = 4 * g(1, 2) + 2 * g(1, 3) + 4 * g(2, 2) + 4 * g(2, 3) + g(3, 3)
    g11 = c * n11 / (1.0 - c)
    n10 = 4 * g(2, 0) + 4 * g(2, 1) + 2 * g(3, 0) + 2 * g(3, 1)
    g10 = c * (2.0 * g11 + n10) / (1.0 - 2.0 * c)
    vals[(1, 0)] = g10
    vals[(1, 1)] = g11
    return {k: v for k, v in vals.items() if k[0] < far_cutoff}


@lru_cache(maxsize=64)
def _near_block(s: float, far_cutoff: int, near_depth: int) -> np.ndarray:
    vals = _unit_values(s, far_cutoff, near_depth)
    if near_depth < 12:
        ref = _unit_values(s, far_cutoff, near_depth + 1)
        for key in ((1, 0), (1, 1)):
            rel = abs(vals[key] - ref[key]) / ref[key]
            if rel > CONSISTENCY_TOL:
                raise QuadratureError(
                    f"near_depth={near_depth} too small: adjacent-cell value {key} changes by "
                    f"{100 * rel:.2f}% at the next depth"
                )
    F = far_cutoff
    block = np.zeros((2 * F - 1, 2 * F - 1))
    for dx in range(-F + 1, F):
        for dy in range(-F + 1, F):
            if dx == 0 and dy == 0:
                continue
            a, b = abs(dx), abs(dy)
            block[dx + F - 1, dy + F - 1] = vals[(max(a, b), min(a, b))]
    block.setflags(write=False)
    return block


@dataclass(frozen=True)
class OffsetWeightTable:
    """Translation-invariant cell-pair weights for cells of side ``h``.

    ``weight(di, dj)`` is the integral of |x-y|^(-2-s) over a pair of cells
    at integer offset (di, dj).  Offsets with max(|di|, |dj|) < far_cutoff
    come from the subdivided quadrature; farther ones use the midpoint value.
    """

    s: float
    h: float
    far_cutoff: int = DEFAULT_FAR_CUTOFF
    near_depth: int = DEFAULT_NEAR_DEPTH
    near: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def scale(self) -> float:
        return self.h ** (2.0 - self.s)

    def weight(self, di: int, dj: int) -> float:
        if di == 0 and dj == 0:
            raise ValueError("the self-offset (0, 0) has no finite weight")
        F = self.far_cutoff
        if max(abs(di), abs(dj)) < F:
            return float(self.near[di + F - 1, dj + F - 1]) * self.scale
        return float(di * di + dj * dj) ** (-(2.0 + self.s) / 2.0) * self.scale

    def array(self, nx: int, ny: int) -> np.ndarray:
        """Weights for all offsets in [-(nx-1), nx-1] x [-(ny-1), ny-1], centred; (0, 0) holds 0."""
        return _full_array(self, nx, ny)


@lru_cache(maxsize=32)
def _full_array(tab: OffsetWeightTable, nx: int, ny: int) -> np.ndarray:
    di = np.arange(-nx + 1, nx)[:, None].astype(float)
    dj = np.arange(-ny + 1, ny)[None, :].astype(float)
    r2 = di * di + dj * dj
    with np.errstate(divide="ignore"):
        W = np.where(r2 > 0, r2 ** (-(2.0 + tab.s) / 2.0), 0.0)
    F = tab.far_cutoff
    cx, cy = nx - 1, ny - 1
    bx, by = min(F - 1, nx - 1), min(F - 1, ny - 1)
    W[cx - bx:cx + bx + 1, cy - by:cy + by + 1] = tab.near[F - 1 - bx:F + bx, F - 1 - by:F + by]
    W = W * tab.scale
    W.setflags(write=False)
    return W


def build_offset_table(
    s: float,
    h: float,
    far_cutoff: int = DEFAULT_FAR_CUTOFF,
    near_depth: int = DEFAULT_NEAR_DEPTH,
) -> OffsetWeightTable:
    s = check_order(s)
    if not h > 0:
        raise ValueError(f"cell size h must be positive, got {h}")
    if far_cutoff < 2:
        raise ValueError(f"far_cutoff must be >= 2, got {far_cutoff}")
    if near_depth < 0:
        raise ValueError(f"near_depth must be >= 0, got {near_depth}")
    if s > S_WARN:
        warnings.warn(
            f"s = {s} > {S_WARN}: near-field weights grow like 1/(1-s); prefer 1D closed forms",
            QuadratureWarning,
            stacklevel=2,
        )
    near = _near_block(s, int(far_cutoff), int(near_depth))
    return OffsetWeightTable(s, float(h), int(far_cutoff), int(near_depth), near)


_MAGIC = b"NCLW\x01"


def save_table(tab: OffsetWeightTable, path: str | Path) -> None:
    """Binary cache: magic, (s, h, far_cutoff, near_depth), then row-major near weights."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<ddqq", tab.s, tab.h, tab.far_cutoff, tab.near_depth))
        fh.write(np.ascontiguousarray(tab.near, dtype="<f8").tobytes())


def load_table(path: str | Path) -> OffsetWeightTable:
    raw = Path(path).read_bytes()
    if not raw.startswith(_MAGIC):
        raise ValueError(f"{path}: not a weight-table cache file")
    off = len(_MAGIC)
    s, h, F, depth = struct.unpack_from("<ddqq", raw, off)
    off += struct.calcsize("<ddqq")
    near = np.frombuffer(raw, dtype="<f8", offset=off).reshape(2 * F - 1, 2 * F - 1).astype(float)
    near.setflags(write=False)
    return OffsetWeightTable(s, h, int(F), int(depth), near)


# ---------------------------------------------------------------------------
# interactions between cell sets
# ---------------------------------------------------------------------------


class Correlator:
    """Fields phi(p) = sum_q W(p - q) m(q) over a fixed frame via FFT."""

    def __init__(self, tab: OffsetWeightTable, shape: tuple[int, int]):
        nx, ny = shape
        self.tab = tab
        self.shape = shape
        self.W = tab.array(nx, ny)
        self.fshape = (sfft.next_fast_len(3 * nx - 2, real=True), sfft.next_fast_len(3 * ny - 2, real=True))
        self._Wf = sfft.rfftn(self.W, self.fshape)

    def field(self, mask: np.ndarray) -> np.ndarray:
        nx, ny = self.shape
        m = np.asarray(mask, dtype=float)
        if not m.any():
            return np.zeros(self.shape)
        conv = sfft.irfftn(self._Wf * sfft.rfftn(m, self.fshape), self.fshape)
        return conv[nx - 1:2 * nx - 1, ny - 1:2 * ny - 1]


@lru_cache(maxsize=16)
def correlator(tab: OffsetWeightTable, shape: tuple[int, int]) -> Correlator:
    return Correlator(tab, shape)


def _masked_sum(field_: np.ndarray, mask: np.ndarray) -> float:
    return block_sum(field_[mask])


def _direct(tab: OffsetWeightTable, A: np.ndarray, B: np.ndarray) -> float:
    nx, ny = A.shape
    W = tab.array(nx, ny)
    P = np.argwhere(A)
    Q = np.argwhere(B)
    if len(P) == 0 or len(Q) == 0:
        return 0.0
    step = max(1, BLOCK // 4)
    chunks = [P[k:k + step] for k in range(0, len(P), step)]

    def part(chunk):
        di = chunk[:, 0:1] - Q[None, :, 0] + nx - 1
        dj = chunk[:, 1:2] - Q[None, :, 1] + ny - 1
        return block_sum(W[di, dj])

    return math.fsum(ordered_map(part, chunks))


def l_grid(tab: OffsetWeightTable, A: np.ndarray, B: np.ndarray, method: str = "fft") -> float:
    """Discrete L(A, B) for disjoint boolean cell masks on one frame."""
    A = np.asarray(A, dtype=bool)
    B = np.asarray(B, dtype=bool)
    if A.shape != B.shape:
        raise ValueError("cell masks must share one frame")
    if (A & B).any():
        raise ValueError("cell sets overlap")
    if method == "direct":
        return _direct(tab, A, B)
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    if not A.any() or not B.any():
        return 0.0
    # correlate the smaller set, sum over the other
    src, dst = (A, B) if A.sum() <= B.sum() else (B, A)
    return _masked_sum(correlator(tab, A.shape).field(src), dst)


def per_s_masks(tab: OffsetWeightTable, A: np.ndarray, B: np.ndarray, om: np.ndarray, method: str = "fft") -> float:
    """Per^s_Omega(A, B) = L(A in Om, B) + L(A outside Om, B in Om), restricted to the frame."""
    A = np.asarray(A, dtype=bool)
    B = np.asarray(B, dtype=bool)
    om = np.asarray(om, dtype=bool)
    return math.fsum([l_grid(tab, A & om, B, method), l_grid(tab, A & ~om, B & om, method)])


# ---------------------------------------------------------------------------
# far field beyond the frame
# ---------------------------------------------------------------------------

# 3-point Gauss-Legendre rule on [0, 1], used to average over the omega cell
_GL_X = np.array([0.5 - 0.5 * math.sqrt(0.6), 0.5, 0.5 + 0.5 * math.sqrt(0.6)])
_GL_W = np.array([5.0, 8.0, 5.0]) / 18.0


def quadrant_integral(s: float, u, v) -> np.ndarray:
    """Integral of |z|^(-2-s) over {x > u, y > v} for v > 0 (any real u).

    In polar coordinates the radial part integrates to rho^(-s)/s and the
    angular part splits into two incomplete beta functions.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if (v <= 0).any():
        raise ValueError("quadrant_integral needs v > 0")
    a = 0.5 * (1.0 + s)
    full = special.beta(a, 0.5)
    au = np.abs(u)
    t = au * au + v * v
    with np.errstate(divide="ignore", invalid="ignore"):
        upos = np.where(au > 0, au ** (-s) * special.betainc(a, 0.5, au * au / t), 0.0)
    half = full / (2.0 * s) * (v ** (-s) * special.betainc(a, 0.5, v * v / t) + upos)
    return np.where(u >= 0, half, full * v ** (-s) / s - half)


def _edge_field(s: float, edge_labels: np.ndarray, n_along: int, dist0: np.ndarray, label: int) -> np.ndarray:
    """Unit-grid interaction of cells with the outward continuation of one frame edge.

    ``edge_labels[k]`` continues over the half-strip k < along < k + 1; ``dist0``
    has shape (n_normal,) with the distance of each cell row's lower side to the
    edge.  Returns an (n_along, n_normal) field, cell-averaged by Gauss points.
    """
    ind = (edge_labels == label).astype(float)
    out = np.zeros((n_along, len(dist0)))
    if not ind.any():
        return out
    m = np.arange(-n_along + 1, n_along + 1, dtype=float)  # k - i, plus one extra for the upper end
    idx = np.arange(n_along)[None, :] - np.arange(n_along)[:, None] + n_along - 1  # [i, k] -> k - i
    for xa, wa in zip(_GL_X, _GL_W):
        for xb, wb in zip(_GL_X, _GL_W):
            v = dist0[None, :] + xb
            Q = quadrant_integral(s, (m - xa)[:, None], v)
            D = Q[:-1] - Q[1:]  # strip k - i: integral over along-range [k - i - xa, k - i + 1 - xa]
            out += wa * wb * np.einsum("k,ikj->ij", ind, D[idx])
    return out


def _corner_field(s: float, du: np.ndarray, dv: np.ndarray) -> np.ndarray:
    out = np.zeros((len(du), len(dv)))
    for xa, wa in zip(_GL_X, _GL_W):
        for xb, wb in zip(_GL_X, _GL_W):
            out += wa * wb * quadrant_integral(s, (du + xa)[:, None], (dv + xb)[None, :])
    return out


@lru_cache(maxsize=64)
def _exterior_fields_cached(s, h, nx, ny, omega, bottom, top, left, right) -> dict:
    bottom, top, left, right = (np.frombuffer(b, dtype=np.int8) for b in (bottom, top, left, right))
    i_low = np.arange(nx, dtype=float)  # distance of cell i's left side to x = 0
    j_low = np.arange(ny, dtype=float)
    # flip so that "distance to the edge" grows with the index for the far edges
    i_high = i_low[::-1]
    j_high = j_low[::-1]
    om = np.zeros((nx, ny), dtype=bool)
    om[omega[0]:omega[2], omega[1]:omega[3]] = True
    scale = h ** (2.0 - s)
    fields = {}
    for lab in (-1, 0, 1):
        f = _edge_field(s, bottom, nx, j_low, lab)
        f += _edge_field(s, top, nx, j_high, lab)
        f += _edge_field(s, left, ny, i_low, lab).T
        f += _edge_field(s, right, ny, i_high, lab).T
        corners = (
            (bottom[0], i_low, j_low),
            (bottom[-1], i_high, j_low),
            (top[0], i_low, j_high),
            (top[-1], i_high, j_high),
        )
        for c, du, dv in corners:
            if c == lab:
                f += _corner_field(s, du, dv)
        f = np.where(om, f * scale, 0.0)
        f.setflags(write=False)
        fields[lab] = f
    return fields


def exterior_fields(tab: OffsetWeightTable, g: GridPartition2D) -> dict[int, np.ndarray] | None:
    """Per omega cell, its interaction with the part of each phase lying beyond the frame.

    ``None`` when the grid truncates at the frame.  Cells outside omega get 0
    (pairs with both points outside omega never enter Per^s_Omega).
    """
    if g.far_field == "truncate":
        return None
    lab = g.labels
    key = tuple(np.ascontiguousarray(a, dtype=np.int8).tobytes() for a in (lab[:, 0], lab[:, -1], lab[0, :], lab[-1, :]))
    return _exterior_fields_cached(tab.s, tab.h, g.frame.nx, g.frame.ny, g.omega, *key)


def l_exterior(tab: OffsetWeightTable, g: GridPartition2D, A: np.ndarray, labels) -> float:
    """Interaction of the omega cells of A with the beyond-frame part of the given phases."""
    ext = exterior_fields(tab, g)
    if ext is None:
        return 0.0
    A = np.asarray(A, dtype=bool) & g.omega_mask
    return math.fsum(_masked_sum(ext[k], A) for k in sorted(set(labels)))


def per_s_omega_2d(tab: OffsetWeightTable, g: GridPartition2D, i: int, j: int, method: str = "fft") -> float:
    check_label(i)
    check_label(j)
    if i == j:
        raise ValueError("per_s_omega_2d needs two different phases")
    Ei, Ej = g.phase_mask(i), g.phase_mask(j)
    return math.fsum([
        per_s_masks(tab, Ei, Ej, g.omega_mask, method),
        l_exterior(tab, g, Ei, (j,)),
        l_exterior(tab, g, Ej, (i,)),
    ])


def per_s_2d(tab: OffsetWeightTable, g: GridPartition2D, i: int, method: str = "fft") -> float:
    E = g.phase_mask(i)
    others = tuple(k for k in (-1, 0, 1) if k != i)
    return math.fsum([
        per_s_masks(tab, E, ~E, g.omega_mask, method),
        l_exterior(tab, g, E, others),
        l_exterior(tab, g, ~E, (i,)),
    ])


def pair_terms_2d(tab: OffsetWeightTable, g: GridPartition2D) -> dict[tuple[int, int], float]:
    """All three Per^s_Omega(E_i, E_j), sharing six correlations."""
    corr = correlator(tab, g.frame.shape)
    om = g.omega_mask
    masks = {k: g.phase_mask(k) for k in (-1, 0, 1)}
    full = {k: corr.field(m) for k, m in masks.items()}
    inner = {k: corr.field(m & om) for k, m in masks.items()}
    ext = exterior_fields(tab, g)
    out = {}
    for i, j in ((-1, 0), (-1, 1), (0, 1)):
        terms = [_masked_sum(full[j], masks[i] & om), _masked_sum(inner[j], masks[i] & ~om)]
        if ext is not None:
            terms += [_masked_sum(ext[j], masks[i] & om), _masked_sum(ext[i], masks[j] & om)]
        out[(i, j)] = math.fsum(terms)
    return out


def classical_per_masks(A: np.ndarray, B: np.ndarray, om: np.ndarray, h: float, closure: bool = False) -> float:
    """h times the number of A|B cell edges with midpoint in omega (or its closure)."""
    A = np.asarray(A, dtype=bool)
    B = np.asarray(B, dtype=bool)
    om = np.asarray(om, dtype=bool)
    # an edge between two cells lies in the open omega iff both cells are in omega,
    # and in the closure iff at least one of them is
    join = (lambda p, q: p | q) if closure else (lambda p, q: p & q)
    vx = ((A[:-1, :] & B[1:, :]) | (B[:-1, :] & A[1:, :])) & join(om[:-1, :], om[1:, :])
    hz = ((A[:, :-1] & B[:, 1:]) | (B[:, :-1] & A[:, 1:])) & join(om[:, :-1], om[:, 1:])
    return h * int(vx.sum() + hz.sum())


def classical_per_pair(g: GridPartition2D, i: int, j: int, closure: bool = False) -> float:
    if i == j:
        raise ValueError("classical_per_pair needs two different phases")
    return classical_per_masks(g.phase_mask(i), g.phase_mask(j), g.omega_mask, g.h, closure)


def classical_per_2d(g: GridPartition2D, i: int, closure: bool = False) -> float:
    E = g.phase_mask(i)
    return classical_per_masks(E, ~E, g.omega_mask, g.h, closure)


def truncation_bound(s: float, om_cells: int, h: float, D: float) -> float:
    """Upper bound for all interactions between omega and the region beyond distance D."""
    s = check_order(s)
    if not D > 0:
        raise ValueError(f"distance D must be positive, got {D}")
    return 2.0 * math.pi * om_cells * h * h / (s * D ** s)


def frame_margin(g: GridPartition2D) -> float:
    """Distance from omega to the frame boundary."""
    i0, j0, i1, j1 = g.omega
    return g.h * min(i0, j0, g.frame.nx - i1, g.frame.ny - j1)


def omega_mask_of(g: GridPartition2D, omega) -> np.ndarray:
    return omega_mask(g.frame, omega)
