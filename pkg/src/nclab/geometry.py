"""Domains, 1D interval partitions, 2D grid partitions and constructed regions.

Every value here is immutable after construction.  Phase labels are the
plain integers -1, 0 and +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

PHASES = (-1, 0, 1)

FAR_FIELD_MODES = ("truncate", "extend")

LABEL_CHARS = {"-": -1, "0": 0, "+": 1}
CHAR_FOR_LABEL = {v: k for k, v in LABEL_CHARS.items()}


class GeometryError(ValueError):
    """Invalid geometric input (bad partition, region leaving omega, ...)."""


def check_label(i: int) -> int:
    if i not in PHASES:
        raise GeometryError(f"phase label must be one of -1, 0, 1; got {i!r}")
    return int(i)


# ---------------------------------------------------------------------------
# 1D
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Interval:
    """Open interval (lo, hi); either end may be infinite."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise GeometryError("interval endpoints must not be NaN")
        if lo > hi:
            raise GeometryError(f"interval with lo > hi: ({lo}, {hi})")
        if lo == hi and math.isinf(lo):
            raise GeometryError("degenerate interval at infinity")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def empty(self) -> bool:
        return self.lo == self.hi

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def intersect(self, other: "Interval") -> "Interval":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo >= hi:
            return Interval(0.0, 0.0)
        return Interval(lo, hi)

    def contains_point(self, x: float) -> bool:
        return self.lo < x < self.hi


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of open intervals, kept sorted, disjoint and merged."""

    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize(self.intervals))

    @classmethod
    def of(cls, *pairs: tuple[float, float]) -> "IntervalSet":
        return cls(tuple(Interval(a, b) for a, b in pairs))

    @classmethod
    def real_line(cls) -> "IntervalSet":
        return cls((Interval(-math.inf, math.inf),))

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self):
        return len(self.intervals)

    @property
    def empty(self) -> bool:
        return not self.intervals

    @property
    def measure(self) -> float:
        return sum(I.length for I in self.intervals)

    def pairs(self) -> list[tuple[float, float]]:
        return [(I.lo, I.hi) for I in self.intervals]

    def complement(self) -> "IntervalSet":
        out = []
        prev = -math.inf
        for I in self.intervals:
            if I.lo > prev:
                out.append(Interval(prev, I.lo))
            prev = I.hi
        if prev < math.inf:
            out.append(Interval(prev, math.inf))
        return IntervalSet(tuple(out))

    def intersect(self, other: "IntervalSet | Interval") -> "IntervalSet":
        others = (other,) if isinstance(other, Interval) else other.intervals
        out = []
        for I in self.intervals:
            for J in others:
                K = I.intersect(J)
                if not K.empty:
                    out.append(K)
        return IntervalSet(tuple(out))

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersect(other.complement())

    def contains(self, other: "IntervalSet | Interval") -> bool:
        """Containment up to finitely many points."""
        others = (other,) if isinstance(other, Interval) else other.intervals
        return all(any(I.lo <= J.lo and J.hi <= I.hi for I in self.intervals) for J in others if not J.empty)

    def boundary(self) -> tuple[float, ...]:
        pts = []
        for I in self.intervals:
            pts.extend(x for x in (I.lo, I.hi) if math.isfinite(x))
        return tuple(pts)


def _normalize(intervals: Iterable[Interval]) -> tuple[Interval, ...]:
    items = sorted(I for I in intervals if not I.empty)
    merged: list[Interval] = []
    for I in items:
        if merged and I.lo <= merged[-1].hi:
            last = merged[-1]
            merged[-1] = Interval(last.lo, max(last.hi, I.hi))
        else:
            merged.append(I)
    return tuple(merged)


@dataclass(frozen=True)
class Domain1D:
    """The bounded open interval Omega = (a, b)."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise GeometryError(f"domain needs finite a < b, got ({self.a}, {self.b})")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    @property
    def interval(self) -> Interval:
        return Interval(self.a, self.b)

    @property
    def as_set(self) -> IntervalSet:
        return IntervalSet((self.interval,))

    @property
    def exterior(self) -> IntervalSet:
        return self.as_set.complement()

    @property
    def length(self) -> float:
        return self.b - self.a


@dataclass(frozen=True)
class Partition1D:
    """Three-phase partition of the real line.

    Label ``labels[k]`` holds on ``(x_k, x_{k+1})`` with ``x_0 = -inf`` and
    ``x_{m+1} = +inf``.  Construction normalizes: repeated breakpoints are
    rejected and equal neighbouring labels are merged.
    """

    breakpoints: tuple[float, ...]
    labels: tuple[int, ...]

    def __post_init__(self):
        bps = tuple(float(x) for x in self.breakpoints)
        labs = tuple(check_label(i) for i in self.labels)
        if len(labs) != len(bps) + 1:
            raise GeometryError(
                f"partition needs len(labels) == len(breakpoints) + 1, got {len(labs)} and {len(bps)}"
            )
        if any(not math.isfinite(x) for x in bps):
            raise GeometryError("breakpoints must be finite")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise GeometryError(f"breakpoints must be strictly increasing: {bps}")
        nb, nl = [], [labs[0]]
        for x, lab in zip(bps, labs[1:]):
            if lab != nl[-1]:
                nb.append(x)
                nl.append(lab)
        object.__setattr__(self, "breakpoints", tuple(nb))
        object.__setattr__(self, "labels", tuple(nl))

    @classmethod
    def uniform(cls, label: int) -> "Partition1D":
        return cls((), (label,))

    def pieces(self) -> list[tuple[Interval, int]]:
        ends = (-math.inf,) + self.breakpoints + (math.inf,)
        return [(Interval(ends[k], ends[k + 1]), self.labels[k]) for k in range(len(self.labels))]

    def phase(self, i: int) -> IntervalSet:
        return phase_set_1d(self, i)

    def label_at(self, x: float) -> int:
        k = int(np.searchsorted(np.asarray(self.breakpoints), x, side="right"))
        return self.labels[k]

    def interfaces(self, i: int, j: int) -> tuple[float, ...]:
        """Breakpoints separating phase i from phase j (either side)."""
        return tuple(
            x
            for x, (l, r) in zip(self.breakpoints, zip(self.labels, self.labels[1:]))
            if {l, r} == {i, j}
        )

    def relabel(self, region: IntervalSet, label: int) -> "Partition1D":
        """Return the partition with ``region`` set to ``label``."""
        check_label(label)
        cuts = set(self.breakpoints)
        for I in region:
            cuts.update(x for x in (I.lo, I.hi) if math.isfinite(x))
        cuts = sorted(cuts)
        ends = [-math.inf] + cuts + [math.inf]
        labels = []
        for lo, hi in zip(ends, ends[1:]):
            mid = _midpoint(lo, hi)
            inside = any(I.contains_point(mid) for I in region)
            labels.append(label if inside else self.label_at(mid))
        return Partition1D(tuple(cuts), tuple(labels))

    def with_interior(self, dom: Domain1D, inner: "Partition1D") -> "Partition1D":
        """Keep ``self`` outside ``dom`` and take ``inner`` inside it."""
        result = self
        for I, lab in inner.pieces():
            K = I.intersect(dom.interval)
            if not K.empty:
                result = result.relabel(IntervalSet((K,)), lab)
        return result


def _midpoint(lo: float, hi: float) -> float:
    if math.isinf(lo) and math.isinf(hi):
        return 0.0
    if math.isinf(lo):
        return hi - 1.0
    if math.isinf(hi):
        return lo + 1.0
    return 0.5 * (lo + hi)


def phase_set_1d(p: Partition1D, i: int) -> IntervalSet:
    check_label(i)
    return IntervalSet(tuple(I for I, lab in p.pieces() if lab == i))


def strip_region_1d(p: Partition1D, x0: float, eps: float) -> Interval:
    """One-sided strip of width ``eps`` carved from phase +1 at the (-1|+1) point x0."""
    if not eps > 0:
        raise GeometryError(f"eps must be positive, got {eps}")
    if x0 not in p.breakpoints:
        raise GeometryError(f"x0 = {x0} is not a breakpoint of the partition")
    k = p.breakpoints.index(x0)
    left, right = p.labels[k], p.labels[k + 1]
    if (left, right) == (-1, 1):
        strip = Interval(x0, x0 + eps)
    elif (left, right) == (1, -1):
        strip = Interval(x0 - eps, x0)
    else:
        raise GeometryError(f"x0 = {x0} separates phases {left} and {right}, not -1 and +1")
    if not p.phase(1).contains(strip):
        raise GeometryError(f"strip of width {eps} at x0 = {x0} leaves phase +1")
    return strip


# ---------------------------------------------------------------------------
# 2D
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame2D:
    """Uniform grid of nx by ny square cells of side h; cell (i, j) spans
    [x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h]."""

    h: float
    nx: int
    ny: int
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not self.h > 0:
            raise GeometryError(f"cell size h must be positive, got {self.h}")
        if self.nx < 1 or self.ny < 1:
            raise GeometryError(f"frame needs nx, ny >= 1, got {self.nx} x {self.ny}")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays of shape (nx, ny)."""
        xs = self.origin[0] + (np.arange(self.nx) + 0.5) * self.h
        ys = self.origin[1] + (np.arange(self.ny) + 0.5) * self.h
        return np.meshgrid(xs, ys, indexing="ij")


@dataclass(frozen=True)
class GridPartition2D:
    """Three-phase labeling of a frame with a cell-aligned sub-rectangle omega.

    ``labels`` has shape (nx, ny) and is indexed ``[i, j]``; ``omega`` is
    ``(i0, j0, i1, j1)`` meaning cells ``i0 <= i < i1``, ``j0 <= j < j1``.

    ``far_field`` says what lies beyond the frame: ``"truncate"`` (nothing;
    interactions are cut at the frame) or ``"extend"`` (each boundary cell's
    label continues outward along the edge normal, corner cells fill the
    corner quadrants).
    """

    frame: Frame2D
    labels: np.ndarray
    omega: tuple[int, int, int, int]
    far_field: str = "truncate"

    def __post_init__(self):
        if self.far_field not in FAR_FIELD_MODES:
            raise GeometryError(f"far_field must be one of {FAR_FIELD_MODES}, got {self.far_field!r}")
        labels = np.array(self.labels, dtype=np.int8)
        if labels.shape != self.frame.shape:
            raise GeometryError(f"labels shape {labels.shape} does not match frame {self.frame.shape}")
        if not np.isin(labels, PHASES).all():
            raise GeometryError("labels must take values in {-1, 0, 1}")
        i0, j0, i1, j1 = (int(v) for v in self.omega)
        if not (1 <= i0 < i1 <= self.frame.nx - 1 and 1 <= j0 < j1 <= self.frame.ny - 1):
            raise GeometryError(
                f"omega {self.omega} must lie strictly inside the {self.frame.nx}x{self.frame.ny} frame"
            )
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "omega", (i0, j0, i1, j1))

    @property
    def h(self) -> float:
        return self.frame.h

    @property
    def omega_mask(self) -> np.ndarray:
        return omega_mask(self.frame, self.omega)

    def phase_mask(self, i: int) -> np.ndarray:
        return self.labels == check_label(i)

    def with_labels(self, labels: np.ndarray) -> "GridPartition2D":
        return GridPartition2D(self.frame, labels, self.omega, self.far_field)

    def relabel(self, mask: np.ndarray, label: int) -> "GridPartition2D":
        labels = self.labels.copy()
        labels[np.asarray(mask, dtype=bool)] = check_label(label)
        return self.with_labels(labels)

    def to_string(self) -> str:
        """Row-major label string, bottom row (j = 0) first."""
        return "".join(CHAR_FOR_LABEL[int(v)] for v in self.labels.T.ravel())

    @classmethod
    def from_string(
        cls,
        h: float,
        nx: int,
        ny: int,
        omega: Sequence[int],
        labels: str | Sequence[str],
        origin: tuple[float, float] = (0.0, 0.0),
        far_field: str = "truncate",
    ) -> "GridPartition2D":
        text = "".join(labels) if not isinstance(labels, str) else labels
        text = "".join(text.split())
        bad = set(text) - set(LABEL_CHARS)
        if bad:
            raise GeometryError(f"labels: unexpected characters {sorted(bad)}")
        if len(text) != nx * ny:
            raise GeometryError(f"labels: expected {nx * ny} characters, got {len(text)}")
        arr = np.array([LABEL_CHARS[c] for c in text], dtype=np.int8).reshape(ny, nx).T
        return cls(Frame2D(h, nx, ny, origin), arr, tuple(omega), far_field)


def omega_mask(frame: Frame2D, omega: Sequence[int]) -> np.ndarray:
    i0, j0, i1, j1 = omega
    m = np.zeros(frame.shape, dtype=bool)
    m[i0:i1, j0:j1] = True
    return m


@dataclass(frozen=True)
class CellRegion:
    """A set of frame cells together with its discrete volume."""

    mask: np.ndarray
    h: float

    def __post_init__(self):
        m = np.array(self.mask, dtype=bool)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def volume(self) -> float:
        return self.count * self.h * self.h

    @property
    def empty(self) -> bool:
        return not self.mask.any()


@dataclass(frozen=True)
class LipschitzGraph:
    """Samples of psi on a uniform x' grid over [-r, r], centred at ``center``.

    The sample count must be odd so that the middle sample sits at x' = 0.
    """

    r: float
    samples: tuple[float, ...]
    R: float
    c0: float
    center: tuple[float, float] = (0.0, 0.0)
    positions: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        samples = tuple(float(v) for v in self.samples)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if not (self.r > 0 and self.R > 0):
            raise GeometryError("LipschitzGraph needs r > 0 and R > 0")
        if not 0 < self.c0 < 1:
            raise GeometryError(f"c0 must lie in (0, 1), got {self.c0}")
        m = len(samples)
        if m < 3 or m % 2 == 0:
            raise GeometryError(f"need an odd number (>= 3) of psi samples, got {m}")
        pos = np.linspace(-self.r, self.r, m)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if samples[m // 2] != 0.0:
            raise GeometryError("psi must vanish at the centre sample")
        lip = self.lipschitz_constant()
        bound = self.lipschitz_bound
        if lip > bound * (1 + 1e-12):
            raise GeometryError(f"psi Lipschitz constant {lip:.6g} exceeds c0 R / (4 r) = {bound:.6g}")

    @classmethod
    def flat(cls, r: float, R: float, c0: float = 0.5, m: int = 3, center=(0.0, 0.0)) -> "LipschitzGraph":
        return cls(r, (0.0,) * m, R, c0, center)

    @property
    def lipschitz_bound(self) -> float:
        return self.c0 * self.R / (4 * self.r)

    def lipschitz_constant(self) -> float:
        v = np.asarray(self.samples)
        x = self.positions
        dv = np.abs(v[:, None] - v[None, :])
        dx = np.abs(x[:, None] - x[None, :])
        np.fill_diagonal(dx, np.inf)
        return float((dv / dx).max())

    def __call__(self, xp: np.ndarray) -> np.ndarray:
        return np.interp(xp, self.positions, np.asarray(self.samples))


def strip_region_2d(g: GridPartition2D, psi: LipschitzGraph, eps: float) -> CellRegion:
    """Cells with centres in {psi(x') < x_n < psi(x') + eps, |x'| < r} that are phase +1.

    x' is the horizontal coordinate relative to ``psi.center``.
    """
    if not eps > 0:
        raise GeometryError(f"eps must be positive, got {eps}")
    cx, cy = g.frame.centers()
    xp = cx - psi.center[0]
    yn = cy - psi.center[1]
    cols = np.abs(xp[:, 0]) < psi.r
    if not cols.any():
        return CellRegion(np.zeros(g.frame.shape, dtype=bool), g.h)
    base = psi(xp)
    band = (np.abs(xp) < psi.r) & (yn > base) & (yn < base + eps)

    # the continuous band over the occupied columns has to stay inside omega
    i0, j0, i1, j1 = g.omega
    ox0 = g.frame.origin[0] + i0 * g.h
    ox1 = g.frame.origin[0] + i1 * g.h
    oy0 = g.frame.origin[1] + j0 * g.h
    oy1 = g.frame.origin[1] + j1 * g.h
    xs = cx[cols, 0]
    if xs.min() < ox0 or xs.max() > ox1:
        raise GeometryError("strip columns leave omega")
    lo = psi(xs - psi.center[0]) + psi.center[1]
    if lo.min() < oy0 or (lo + eps).max() > oy1:
        raise GeometryError("strip band leaves omega")
    if (band & ~g.omega_mask).any():
        raise GeometryError("strip cells leave omega")
    return CellRegion(band & (g.labels == 1), g.h)


def pm_edges(g: GridPartition2D | np.ndarray) -> np.ndarray:
    """Midpoints and orientation of all edges shared by a +1 and a -1 cell.

    Returns an array of rows (i_mid, j_mid, vertical) in cell-index units,
    where the edge runs from (i_mid, j_mid) -/+ 0.5 along its direction.
    """
    lab = g.labels if isinstance(g, GridPartition2D) else g
    rows = []
    vx = (lab[:-1, :] * lab[1:, :]) == -1
    ii, jj = np.nonzero(vx)
    rows.append(np.column_stack([ii + 1.0, jj + 0.5, np.ones_like(ii)]))
    hz = (lab[:, :-1] * lab[:, 1:]) == -1
    ii, jj = np.nonzero(hz)
    rows.append(np.column_stack([ii + 0.5, jj + 1.0, np.zeros_like(ii)]))
    return np.concatenate(rows).astype(float) if rows else np.zeros((0, 3))


def interface_neighborhood(g: GridPartition2D, eps: float) -> CellRegion:
    """Omega cells whose centres lie within ``eps`` of a shared (+1, -1) edge."""
    if not eps > 0:
        raise GeometryError(f"eps must be positive, got {eps}")
    edges = pm_edges(g)
    mask = np.zeros(g.frame.shape, dtype=bool)
    if len(edges) == 0:
        return CellRegion(mask, g.h)
    i0, j0, i1, j1 = g.omega
    ci, cj = np.meshgrid(np.arange(i0, i1) + 0.5, np.arange(j0, j1) + 0.5, indexing="ij")
    pts = np.column_stack([ci.ravel(), cj.ravel()])
    r = eps / g.h
    best = np.full(len(pts), np.inf)
    # edge segment: centre (a, b), half-length 0.5 along y if vertical else x
    for chunk in np.array_split(edges, max(1, len(edges) // 256 + 1)):
        a, b, vert = chunk[:, 0], chunk[:, 1], chunk[:, 2].astype(bool)
        dx = pts[:, 0:1] - a[None, :]
        dy = pts[:, 1:2] - b[None, :]
        along = np.where(vert[None, :], dy, dx)
        across = np.where(vert[None, :], dx, dy)
        along = np.maximum(np.abs(along) - 0.5, 0.0)
        d = np.hypot(along, across).min(axis=1)
        best = np.minimum(best, d)
    mask[i0:i1, j0:j1] = (best < r).reshape(ci.shape)
    return CellRegion(mask, g.h)


def interface_neighborhood_1d(p: Partition1D, dom: Domain1D, eps: float) -> IntervalSet:
    """Union of (x_j - eps, x_j + eps) over (-1, +1) points x_j in the closed domain, cut to omega."""
    if not eps > 0:
        raise GeometryError(f"eps must be positive, got {eps}")
    pts = [x for x in p.interfaces(-1, 1) if dom.a <= x <= dom.b]
    return IntervalSet(tuple(Interval(x - eps, x + eps) for x in pts)).intersect(dom.interval)
