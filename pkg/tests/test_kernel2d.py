from __future__ import annotations

import math
import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nclab import kernel2d
from nclab.geometry import Frame2D, GridPartition2D
from nclab.kernel2d import (
    QuadratureError,
    QuadratureWarning,
    build_offset_table,
    classical_per_2d,
    classical_per_pair,
    l_grid,
    load_table,
    pair_terms_2d,
    per_s_2d,
    per_s_omega_2d,
    quadrant_integral,
    save_table,
    truncation_bound,
)

from conftest import random_grid, vertical_split


def tent_oracle(s, dx, dy):
    """Unit-cell pair integral written as a tent-weighted integral over the difference vector."""
    T = lambda t: max(0, 1 - abs(t))  # noqa: E731
    f = lambda x, y: T(x - dx) * T(y - dy) * (x * x + y * y) ** (-(2 + s) / 2)  # noqa: E731
    with mpmath.workdps(15):
        return float(mpmath.quad(f, [dx - 1, dx, dx + 1], [dy - 1, dy, dy + 1]))


@pytest.mark.parametrize("s,offset", [(0.3, (1, 0)), (0.5, (1, 1)), (0.8, (1, 1)), (0.5, (2, 1)), (0.8, (0, 4)), (0.3, (3, 3))])
def test_table_against_tent_integral(s, offset):
    tab = build_offset_table(s, 1.0)
    assert tab.weight(*offset) == pytest.approx(tent_oracle(s, *offset), rel=2e-4)


def test_far_entry_against_refinement():
    tab = build_offset_table(0.5, 1.0)
    # deeper subdivision is the reference; the plain midpoint value 4^-2.5 sits 3.4% low
    ref = kernel2d._subdivided(0.5, np.array([(4, 0)]), 9)[0]
    assert tab.weight(0, 4) == pytest.approx(ref, rel=2e-4)
    assert tab.weight(0, 4) == pytest.approx(4**-2.5, rel=0.04)
    assert tab.weight(0, 20) == 20**-2.5


def test_table_symmetry_and_scaling():
    t1 = build_offset_table(0.5, 1.0)
    th = build_offset_table(0.5, 0.125)
    assert t1.weight(1, 2) == t1.weight(2, 1) == t1.weight(-1, 2) == t1.weight(1, -2)
    for o in [(1, 0), (2, 3), (7, 7), (9, 1)]:
        assert th.weight(*o) == t1.weight(*o) * 0.125**1.5
    with pytest.raises(ValueError):
        t1.weight(0, 0)


def test_cache_file_round_trip(tmp_path):
    tab = build_offset_table(0.37, 0.01, far_cutoff=5, near_depth=4)
    path = tmp_path / "w.bin"
    save_table(tab, path)
    back = load_table(path)
    assert (back.s, back.h, back.far_cutoff, back.near_depth) == (tab.s, tab.h, tab.far_cutoff, tab.near_depth)
    assert np.array_equal(back.near, tab.near)
    (tmp_path / "junk.bin").write_bytes(b"nope")
    with pytest.raises(ValueError):
        load_table(tmp_path / "junk.bin")


def test_consistency_gate_and_high_order_warning():
    with pytest.raises(QuadratureError):
        build_offset_table(0.9, 1.0, near_depth=0)
    with pytest.warns(QuadratureWarning):
        build_offset_table(0.97, 1.0)


def test_single_pair_and_far_bound():
    tab = build_offset_table(0.5, 1.0)
    A = np.zeros((12, 12), dtype=bool)
    B = A.copy()
    A[3, 3] = True
    B[3, 4] = True
    assert l_grid(tab, A, B) == pytest.approx(tab.weight(0, 1), rel=1e-12)
    A2 = np.zeros((40, 40), dtype=bool)
    B2 = A2.copy()
    A2[:3, :3] = True
    B2[30:33, :3] = True
    D = 27.0
    assert l_grid(tab, A2, B2) <= 9 * 9 * D ** -2.5 * 1.02


def test_overlap_rejected():
    tab = build_offset_table(0.5, 1.0)
    A = np.ones((4, 4), dtype=bool)
    with pytest.raises(ValueError):
        l_grid(tab, A, A)


masks = st.integers(0, 2**31 - 1).map(lambda seed: np.random.default_rng(seed).integers(0, 3, size=(14, 11)))


@settings(max_examples=25)
@given(masks, st.sampled_from([0.2, 0.5, 0.85]))
def test_fft_matches_direct_and_is_additive(lab, s):
    tab = build_offset_table(s, 0.1)
    A, B1, B2 = lab == 0, lab == 1, lab == 2
    fft = l_grid(tab, A, B1 | B2)
    assert fft == pytest.approx(l_grid(tab, A, B1 | B2, method="direct"), rel=1e-9)
    assert fft == pytest.approx(l_grid(tab, A, B1) + l_grid(tab, A, B2), rel=1e-12)
    assert l_grid(tab, B1, A) == pytest.approx(fft - l_grid(tab, A, B2), rel=1e-9)


@pytest.mark.parametrize("far_field", ["truncate", "extend"])
def test_grid_partition_identities(rng, far_field):
    tab = build_offset_table(0.5, 1 / 32)
    for _ in range(3):
        g = random_grid(rng, far_field=far_field)
        pair = pair_terms_2d(tab, g)
        for i, j in pair:
            assert pair[(i, j)] == pytest.approx(per_s_omega_2d(tab, g, i, j), rel=1e-10)
            assert pair[(i, j)] == pytest.approx(per_s_omega_2d(tab, g, j, i), rel=1e-12)
        get = lambda i, j: pair[(min(i, j), max(i, j))]  # noqa: E731
        for i in (-1, 0, 1):
            j, k = (x for x in (-1, 0, 1) if x != i)
            assert per_s_2d(tab, g, i) == pytest.approx(get(i, j) + get(i, k), rel=1e-10)


def test_increment_formula_on_grid(rng):
    tab = build_offset_table(0.6, 1 / 32)
    g = random_grid(rng)
    E = g.phase_mask(1)
    A = np.zeros_like(E)
    A[10:16, 8:20] = True
    A &= E & g.omega_mask
    g2 = g.relabel(A, 0)
    lhs = per_s_2d(tab, g, 1) - per_s_2d(tab, g2, 1)
    rhs = l_grid(tab, A, ~E) - l_grid(tab, A, E & ~A)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_empty_and_full_phases():
    tab = build_offset_table(0.5, 1 / 16)
    g = vertical_split(16, 1 / 16)
    assert per_s_omega_2d(tab, g, 0, 1) == 0.0
    full = g.with_labels(np.ones((16, 16), dtype=np.int8))
    assert per_s_2d(tab, full, 1) == 0.0
    with pytest.raises(ValueError):
        per_s_omega_2d(tab, g, 1, 1)


def test_half_planes_scaled_toward_interface_length():
    # the scaled value approaches the interface length as s grows; checked loosely on a coarse grid
    n, h = 64, 1 / 48
    g = vertical_split(n, h, omega=(8, 8, 56, 56), far_field="extend")
    from nclab.limits import nu

    L = 48 * h
    vals = []
    for s in (0.5, 0.8):
        tab = build_offset_table(s, h)
        v = per_s_omega_2d(tab, g, -1, 1)
        assert v > 0
        vals.append(abs(s * (1 - s) / nu(2, s) * v - L))
    assert vals[1] < vals[0]


def test_classical_counts():
    n, h = 18, 1 / 16
    g = vertical_split(n, h, omega=(1, 1, 17, 17))
    assert classical_per_pair(g, -1, 1) == pytest.approx(1.0)
    assert classical_per_pair(g, -1, 0) == 0.0
    lab = np.full((n, n), -1, dtype=np.int8)
    lab[6:10, 6:10] = 1
    isl = g.with_labels(lab)
    assert classical_per_2d(isl, 1) == pytest.approx(16 * h)
    # edges on the boundary of omega count only in the closure
    edge = g.with_labels(np.where(np.arange(n)[:, None] < 1, -1, 1).astype(np.int8) * np.ones((1, n), dtype=np.int8))
    assert classical_per_pair(edge, -1, 1) == 0.0
    assert classical_per_pair(edge, -1, 1, closure=True) == pytest.approx(16 * h)


def test_truncation_bound_examples():
    assert truncation_bound(0.5, 1, 1.0, 100.0) == pytest.approx(2 * math.pi * 0.1 / 0.5, rel=1e-14)
    assert truncation_bound(0.5, 4, 0.5, 10.0) / truncation_bound(0.5, 4, 0.5, 20.0) == pytest.approx(2**0.5)
    assert truncation_bound(0.5, 4, 0.5, 1e300) < 1e-140


@given(st.floats(0.1, 0.9), st.floats(-3, 3), st.floats(0.05, 3))
@settings(max_examples=30)
def test_quadrant_integral_against_quadrature(s, u, v):
    # integrate in polar coordinates over the quadrant {x > u, y > v}
    def inner(th):
        c, sn = math.cos(th), math.sin(th)
        r0 = v / sn
        if u > 0:
            r0 = max(r0, u / c) if c > 0 else math.inf
        elif c < 0:
            return 0.0 if u / c <= r0 else (r0 ** (-s) - (u / c) ** (-s)) / s
        return r0 ** (-s) / s
    with mpmath.workdps(20):
        ref = float(mpmath.quad(inner, sorted({0.0, math.pi / 2, math.atan2(v, u), math.pi})))
    assert float(quadrant_integral(s, u, v)) == pytest.approx(ref, rel=1e-8)
    with pytest.raises(ValueError):
        quadrant_integral(s, u, -v)


def test_extend_matches_padded_frames(rng):
    n, h = 16, 1 / 16
    lab = np.kron(rng.integers(-1, 2, (4, 4)), np.ones((4, 4), dtype=int)).astype(np.int8)
    tab = build_offset_table(0.5, h)
    base = None
    trunc = []
    for M in (0, 8, 32):
        big = np.pad(lab, M, mode="edge")
        frame = Frame2D(h, n + 2 * M, n + 2 * M)
        om = (2 + M, 2 + M, 14 + M, 14 + M)
        ext = pair_terms_2d(tab, GridPartition2D(frame, big, om, "extend"))
        trunc.append(pair_terms_2d(tab, GridPartition2D(frame, big, om, "truncate")))
        if base is None:
            base = ext
        for k in base:
            assert ext[k] == pytest.approx(base[k], rel=1e-3)
    for k in base:
        # truncated frames approach the extended value from below as the frame grows
        assert trunc[0][k] < trunc[1][k] < trunc[2][k] < base[k]
