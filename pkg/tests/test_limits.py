from __future__ import annotations

import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nclab import kernel2d
from nclab.energy import f_star
from nclab.geometry import Domain1D, Partition1D
from nclab.limits import (
    TARGETS,
    boundary_radius_1d,
    cross_interaction_decay,
    nu,
    omega_measure,
    phase_separation,
    recovery_energy_1d,
    s_sweep,
    separate_phases,
)

from conftest import vertical_split

OM = Domain1D(-1, 1)
HALF = Partition1D((0.0,), (0, 1))
DIRECT = Partition1D((0.0,), (-1, 1))


def nu_gamma(s):
    """nu(2, s) with the radial integral written through Gamma functions."""
    radial = mpmath.sqrt(mpmath.pi) / 2 * mpmath.gamma((1 + s) / 2) / mpmath.gamma(1 + s / 2)
    return float(2 * (1 - mpmath.mpf(2) ** -s) * 2 * radial)


def test_ball_volumes():
    assert omega_measure(0) == 1.0
    assert omega_measure(1) == pytest.approx(2.0, rel=1e-15)
    assert omega_measure(2) == pytest.approx(math.pi, rel=1e-15)
    with pytest.raises(ValueError):
        omega_measure(-1)


@pytest.mark.parametrize("s", [0.1, 0.3, 0.5, 0.77, 0.95])
def test_nu_against_gamma_form(s):
    assert nu(2, s) == pytest.approx(nu_gamma(s), rel=1e-10)


def test_nu_values():
    assert nu(2, 1.0) == pytest.approx(2.0, rel=1e-12)
    assert nu(2, 0.5) == pytest.approx(1.40374, abs=1e-4)
    assert nu(2, 0.5) == pytest.approx(1.4037085997664522, rel=1e-12)
    assert abs(nu(2, 0.999) - 2) <= 0.01
    assert nu(1, 0.5) == 0.0
    with pytest.raises(ValueError):
        nu(3, 0.5)


def test_normalization_ratio_near_one():
    s = 0.99
    assert abs(s * nu(2, 1.0) / nu(2, s) - 1) <= 0.02


def test_half_line_sweep():
    rows = s_sweep(HALF, OM, (1, 4, 1), [0.5, 0.7, 0.9, 0.99, 0.999], target="phase:1")
    assert boundary_radius_1d(HALF, OM) == 0.5
    for r in rows:
        assert r.scaled_nu == pytest.approx(2 ** (1 - r.s), rel=1e-12)
        assert r.target_closure == 1.0 and r.target_open == 1.0
        assert abs(r.scaled_nu - r.target_closure) <= r.bound_1d * (1 + 1e-12)
    assert rows[2].scaled_nu == pytest.approx(1.0717734625, rel=1e-9)
    lead = [abs((2 - 2 ** (1 - r.s)) * 0.5 ** (1 - r.s) - 1) for r in rows]
    assert all(b >= l for b, l in zip((r.bound_1d for r in rows), lead))


def test_full_line_sweep_is_zero():
    for r in s_sweep(Partition1D.uniform(1), OM, (1, 4, 1), [0.5, 0.9]):
        assert r.raw == 0 and r.target_open == 0 and r.target_closure == 0


@settings(max_examples=25)
@given(
    st.lists(st.integers(-90, 90), min_size=1, max_size=4, unique=True).map(lambda v: sorted(x / 100 for x in v)),
    st.data(),
    st.sampled_from([t for t in TARGETS if t != "star"]),
)
def test_bound_holds_with_k_from_first_order(bps, data, target):
    labs = data.draw(st.lists(st.sampled_from([-1, 0, 1]), min_size=len(bps) + 1, max_size=len(bps) + 1))
    p = Partition1D(tuple(bps), tuple(labs))
    rows = s_sweep(p, OM, (1, 4, 1), [0.5, 0.6, 0.75, 0.9, 0.99, 0.999], target=target)
    for r in rows:
        assert abs(r.scaled_nu - r.target_closure) <= r.bound_1d * (1 + 1e-9) + 1e-12


def test_star_target_has_no_pointwise_bound():
    rows = s_sweep(DIRECT, OM, (1, 4, 1), [0.5, 0.9, 0.999], target="star")
    assert all(math.isnan(r.bound_1d) for r in rows)
    # the pointwise limit is the classical energy 4, not the relaxed value 2
    assert rows[-1].target_closure == 2.0 and rows[-1].scaled_nu == pytest.approx(4.0, rel=2e-2)


def test_sweep_validation():
    with pytest.raises(ValueError):
        s_sweep(HALF, OM, (1, 4, 1), [0.5], target="bogus")
    with pytest.raises(ValueError):
        s_sweep(HALF, OM, (1, 4, 1), [0.7, 0.5])


def test_grid_sweep_columns():
    g = vertical_split(24, 1 / 16, omega=(4, 4, 20, 20), far_field="extend")
    rows = s_sweep(g, None, (1, 4, 1), [0.5, 0.96], target="phase:1")
    assert rows[0].target_open == pytest.approx(1.0)
    assert not rows[0].warn_quadrature and rows[1].warn_quadrature
    for r in rows:
        assert r.scaled_nu / r.scaled_omega == pytest.approx(r.s * 2 / nu(2, r.s), rel=1e-12)


def test_separation_examples():
    assert separate_phases(HALF, 0.1, OM) == HALF
    assert separate_phases(DIRECT, 0.1, OM) == Partition1D((-0.1, 0.1), (-1, 0, 1))
    assert phase_separation(separate_phases(DIRECT, 0.1, OM), OM) == pytest.approx(0.2)


def test_grid_separation_postcondition():
    g = vertical_split(32, 1 / 32, omega=(2, 2, 30, 30))
    for eps in (0.05, 0.1, 0.2):
        sep = separate_phases(g, eps)
        assert phase_separation(sep) >= eps
        outside = ~g.omega_mask
        assert (sep.labels[outside] == g.labels[outside]).all()


def test_decay_rows():
    sep = separate_phases(DIRECT, 0.1, OM)
    s_list = [0.5, 0.7, 0.9, 0.99]
    rows = cross_interaction_decay(sep, OM, (1, 4, 1), s_list, 0.1)
    for r in rows:
        assert r.value <= r.bound
        assert r.C == pytest.approx(2 * 1 * 2 * 2)
    last = rows[-1]
    assert last.value <= 0.01 * last.C / (0.99 * 0.1**0.99)
    assert last.value < rows[0].value


def test_decay_on_grid():
    g = vertical_split(32, 1 / 32, omega=(2, 2, 30, 30))
    sep = separate_phases(g, 0.1)
    rows = cross_interaction_decay(sep, None, (1, 4, 1), [0.5, 0.9], 0.1)
    for r in rows:
        assert 0 < r.value <= r.bound


def test_recovery_energy_close_to_star_energy():
    row = recovery_energy_1d(DIRECT, OM, (1, 4, 1), 1 - 1e-6, 1e-3)
    assert row.target == f_star((1, 4, 1), DIRECT, OM, closure=True).total == 2.0
    assert abs(row.scaled_energy - row.target) <= 1e-3
    # at s = 0.999 the strip's own perimeter still carries a visible (1-s) eps^(-s) excess
    coarse = recovery_energy_1d(DIRECT, OM, (1, 4, 1), 0.999, 1e-3)
    assert coarse.scaled_energy > row.scaled_energy > row.target
