from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclab import kernel2d
from nclab.summation import block_sum, ordered_map, worker_count

from conftest import random_grid


@given(st.lists(st.floats(-1e6, 1e6), max_size=300), st.integers(1, 64))
def test_block_sum_is_order_independent_within_blocks(vals, block):
    assert block_sum(vals, block) == pytest.approx(math.fsum(vals), rel=1e-15, abs=1e-9)
    assert block_sum(vals, 10**6) == math.fsum(vals)


def test_ordered_map_keeps_order():
    items = list(range(50))
    assert ordered_map(lambda x: x * x, items, workers=4) == [x * x for x in items]


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("NCL_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("NCL_THREADS", "0")
    with pytest.raises(ValueError):
        worker_count()
    monkeypatch.setenv("NCL_THREADS", "two")
    with pytest.raises(ValueError):
        worker_count()


def test_direct_sum_bit_identical_across_worker_counts(monkeypatch, rng):
    g = random_grid(rng, n=48, h=1 / 48)
    tab = kernel2d.build_offset_table(0.5, g.h)
    A, B = g.phase_mask(1), g.phase_mask(-1)
    out = []
    for n in ("1", "3", "8"):
        monkeypatch.setenv("NCL_THREADS", n)
        out.append(kernel2d.l_grid(tab, A, B, method="direct"))
    assert out[0] == out[1] == out[2]
