import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticecf.streams import DitherSource, counter_integers, counter_normals, counter_uniforms


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 10_000), st.integers(1, 30), st.integers(1, 13))
def test_batch_equals_one_at_a_time(seed, start, count, dims):
    batch = counter_uniforms(seed, "s", start, count, dims)
    rows = np.vstack([counter_uniforms(seed, "s", start + t, 1, dims) for t in range(count)])
    assert np.array_equal(batch, rows)


def test_streams_and_seeds_are_independent_keys():
    a = counter_uniforms(1, "X", 0, 4, 4)
    assert not np.array_equal(a, counter_uniforms(1, "Y", 0, 4, 4))
    assert not np.array_equal(a, counter_uniforms(2, "X", 0, 4, 4))
    assert np.array_equal(a, counter_uniforms(1, "X", 0, 4, 4))


def test_uniform_range_and_moments():
    u = counter_uniforms(0, "u", 0, 100_000, 3)
    assert u.min() >= 0.0 and u.max() < 1.0
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / u.size)


def test_normal_moments():
    z = counter_normals(0, "z", 0, 200_000, 5, std=2.0)
    se = 2.0 / np.sqrt(z.size)
    assert abs(z.mean()) < 4 * se
    assert z.var() == pytest.approx(4.0, rel=0.01)
    # odd dimension uses the first half of the last Box-Muller pair only
    assert counter_normals(0, "z", 3, 1, 5).shape == (1, 5)


def test_integers_in_range():
    w = counter_integers(5, "w", 0, 10_000, 8, 7)
    assert w.min() == 0 and w.max() == 6
    counts = np.bincount(w.ravel(), minlength=7)
    assert np.all(np.abs(counts / counts.mean() - 1) < 0.05)


def test_dither_source_advances():
    src = DitherSource(3, "d")
    first = src.uniforms(4, 2)
    assert src.counter == 2
    again = src.at(0).uniforms(4, 2)
    assert np.array_equal(first, again)
    assert np.array_equal(src.uniforms(4), counter_uniforms(3, "d", 2, 1, 4))
