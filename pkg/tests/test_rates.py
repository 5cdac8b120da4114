import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticecf import rates

pos = st.floats(1e-3, 1e3)


def test_wz_examples():
    assert rates.wz_rd(1, 1, 1, 0.75) == 0.5
    assert rates.wz_rd(1, 1, 1, 1.5) == 0.0
    assert rates.wz_rd(1, 1, 1, 2.0) == 0.0
    assert rates.wz_rd_alpha1_fixed(1, 1, 1, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert rates.wz_rd_alpha1_fixed(1, 1, 1, 1e12) == pytest.approx(0.0, abs=1e-11)
    assert rates.wz_rd_alpha2_fixed(1, 1, 0.5) == pytest.approx(1.0, abs=1e-15)
    assert rates.wz_rd_alpha2_fixed(1, 1, 2.0) == 0.0
    with pytest.raises(ValueError):
        rates.wz_rd(1, 1, 1, 0.0)


def test_relay_examples():
    assert rates.cf_rate(1, 1, 1, 1) == pytest.approx(0.5 * math.log2(2.25), abs=1e-12)
    assert rates.cf_rate(3, 0, 1, 2) == pytest.approx(0.5 * math.log2(2.5), abs=1e-15)
    assert rates.cf_rate(3, 1e15, 1, 2) == pytest.approx(0.5 * math.log2(1 + 1.5 + 3), abs=1e-9)
    assert rates.relay_channel_rate_Rprime(1, 1, 1) == pytest.approx(0.5 * math.log2(1.5), abs=1e-15)
    assert rates.relay_channel_rate_Rprime(1, 0, 1) == 0.0
    assert rates.compression_D_star(1, 1, 1, 1) == pytest.approx(3.0, abs=1e-15)
    assert rates.compression_D_star(1, 1e12, 1, 1) < 1e-11


def test_degenerate_limits():
    assert rates.conditional_variance(0, 1, 0) == 1
    assert rates.cf_rate(0, 1, 0, 1) == 0.0
    # noiseless relay observation: the relay term tends to P2/N3
    assert rates.cf_rate(1, 1, 0, 1) == pytest.approx(0.5 * math.log2(3.0), abs=1e-15)
    with pytest.raises(ValueError):
        rates.direct_rate(1, 0)
    with pytest.raises(ValueError):
        rates.compression_D_star(1, 0, 1, 1)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, st.floats(0.01, 0.99), st.floats(0.01, 0.99))
def test_wz_strictly_decreasing_in_domain(P, N1, N2, f, g):
    s2 = rates.conditional_variance(P, N1, N2)
    lo, hi = sorted((f * s2, g * s2))
    if hi - lo > 1e-9 * s2:
        assert rates.wz_rd(P, N1, N2, lo) > rates.wz_rd(P, N1, N2, hi)
    assert rates.wz_rd(P, N1, N2, s2 * (1 - 1e-12)) < 1e-11


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, st.floats(0.01, 0.99))
def test_suboptimal_scalings_cost_rate(P, N1, N2, f):
    D = f * rates.conditional_variance(P, N1, N2)
    r = rates.wz_rd(P, N1, N2, D)
    assert rates.wz_rd_alpha1_fixed(P, N1, N2, D) > r
    assert rates.wz_rd_alpha2_fixed(N1, N2, D) > r


@settings(max_examples=200, deadline=None)
@given(pos, st.floats(0, 1e3), pos, pos)
def test_relay_never_hurts(P1, P2, N2, N3):
    direct = rates.direct_rate(P1, N3)
    cf = rates.cf_rate(P1, P2, N2, N3)
    if P2 == 0:
        assert cf == direct
    else:
        assert cf > direct or math.isclose(cf, direct, rel_tol=1e-12)


@settings(max_examples=200, deadline=None)
@given(pos, pos, pos, pos)
def test_cf_rate_is_two_hop_rate_at_D_star(P1, P2, N2, N3):
    D = rates.compression_D_star(P1, P2, N2, N3)
    assert rates.two_hop_rate(P1, N2, N3, D) == pytest.approx(rates.cf_rate(P1, P2, N2, N3), rel=1e-12)


def test_rate_point_is_nonnegative():
    rng = np.random.default_rng(0)
    for _ in range(100):
        P, N1, N2, D, P1, P2, N3 = rng.uniform(0.01, 10, 7)
        rp = rates.rate_point(P, N1, N2, D, P1, P2, N3)
        for v in (rp.wz_rd, rp.wz_rd_a1, rp.wz_rd_a2, rp.cf_rate, rp.Rprime, rp.D_star):
            assert v >= 0
