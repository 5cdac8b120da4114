import math

import numpy as np
import pytest

from latticecf.lattice import codeword_of_digits, codeword_of_index, coset_index
from latticecf.relay import (
    CfConfig,
    CfConfigError,
    combine,
    dest_decode_relay,
    dest_reconstruct,
    embed_index,
    relay_compress,
    relay_encode,
    simulate_cf,
    tx_encode,
)
from latticecf.streams import counter_integers, counter_normals, counter_uniforms

BASE = dict(P1=100.0, P2=1.1e5, N2=1.0, N3=1.0, D=0.25, n=8, B=50)


def cf(**kw):
    return CfConfig(**{**BASE, **kw})


def _dither(pair, seed, stream, count, lattice="coarse"):
    lat = getattr(pair, lattice)
    return lat.mod(counter_uniforms(seed, stream, 0, count, pair.n) @ lat.basis)


def test_config_gate_on_compression_rate():
    with pytest.raises(CfConfigError, match="R_hat <= R'"):
        cf(k1=4, k2=8, kq=16)
    cf(k1=4, k2=8, kq=8)


def test_ideal_feasibility_flag():
    assert cf().ideal_feasible
    # a weak relay link cannot carry a fine description
    weak = CfConfig(P1=100, P2=1.0, N2=1, N3=1, D=0.25)
    assert not weak.ideal_feasible
    assert weak.ideal_Rhat > weak.ideal_Rprime


def test_codebook_powers_are_exact():
    C1, C2, Cq = cf(k1=4, k2=8, kq=8).codebooks()
    assert C1.coarse.second_moment == pytest.approx(100.0, rel=1e-12)
    assert C2.coarse.second_moment == pytest.approx(1.1e5, rel=1e-12)
    assert Cq.fine.second_moment == pytest.approx(0.25, rel=1e-12)


def test_tx_encode_examples():
    C1, _, _ = cf(k1=4, k2=8, kq=8).codebooks()
    assert np.all(tx_encode(C1, 0, np.zeros(8)) == 0)
    u1 = _dither(C1, 1, "u1", 1)[0]
    xs = {tuple(np.round(tx_encode(C1, w, u1), 9)) for w in range(50)}
    assert len(xs) == 50
    with pytest.raises(Exception):
        tx_encode(C1, 4 ** 8, u1)


def test_relay_compress_examples():
    cfg = cf(k1=4, k2=8, kq=8)
    _, _, Cq = cfg.codebooks()
    I, i = relay_compress(Cq, np.zeros(8), np.zeros(8))
    assert np.all(I == 0) and np.all(i == 0)
    y2 = counter_normals(2, "y", 0, 20_000, 8, 10.0)
    uq = _dither(Cq, 2, "uq", 20_000, "fine")
    I, digits = relay_compress(Cq, y2, uq)
    e_q = Cq.fine.mod(y2 + uq)
    assert np.mean(e_q ** 2) == pytest.approx(0.25, rel=0.02)
    np.testing.assert_allclose(codeword_of_digits(Cq, digits), I, atol=1e-9)
    for row in range(5):
        idx = coset_index(Cq, I[row])
        np.testing.assert_allclose(codeword_of_index(Cq, idx), I[row], atol=1e-9)


def test_relay_encode_examples():
    _, C2, _ = cf(k1=4, k2=8, kq=8).codebooks()
    u2 = _dither(C2, 3, "u2", 1)[0]
    np.testing.assert_allclose(relay_encode(C2, 0, u2), C2.coarse.mod(u2))
    with pytest.raises(CfConfigError):
        relay_encode(C2, 8 ** 8, u2)
    with pytest.raises(CfConfigError):
        embed_index(np.full(8, 9), 8)
    digits = counter_integers(3, "i", 0, 500, 8, 4)
    emb = embed_index(digits, 8)
    assert len({tuple(r) for r in emb}) == len({tuple(r) for r in digits})


def test_relay_decode_thresholds():
    cfg = CfConfig(P1=0.0 + 1e-12, P2=100.0, N2=1, N3=1e-10, D=0.25, k2=8, kq=8)
    _, C2, _ = cfg.codebooks()
    digits = counter_integers(4, "i", 0, 200, 8, 8)
    u2 = _dither(C2, 4, "u2", 200)
    X2 = C2.coarse.mod(codeword_of_digits(C2, digits) + u2)
    t2 = dest_decode_relay(C2, X2, u2, 1.0)
    np.testing.assert_allclose(t2, codeword_of_digits(C2, digits), atol=1e-9)

    ok = simulate_cf(cf(B=20, k1=4, k2=8, kq=8), runs=60)
    assert ok.t2_err < 1e-2  # 1200 relay blocks, R' about 0.6 of its bound
    bad = simulate_cf(cf(B=20, k1=4, k2=128, kq=8), runs=60)
    assert bad.t2_err > 0.9  # R' = 7 bits against a 5.05-bit bound


def test_reconstruction_identity():
    cfg = cf(k1=4, k2=8, kq=8)
    C1, _, Cq = cfg.codebooks()
    T = 5000
    w = counter_integers(5, "w", 0, T, 8, 4)
    X1 = tx_encode(C1, w, _dither(C1, 5, "u1", T))
    z2 = counter_normals(5, "z2", 0, T, 8)
    z3 = counter_normals(5, "z3", 0, T, 8)
    uq = _dither(Cq, 5, "uq", T, "fine")
    Y2 = X1 + z2
    I, _ = relay_compress(Cq, Y2, uq)
    y2_hat = dest_reconstruct(Cq, I, uq, X1 + z3, cfg.alpha2)
    e_q = Cq.fine.mod(Y2 + uq)
    np.testing.assert_allclose(y2_hat, Y2 - e_q, atol=1e-9)


def test_combining_weights():
    cfg = CfConfig(P1=2.0, P2=10.0, N2=1.5, N3=2.0, D=0.5)
    assert cfg.n_eff == pytest.approx(1.0, rel=1e-15)
    useless = CfConfig(P1=2.0, P2=10.0, N2=1e12, N3=2.0, D=0.5)
    y3 = np.arange(8.0)
    np.testing.assert_allclose(combine(y3, np.full(8, 5.0), useless), y3, atol=1e-9)


def test_chained_never_beats_genie_reset():
    cfg = cf(B=20, k1=4, k2=64, kq=8)
    chained = simulate_cf(cfg, runs=60, mode="chained")
    genie = simulate_cf(cfg, runs=60, mode="genie-reset")
    assert chained.t2_err > 0.5
    assert chained.msg_err >= genie.msg_err
    assert chained.msg_err > 0.5 > genie.msg_err


def test_message_error_falls_with_rate():
    errs = [simulate_cf(cf(B=20, k1=k1, k2=8, kq=8), runs=100).msg_err
            for k1 in (16, 11, 8, 4)]
    assert all(a >= b for a, b in zip(errs, errs[1:]))
    assert errs[0] > 0.5 and errs[-1] < 1e-2


def test_combined_residual_matches_effective_noise():
    rep = simulate_cf(cf(k1=4, k2=8, kq=8), runs=200)
    assert rep.eq_var_hat == pytest.approx(0.25, rel=0.02)
    assert abs(rep.comb_resid_var - rep.comb_resid_pred) < 3 * rep.comb_resid_se


def test_vanishing_noise_gives_no_errors():
    cfg = CfConfig(P1=100.0, P2=1.1e5, N2=1e-6, N3=1e-6, D=1e-6, k1=4, k2=8, kq=8, B=10)
    for mode in ("chained", "genie-reset"):
        rep = simulate_cf(cfg, runs=50, mode=mode)
        assert rep.msg_err == rep.t2_err == rep.wrap_rate == 0.0


def test_report_is_deterministic():
    cfg = cf(B=10, k1=11, k2=8, kq=8)
    a = simulate_cf(cfg, runs=30)
    assert a == simulate_cf(cfg, runs=30)
    other = simulate_cf(cf(B=10, seed=43, k1=11, k2=8, kq=8), runs=30)
    assert other.digest != a.digest
    assert a.R_eff == pytest.approx(math.log2(11) * 10 / 11)


def test_bad_mode_rejected():
    with pytest.raises(CfConfigError):
        simulate_cf(cf(), mode="oracle")
