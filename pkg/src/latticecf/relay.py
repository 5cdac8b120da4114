"""Block-Markov lattice compress-and-forward over the Gaussian relay channel.

Channel: ``Y2 = X1 + Z2`` at the relay and ``Y3 = X1 + X2 + Z3`` at the
destination. In block j the source sends message w(j), the relay sends the
compression index of its observation from block j-1, and the destination
decodes the relay codeword, cleans its observation, rebuilds the relay's
compressed observation from the previous block and decodes w(j-1).
"""
import hashlib
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import rates
from .lattice import (
    base_lattice,
    canonical_codeword,
    codeword_of_digits,
    coset_digits,
    index_digits,
    make_nested_pair,
    scale_to_second_moment,
)
from .streams import counter_integers, counter_normals, counter_uniforms
from .wyner_ziv import ConfigurationError

MODES = ("chained", "genie-reset")
RUN_STRIDE = 1 << 32


class CfConfigError(ConfigurationError):
    pass


@dataclass(frozen=True)
class CfConfig:
    """Relay channel instance and codebook sizes.

    ``k1``, ``k2`` and ``kq`` are the nesting factors of the source,
    relay and quantization codebooks, so the rates are their base-2 logs.
    """

    P1: float
    P2: float
    N2: float
    N3: float
    D: float
    n: int = 8
    B: int = 10
    k1: int = 2
    k2: int = 4
    kq: int = 4
    seed: int = 42
    lattice: str = "Z"

    def __post_init__(self):
        problems = []
        for key in ("P1", "P2", "N2", "N3", "D"):
            value = getattr(self, key)
            if not value > 0:
                problems.append(f"{key} must be > 0, got {value}")
        for key in ("k1", "k2", "kq"):
            if getattr(self, key) < 2:
                problems.append(f"{key} must be >= 2, got {getattr(self, key)}")
        if self.B < 2:
            problems.append(f"B must be >= 2, got {self.B}")
        if self.n < 1:
            problems.append(f"n must be >= 1, got {self.n}")
        if self.kq > self.k2:
            problems.append(
                f"compression rate R_hat = log2(kq) = {math.log2(self.kq):.4g} exceeds relay "
                f"codebook rate R' = log2(k2) = {math.log2(self.k2):.4g}; "
                "R_hat <= R' is required so every compression index maps to a distinct "
                "relay codeword")
        if problems:
            raise CfConfigError("; ".join(problems))

    @property
    def R(self):
        return math.log2(self.k1)

    @property
    def Rprime(self):
        return math.log2(self.k2)

    @property
    def Rhat(self):
        return math.log2(self.kq)

    @property
    def alpha2(self):
        return self.P1 / (self.P1 + self.N3)

    @property
    def beta(self):
        """MMSE scale for decoding the relay codeword with X1 + Z3 as noise."""
        return self.P2 / (self.P2 + self.P1 + self.N3)

    @property
    def n_eff(self):
        return 1.0 / (1.0 / self.N3 + 1.0 / (self.N2 + self.D))

    @property
    def alpha_c(self):
        return self.P1 / (self.P1 + self.n_eff)

    @property
    def quant_coarse_target(self):
        return self.N2 + self.P1 * self.N3 / (self.P1 + self.N3) + self.D

    @property
    def ideal_Rhat(self):
        return 0.5 * math.log2(1.0 + (self.quant_coarse_target - self.D) / self.D)

    @property
    def ideal_Rprime(self):
        return rates.relay_channel_rate_Rprime(self.P1, self.P2, self.N3)

    @property
    def ideal_R(self):
        """Two-hop combining bound at this D."""
        return rates.two_hop_rate(self.P1, self.N2, self.N3, self.D)

    @property
    def ideal_feasible(self):
        """False when the ideal compression rate exceeds the ideal relay-link rate."""
        return self.ideal_Rhat <= self.ideal_Rprime

    def codebooks(self):
        base = base_lattice(self.lattice, self.n)
        C1 = make_nested_pair(scale_to_second_moment(base, self.P1 / self.k1 ** 2), self.k1)
        C2 = make_nested_pair(scale_to_second_moment(base, self.P2 / self.k2 ** 2), self.k2)
        Cq = make_nested_pair(scale_to_second_moment(base, self.D), self.kq)
        for name, pair, target in (("Lambda1", C1, self.P1), ("Lambda2", C2, self.P2)):
            if abs(pair.coarse.second_moment - target) > 1e-9 * target:
                raise CfConfigError(
                    f"{name} second moment {pair.coarse.second_moment} != power {target}")
        return C1, C2, Cq


def _as_digits(pair, w):
    w = np.asarray(w)
    if w.ndim == 0:
        return index_digits(pair, int(w))
    return w.astype(np.int64)


def tx_encode(C1, w, u1):
    """``X1 = (t1(w) + u1) mod Lambda1``; ``w`` is an index or digit array."""
    t1 = codeword_of_digits(C1, _as_digits(C1, w))
    return C1.coarse.mod(t1 + u1)


def relay_compress(Cq, y2, uq):
    """Quantize without source scaling; return the coset point and its digits."""
    digits = coset_digits(Cq, Cq.fine.quantize(np.asarray(y2) + uq))
    return codeword_of_digits(Cq, digits), digits


def embed_index(digits, k2):
    """Identity embedding of base-kq digits into base-k2 digits."""
    digits = np.asarray(digits, dtype=np.int64)
    if np.any(digits >= k2):
        raise CfConfigError(
            "compression digit exceeds the relay codebook (R_hat > R')")
    return digits


def relay_encode(C2, i, u2, kq=None):
    """``X2 = (t2(i) + u2) mod Lambda2``.

    ``i`` is a digit array, or an integer index in the quantization
    codebook of nesting factor ``kq`` (defaults to ``C2.k``).
    """
    i = np.asarray(i)
    if i.ndim == 0:
        kq = C2.k if kq is None else kq
        if not 0 <= int(i) < kq ** C2.n:
            raise CfConfigError(f"index {int(i)} outside [0, {kq}^{C2.n})")
        i = np.array([(int(i) // kq ** d) % kq for d in range(C2.n)])
    t2 = codeword_of_digits(C2, embed_index(i, C2.k))
    return C2.coarse.mod(t2 + u2)


def dest_decode_relay(C2, y3, u2, beta):
    """Relay codeword estimate ``Q_c2(beta*y3 - u2) mod Lambda2``."""
    return canonical_codeword(C2, C2.fine.quantize(beta * np.asarray(y3) - u2))


def dest_reconstruct(Cq, I, uq, y3_prev_clean, alpha2):
    """Compressed relay observation rebuilt with the direct link as side information."""
    s = np.asarray(y3_prev_clean)
    return Cq.coarse.mod(I - uq - alpha2 * s) + alpha2 * s


def combine(y3_clean, y2_hat, cfg):
    """Unit-gain combination ``X1 + Z_eff`` with noise variance ``cfg.n_eff``."""
    w3 = cfg.n_eff / cfg.N3
    w2 = cfg.n_eff / (cfg.N2 + cfg.D)
    return w3 * np.asarray(y3_clean) + w2 * np.asarray(y2_hat)


def dest_combine_decode(C1, y3_clean, y2_hat, u1, cfg):
    """Decode the source message digits from the combined observation."""
    y = combine(y3_clean, y2_hat, cfg)
    t1 = C1.coarse.mod(C1.fine.quantize(cfg.alpha_c * y - u1))
    return coset_digits(C1, t1)


@dataclass(frozen=True)
class CfReport:
    P1: float
    P2: float
    N2: float
    N3: float
    D: float
    n: int
    k1: int
    k2: int
    kq: int
    B: int
    mode: str
    seed: int
    runs: int
    R: float
    R_eff: float
    t2_err: float
    wrap_rate: float
    msg_err: float
    power1: float
    power2: float
    eq_var_hat: float
    comb_resid_var: float
    comb_resid_se: float
    comb_resid_pred: float
    digest: str

    def as_dict(self):
        return asdict(self)


def _draws(cfg, start, count):
    """All randomness for one block of ``count`` runs (counters start..start+count)."""
    n, s = cfg.n, cfg.seed
    return {
        "w": counter_integers(s, "W", start, count, n, cfg.k1),
        "u1": counter_uniforms(s, "U1", start, count, n),
        "u2": counter_uniforms(s, "U2", start, count, n),
        "uq": counter_uniforms(s, "Uq", start, count, n),
        "z2": counter_normals(s, "Z2", start, count, n, math.sqrt(cfg.N2)),
        "z3": counter_normals(s, "Z3", start, count, n, math.sqrt(cfg.N3)),
    }


def simulate_cf(cfg, runs=1, mode="chained"):
    """Monte Carlo of ``runs`` independent block-Markov transmissions.

    Each run carries B messages over B+1 blocks. Run r, block j draws its
    randomness at counter ``(j-1)*RUN_STRIDE + r`` of every stream, so a
    run's outcome does not depend on how many runs are simulated. ``mode`` is
    ``"chained"`` (the cleaned observation uses the decoded relay codeword)
    or ``"genie-reset"`` (it uses the true relay signal).
    """
    if mode not in MODES:
        raise CfConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if runs < 1:
        raise CfConfigError("runs must be >= 1")
    C1, C2, Cq = cfg.codebooks()
    n, B = cfg.n, cfg.B
    a2 = cfg.alpha2

    t2_errs, wraps, msg_errs = [], [], []
    p1_sum = p2_sum = 0.0
    eq_pow, resid_pow = [], []
    prev = None
    i_prev = np.zeros((runs, n), dtype=np.int64)  # i(0) = 0, known to all
    for j in range(1, B + 2):
        d = _draws(cfg, (j - 1) * RUN_STRIDE, runs)
        u1 = C1.coarse.mod(d["u1"] @ C1.coarse.basis)
        u2 = C2.coarse.mod(d["u2"] @ C2.coarse.basis)
        uq = Cq.fine.mod(d["uq"] @ Cq.fine.basis)

        X1 = tx_encode(C1, d["w"], u1)
        t2 = codeword_of_digits(C2, embed_index(i_prev, C2.k))
        X2 = C2.coarse.mod(t2 + u2)
        Y2 = X1 + d["z2"]
        Y3 = X1 + X2 + d["z3"]
        p1_sum += math.fsum(np.sum(X1 * X1, axis=1) / n)
        p2_sum += math.fsum(np.sum(X2 * X2, axis=1) / n)

        I, iq = relay_compress(Cq, Y2, uq)
        e_q = Cq.fine.mod(Y2 + uq)

        if j == 1:
            t2_digits = i_prev
            X2_hat = X2
        else:
            t2_hat = dest_decode_relay(C2, Y3, u2, cfg.beta)
            t2_digits = coset_digits(C2, t2_hat)
            t2_errs.append(np.any(t2_digits != i_prev, axis=1))
            X2_hat = C2.coarse.mod(t2_hat + u2)
        y3_true = Y3 - X2
        y3_clean = Y3 - X2_hat if mode == "chained" else y3_true

        if j >= 2:
            iq_hat = np.mod(t2_digits, cfg.kq)
            I_hat = codeword_of_digits(Cq, iq_hat)
            y2_hat = dest_reconstruct(Cq, I_hat, prev["uq"], prev["y3_clean"], a2)
            w_hat = dest_combine_decode(C1, prev["y3_clean"], y2_hat, prev["u1"], cfg)
            msg_errs.append(np.any(w_hat != prev["w"], axis=1))

            v = (1.0 - a2) * prev["X1"] - a2 * prev["z3"] + prev["z2"] - prev["e_q"]
            q = Cq.coarse.quantize(v)
            wrapped = np.any(np.abs(q) > 1e-9 * math.sqrt(Cq.coarse.second_moment), axis=1)
            wraps.append(wrapped)
            eq_pow.append(np.sum(prev["e_q"] ** 2, axis=1) / n)

            clean = ~wrapped & ~t2_errs[-1] & prev["side_ok"]
            resid = combine(prev["y3_clean"], y2_hat, cfg) - prev["X1"]
            resid_pow.append((np.sum(resid * resid, axis=1) / n)[clean])

        side_ok = np.all(y3_clean == y3_true, axis=1)
        prev = dict(X1=X1, w=d["w"], u1=u1, uq=uq, z2=d["z2"], z3=d["z3"], e_q=e_q,
                    y3_clean=y3_clean, side_ok=side_ok)
        i_prev = iq

    t2e = np.stack(t2_errs, axis=1)
    wr = np.stack(wraps, axis=1)
    me = np.stack(msg_errs, axis=1)
    eq_var = math.fsum(np.concatenate(eq_pow)) / (runs * B)
    rp = np.concatenate(resid_pow)
    if rp.size:
        rv = math.fsum(rp) / rp.size
        rse = float(rp.std(ddof=1) / math.sqrt(rp.size)) if rp.size > 1 else math.inf
    else:
        rv = rse = math.nan
    w3 = cfg.n_eff / cfg.N3
    w2 = cfg.n_eff / (cfg.N2 + cfg.D)
    pred = w3 ** 2 * cfg.N3 + w2 ** 2 * (cfg.N2 + eq_var)
    blocks = runs * (B + 1)
    power1, power2 = p1_sum / blocks, p2_sum / blocks

    h = hashlib.sha256()
    for arr in (t2e, wr, me):
        h.update(np.ascontiguousarray(arr, dtype=np.uint8).tobytes())
    h.update(f"{power1!r},{power2!r},{eq_var!r},{rv!r}".encode())

    return CfReport(
        P1=cfg.P1, P2=cfg.P2, N2=cfg.N2, N3=cfg.N3, D=cfg.D, n=n,
        k1=cfg.k1, k2=cfg.k2, kq=cfg.kq, B=B, mode=mode, seed=cfg.seed, runs=runs,
        R=cfg.R, R_eff=cfg.R * B / (B + 1),
        t2_err=float(t2e.mean()), wrap_rate=float(wr.mean()), msg_err=float(me.mean()),
        power1=power1, power2=power2, eq_var_hat=eq_var,
        comb_resid_var=rv, comb_resid_se=rse, comb_resid_pred=pred,
        digest=h.hexdigest(),
    )

