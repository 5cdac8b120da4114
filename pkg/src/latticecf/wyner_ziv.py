"""Nested-lattice Wyner-Ziv codec for source X+Z1 with side information X+Z2.

The encoder scales the source by ``alpha1``, adds a dither uniform over the
fine cell, quantizes to the fine lattice and reduces mod the coarse
lattice. The decoder removes the dither and the scaled side information,
reduces mod the coarse lattice and forms the linear MMSE reconstruction.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from .lattice import (
    base_lattice,
    canonical_codeword,
    coset_digits,
    make_nested_pair,
    scale_to_second_moment,
)
from .streams import counter_normals, counter_uniforms

IDENTITY_TOL = 1e-9


class ConfigurationError(ValueError):
    """Codec or simulation parameters are inconsistent."""


class DistortionRangeError(ConfigurationError):
    pass


def mmse_coefficients(P, N1, N2, D):
    """Return ``(alpha1, alpha2)`` for the given source/side-info variances.

    :raises DistortionRangeError: unless ``0 < D <= N1 + P*N2/(P+N2)``
    """
    for key, value in (("P", P), ("N1", N1), ("N2", N2), ("D", D)):
        if not value > 0:
            raise ConfigurationError(f"{key} must be > 0, got {value}")
    resid = N1 + P * N2 / (P + N2)
    if D > resid:
        raise DistortionRangeError(
            f"D={D} exceeds the bound N1 + P*N2/(P+N2) = {resid}")
    alpha1 = math.sqrt(max(0.0, 1.0 - D / resid))
    alpha2 = P / (P + N2)
    return alpha1, alpha2


@dataclass(frozen=True)
class WzConfig:
    """One Wyner-Ziv problem instance and its lattice design.

    The fine lattice has second moment ``D``; the coarse lattice is
    ``k`` times the fine one, with ``k`` the smallest integer (>= 2) such
    that ``k^2 * D >= gamma * resid_var``.
    """

    P: float
    N1: float
    N2: float
    D: float
    n: int = 8
    gamma: float = 1.0
    lattice: str = "Z"

    def __post_init__(self):
        mmse_coefficients(self.P, self.N1, self.N2, self.D)
        if not self.gamma >= 1.0:
            raise ConfigurationError(f"gamma must be >= 1, got {self.gamma}")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")

    @property
    def resid_var(self):
        return self.N1 + self.P * self.N2 / (self.P + self.N2)

    @property
    def alpha1(self):
        return mmse_coefficients(self.P, self.N1, self.N2, self.D)[0]

    @property
    def alpha2(self):
        return mmse_coefficients(self.P, self.N1, self.N2, self.D)[1]

    @property
    def nesting_factor(self):
        ratio = math.sqrt(self.gamma * self.resid_var / self.D)
        return max(2, math.ceil(ratio - 1e-12))

    def nested_pair(self):
        fine = scale_to_second_moment(base_lattice(self.lattice, self.n), self.D)
        return make_nested_pair(fine, self.nesting_factor)


def _check_pair(cfg, pair):
    if pair.n != cfg.n:
        raise ConfigurationError(f"pair dimension {pair.n} != configured n={cfg.n}")
    if abs(pair.fine.second_moment - cfg.D) > 1e-9 * cfg.D:
        raise ConfigurationError(
            f"fine lattice second moment {pair.fine.second_moment} != D={cfg.D}")
    if pair.coarse.second_moment < cfg.resid_var * (1.0 - 1e-9):
        raise ConfigurationError(
            f"coarse lattice second moment {pair.coarse.second_moment} is below "
            f"N1 + P*N2/(P+N2) = {cfg.resid_var}")


def quantization_error(cfg, pair, y, u):
    return pair.fine.mod(cfg.alpha1 * np.asarray(y) + u)


def wz_encode(cfg, pair, y, u):
    """Coset point ``I = Q_fine(alpha1*y + u) mod coarse`` (codebook representative)."""
    _check_pair(cfg, pair)
    return canonical_codeword(pair, pair.fine.quantize(cfg.alpha1 * np.asarray(y) + u))


def wz_index(pair, I):
    """Base-k digits transported in place of the coset point."""
    return coset_digits(pair, I)


def wz_decode(cfg, pair, I, u, s):
    """Reconstruction ``alpha1*((I - u - alpha1*alpha2*s) mod coarse) + alpha2*s``."""
    a1, a2 = cfg.alpha1, cfg.alpha2
    I = pair.coarse._check(I)
    s = np.asarray(s, dtype=np.float64)
    if s.shape != I.shape:
        raise ConfigurationError(f"side information shape {s.shape} != {I.shape}")
    return a1 * pair.coarse.mod(I - u - a1 * a2 * s) + a2 * s


def residual(cfg, x, z1, z2):
    """``(1-alpha2)*x - alpha2*z2 + z1``: the part of y not explained by the side info."""
    a2 = cfg.alpha2
    return (1.0 - a2) * np.asarray(x) - a2 * np.asarray(z2) + np.asarray(z1)


def _wrapped(coarse, v):
    q = coarse.quantize(v)
    return np.any(np.abs(q) > 1e-9 * math.sqrt(coarse.second_moment), axis=-1)


def wz_detect_wrap(cfg, pair, x, z1, z2, u):
    """True where the coarse reduction at the decoder changes its argument."""
    e_q = quantization_error(cfg, pair, np.asarray(x) + z1, u)
    return _wrapped(pair.coarse, cfg.alpha1 * residual(cfg, x, z1, z2) - e_q)


@dataclass
class WzTrace:
    y: np.ndarray
    s: np.ndarray
    u: np.ndarray
    e_q: np.ndarray
    I: np.ndarray
    y_hat: np.ndarray
    wrapped: np.ndarray

    def predicted_error(self, cfg, x, z1, z2):
        a1 = cfg.alpha1
        return -(1.0 - a1 ** 2) * residual(cfg, x, z1, z2) - a1 * self.e_q


def wz_trace(cfg, pair, x, z1, z2, u):
    """Run encoder and decoder on ground-truth components."""
    y = np.asarray(x) + z1
    s = np.asarray(x) + z2
    I = wz_encode(cfg, pair, y, u)
    y_hat = wz_decode(cfg, pair, I, u, s)
    return WzTrace(y, s, np.asarray(u), quantization_error(cfg, pair, y, u), I, y_hat,
                   wz_detect_wrap(cfg, pair, x, z1, z2, u))


@dataclass(frozen=True)
class WzReport:
    P: float
    N1: float
    N2: float
    D: float
    n: int
    k: int
    gamma: float
    trials: int
    seed: int
    rate_bits: float
    coarse_second_moment: float
    wrap_rate: float
    distortion: float
    distortion_no_wrap: float
    distortion_no_wrap_se: float
    resid_var_hat: float
    eq_var_hat: float
    predicted_no_wrap: float
    identity_pass_rate: float

    def as_dict(self):
        return asdict(self)


def draw_sources(cfg, seed, start, count):
    """Gaussian x, z1, z2 and uniforms for the dither, trial-addressed."""
    n = cfg.n
    x = counter_normals(seed, "X", start, count, n, math.sqrt(cfg.P))
    z1 = counter_normals(seed, "Z1", start, count, n, math.sqrt(cfg.N1))
    z2 = counter_normals(seed, "Z2", start, count, n, math.sqrt(cfg.N2))
    r = counter_uniforms(seed, "U", start, count, n)
    return x, z1, z2, r


def wz_simulate(cfg, trials, seed=42, chunk=20_000):
    """Monte Carlo run of the codec; trial ``t`` uses stream counter ``t``."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    pair = cfg.nested_pair()
    a1 = cfg.alpha1
    dist, wrap, r2, e2, ok = [], [], [], [], []
    for start in range(0, trials, chunk):
        count = min(chunk, trials - start)
        x, z1, z2, r = draw_sources(cfg, seed, start, count)
        u = pair.fine.mod(r @ pair.fine.basis)
        tr = wz_trace(cfg, pair, x, z1, z2, u)
        err = tr.y_hat - tr.y
        resid = residual(cfg, x, z1, z2)
        dist.append(np.sum(err * err, axis=1) / cfg.n)
        wrap.append(tr.wrapped)
        r2.append(np.sum(resid * resid, axis=1) / cfg.n)
        e2.append(np.sum(tr.e_q * tr.e_q, axis=1) / cfg.n)
        gap = np.max(np.abs(err - tr.predicted_error(cfg, x, z1, z2)), axis=1)
        ok.append(gap <= IDENTITY_TOL)
    dist, wrap, r2, e2, ok = (np.concatenate(a) for a in (dist, wrap, r2, e2, ok))
    clean = ~wrap
    n_clean = int(clean.sum())
    if n_clean:
        d_clean = dist[clean]
        d_nw = math.fsum(d_clean) / n_clean
        d_nw_se = float(d_clean.std(ddof=1) / math.sqrt(n_clean)) if n_clean > 1 else math.inf
        pass_rate = float(ok[clean].mean())
    else:
        d_nw = d_nw_se = pass_rate = math.nan
    r2_hat = math.fsum(r2) / trials
    e2_hat = math.fsum(e2) / trials
    return WzReport(
        P=cfg.P, N1=cfg.N1, N2=cfg.N2, D=cfg.D, n=cfg.n, k=pair.k, gamma=cfg.gamma,
        trials=trials, seed=seed,
        rate_bits=pair.rate,
        coarse_second_moment=pair.coarse.second_moment,
        wrap_rate=float(wrap.mean()),
        distortion=math.fsum(dist) / trials,
        distortion_no_wrap=d_nw,
        distortion_no_wrap_se=d_nw_se,
        resid_var_hat=r2_hat,
        eq_var_hat=e2_hat,
        predicted_no_wrap=(1.0 - a1 ** 2) ** 2 * r2_hat + a1 ** 2 * e2_hat,
        identity_pass_rate=pass_rate,
    )
