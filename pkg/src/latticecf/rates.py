"""Closed-form rate and distortion expressions, in bits per dimension."""
import math
from dataclasses import dataclass

__all__ = [
    "RatePoint",
    "cf_rate",
    "compression_D_star",
    "conditional_variance",
    "direct_rate",
    "relay_channel_rate_Rprime",
    "rate_point",
    "two_hop_rate",
    "wz_rd",
    "wz_rd_alpha1_fixed",
    "wz_rd_alpha2_fixed",
]


def _nonneg(**kw):
    for key, value in kw.items():
        if not value >= 0 or math.isnan(value):
            raise ValueError(f"{key} must be >= 0, got {value}")


def _half_log2(x):
    return 0.5 * math.log2(x)


def conditional_variance(P, N1, N2):
    """Variance of X+Z1 given X+Z2: ``N1 + P*N2/(P+N2)``."""
    _nonneg(P=P, N1=N1, N2=N2)
    if P + N2 == 0:
        return N1
    return N1 + P * N2 / (P + N2)


def _positive_D(D):
    if not D > 0:
        raise ValueError(f"D must be > 0 (rate is unbounded at D=0), got {D}")


def wz_rd(P, N1, N2, D):
    """Wyner-Ziv rate-distortion function for source X+Z1, side info X+Z2."""
    _positive_D(D)
    s2 = conditional_variance(P, N1, N2)
    if D >= s2:
        return 0.0
    return _half_log2(s2 / D)


def wz_rd_alpha1_fixed(P, N1, N2, D):
    """Rate when the source-side scaling is dropped (alpha1 = 1)."""
    _positive_D(D)
    return _half_log2(1.0 + conditional_variance(P, N1, N2) / D)


def wz_rd_alpha2_fixed(N1, N2, D):
    """Rate when the side-information weight is 1 (alpha2 = 1)."""
    _positive_D(D)
    _nonneg(N1=N1, N2=N2)
    return max(0.0, _half_log2((N1 + N2) / D))


def direct_rate(P1, N3):
    _nonneg(P1=P1)
    if not N3 > 0:
        raise ValueError(f"N3 must be > 0, got {N3}")
    return _half_log2(1.0 + P1 / N3)


def cf_rate(P1, P2, N2, N3):
    """Compress-and-forward rate of the three-node Gaussian relay channel."""
    _nonneg(P1=P1, P2=P2, N2=N2, N3=N3)
    if not N3 > 0:
        raise ValueError(f"N3 must be > 0, got {N3}")
    denom = P1 * N2 + P1 * N3 + P2 * N2 + N2 * N3
    if denom == 0:
        # only when P1 = N2 = 0; the relay term vanishes with P1
        return 0.0
    return _half_log2(1.0 + P1 / N3 + P1 * P2 / denom)


def relay_channel_rate_Rprime(P1, P2, N3):
    """Rate at which the relay codeword is decodable treating X1+Z3 as noise."""
    _nonneg(P1=P1, P2=P2, N3=N3)
    if P1 + N3 == 0:
        raise ValueError("P1 + N3 must be > 0")
    return _half_log2(1.0 + P2 / (P1 + N3))


def compression_D_star(P1, P2, N2, N3):
    """Smallest compression distortion the relay link can carry."""
    _nonneg(P1=P1, P2=P2, N2=N2, N3=N3)
    if not P2 > 0:
        raise ValueError("P2 must be > 0 for a finite D*")
    if P1 + N3 == 0:
        raise ValueError("P1 + N3 must be > 0")
    return (N2 + P1 * N3 / (P1 + N3)) * (P1 + N3) / P2


def two_hop_rate(P1, N2, N3, D):
    """Rate from coherently combining Y3' with the compressed relay signal."""
    _nonneg(P1=P1, N2=N2, D=D)
    if not N3 > 0 or not N2 + D > 0:
        raise ValueError("N3 and N2 + D must be > 0")
    return _half_log2(1.0 + P1 / N3 + P1 / (N2 + D))


@dataclass(frozen=True)
class RatePoint:
    P: float
    N1: float
    N2: float
    D: float
    P1: float
    P2: float
    N3: float
    wz_rd: float
    wz_rd_a1: float
    wz_rd_a2: float
    cf_rate: float
    Rprime: float
    D_star: float


def rate_point(P, N1, N2, D, P1, P2, N3):
    """Evaluate every expression at one parameter record.

    N2 is shared: side-information noise for the Wyner-Ziv rates and relay
    observation noise for the relay rates.
    """
    return RatePoint(
        P, N1, N2, D, P1, P2, N3,
        wz_rd=wz_rd(P, N1, N2, D),
        wz_rd_a1=wz_rd_alpha1_fixed(P, N1, N2, D),
        wz_rd_a2=wz_rd_alpha2_fixed(N1, N2, D),
        cf_rate=cf_rate(P1, P2, N2, N3),
        Rprime=relay_channel_rate_Rprime(P1, P2, N3),
        D_star=compression_D_star(P1, P2, N2, N3) if P2 > 0 else math.inf,
    )
