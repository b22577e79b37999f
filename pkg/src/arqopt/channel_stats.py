"""Per-codeword mutual-information statistics for Rayleigh block fading.

A codeword spans ``diversity_l`` independently faded blocks whose power
gains are unit-mean exponentials.  The per-codeword mutual information, in
bits/symbol, is the block average of log2(1 + snr * gain).  Its single-block
mean and standard deviation drive the Gaussian fading approximation of the
outage probability, and their normalized ratio ``kappa`` determines where
the goodput-optimal outage target sits.

This module also hosts the scalar special functions the rest of the package
leans on: the principal Lambert W branch and the Gaussian upper tail with
its inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from scipy.integrate import quad

from .exceptions import ConsistencyError

__all__ = [
    "ChannelSpec",
    "MiStats",
    "lambert_w0",
    "gaussian_tail",
    "gaussian_tail_inv",
    "mi_stats",
    "kappa",
]

_LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_INV_E = math.exp(-1.0)

# error budget, in nats, for the adaptive quadrature behind mi_stats
_QUAD_BUDGET = 1e-9


@dataclass(frozen=True)
class ChannelSpec:
    """Forward-link description.

    Attributes:
        snr: average signal-to-noise ratio on a linear scale (not dB).
        diversity_l: number of independently faded blocks spanned by one
            codeword.
    """

    snr: float
    diversity_l: int = 1

    def __post_init__(self) -> None:
        if not self.snr > 0.0:
            raise ValueError(f"snr must be positive, got {self.snr!r}")
        if self.diversity_l < 1:
            raise ValueError(f"diversity_l must be >= 1, got {self.diversity_l!r}")


@dataclass(frozen=True)
class MiStats:
    """Single-block mutual-information moments, in bits/symbol.

    ``mu_bits`` and ``sigma_bits`` are the mean and standard deviation of
    log2(1 + snr * G) for a unit-mean exponential gain G.
    """

    snr: float
    mu_bits: float
    sigma_bits: float


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function.

    Solves w * exp(w) = x for the branch with w >= -1, using Halley's
    iteration from a log(1 + x) based starting point (switched to the
    square-root expansion close to the branch point, where the logarithm
    seed is too far off).

    Args:
        x: argument, must satisfy x >= -1/e.

    Returns:
        w with w * exp(w) = x, accurate to double precision.

    Raises:
        ValueError: if x < -1/e, outside the real principal branch.
    """
    if math.isnan(x) or x < -_INV_E:
        raise ValueError(f"lambert_w0 requires x >= -1/e, got {x!r}")
    if x == 0.0:
        return 0.0
    if x < -0.25:
        w = -1.0 + math.sqrt(2.0 * (1.0 + math.e * x))
    else:
        w = math.log1p(x)
    for _ in range(64):
        ew = math.exp(w)
        err = w * ew - x
        if err == 0.0:
            break
        wp1 = w + 1.0
        step = err / (ew * wp1 - (w + 2.0) * err / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-15 * max(1.0, abs(w)):
            break
    return w


def gaussian_tail(x: float) -> float:
    """Standard normal upper-tail probability Q(x) = P[N(0, 1) > x]."""
    return 0.5 * math.erfc(x / _SQRT2)


# Hastings-style rational fit for the normal quantile; its ~4.5e-4 error is
# wiped out by the Newton corrections against gaussian_tail below.
_QINV_NUM = (2.515517, 0.802853, 0.010328)
_QINV_DEN = (1.432788, 0.189269, 0.001308)


def gaussian_tail_inv(p: float) -> float:
    """Inverse of ``gaussian_tail`` on the open interval (0, 1).

    A rational approximation provides the starting point; Newton steps on
    gaussian_tail finish the job, giving a relative round-trip error below
    1e-10 for p in [1e-9, 1 - 1e-9].

    Args:
        p: tail probability, 0 < p < 1.

    Returns:
        x such that gaussian_tail(x) == p.

    Raises:
        ValueError: if p lies outside (0, 1).
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"tail probability must lie in (0, 1), got {p!r}")
    if p == 0.5:
        return 0.0
    # Work on the small tail; 1 - p is exact here (Sterbenz) and
    # gaussian_tail keeps full relative accuracy away from 0.5.
    pl = p if p < 0.5 else 1.0 - p
    t = math.sqrt(-2.0 * math.log(pl))
    num = _QINV_NUM[0] + t * (_QINV_NUM[1] + t * _QINV_NUM[2])
    den = 1.0 + t * (_QINV_DEN[0] + t * (_QINV_DEN[1] + t * _QINV_DEN[2]))
    x = t - num / den
    for _ in range(3):
        pdf = math.exp(-0.5 * x * x) / _SQRT_2PI
        if pdf <= 0.0:
            break
        x += (gaussian_tail(x) - pl) / pdf
    return x if p < 0.5 else -x


@lru_cache(maxsize=256)
def mi_stats(snr: float) -> MiStats:
    """Mean and standard deviation of log2(1 + snr * G), G ~ Exp(1).

    Both moments are obtained by adaptive quadrature against the
    exponential density (computed in nats, converted at the end), with the
    reported quadrature error held below 1e-9.

    Args:
        snr: linear average SNR, must be positive.

    Returns:
        MiStats carrying ``mu_bits`` and ``sigma_bits``.

    Raises:
        ValueError: if snr is not positive.
        ConsistencyError: if the quadrature cannot reach its error budget.
    """
    if not snr > 0.0:
        raise ValueError(f"snr must be positive, got {snr!r}")
    m1, err1 = quad(
        lambda g: math.log1p(snr * g) * math.exp(-g),
        0.0, math.inf, epsabs=_QUAD_BUDGET / 10.0, epsrel=1e-12, limit=200,
    )
    m2, err2 = quad(
        lambda g: math.log1p(snr * g) ** 2 * math.exp(-g),
        0.0, math.inf, epsabs=_QUAD_BUDGET / 10.0, epsrel=1e-12, limit=200,
    )
    if max(err1, err2) > _QUAD_BUDGET:
        raise ConsistencyError(
            f"mutual-information quadrature error {max(err1, err2):.2e} "
            f"exceeds budget at snr={snr!r}"
        )
    var = m2 - m1 * m1
    if var < 0.0:
        var = 0.0
    return MiStats(snr=snr, mu_bits=m1 / _LN2, sigma_bits=math.sqrt(var) / _LN2)


def kappa(stats: MiStats, diversity_l: int) -> float:
    """Normalized spread sigma / (mu * sqrt(L)) of the codeword mutual information.

    Strictly inside (0, 1) for Rayleigh fading.  Small values mean a steep
    outage curve, which pushes the goodput-optimal outage target down.
    """
    if diversity_l < 1:
        raise ValueError(f"diversity_l must be >= 1, got {diversity_l!r}")
    return stats.sigma_bits / (stats.mu_bits * math.sqrt(diversity_l))
