"""Outage probability and rate inversion backends.

Four interchangeable evaluators answer the same two questions, "what is the
outage probability of rate R" and "what rate meets outage target eps":

* ``ExactL1``          closed form for single-branch Rayleigh fading,
* ``GaussianFading``   Gaussian approximation over the fading distribution,
* ``MonteCarlo``       empirical law of seeded mutual-information samples,
* ``FiniteBlocklength`` conditionally Gaussian dispersion term layered on
  Monte Carlo fading draws, capturing atypical noise at blocklength n.

Monte Carlo gains are generated in fixed-size chunks from one seeded
stream, so every estimate is bit-reproducible for a given seed and the
same fading realizations underlie seed-matched backends regardless of the
consumer.  Inverse maps reuse one sample set across all rate evaluations
(common random numbers), which makes them monotone in the target and keeps
downstream optimizers deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Union

import numpy as np
from scipy.special import erfc as _erfc

from .channel_stats import ChannelSpec, gaussian_tail, gaussian_tail_inv, mi_stats
from .search import bisect_monotone

__all__ = [
    "DEFAULT_SAMPLES",
    "DEFAULT_SEED",
    "ExactL1",
    "GaussianFading",
    "MonteCarlo",
    "FiniteBlocklength",
    "OutageModel",
    "RateEpsPoint",
    "outage_exact_l1",
    "rate_exact_l1",
    "outage_gaussian",
    "rate_gaussian",
    "outage_mc",
    "rate_mc",
    "outage_finite_n",
    "eps_for_rate",
    "rate_for_eps",
]

DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 12345

# outage targets are clamped into this range before inversion so the normal
# quantile stays finite
EPS_FLOOR = 1e-9
EPS_CEIL = 1.0 - 1e-9

# rate inversions terminate once the bisection bracket is this narrow (bits)
RATE_BRACKET_TOL = 1e-4

_LN2 = math.log(2.0)
_SQRT2 = math.sqrt(2.0)
_CHUNK = 1 << 17


# ---------------------------------------------------------------------------
# backend selectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactL1:
    """Closed-form Rayleigh backend; valid only when diversity_l == 1."""


@dataclass(frozen=True)
class GaussianFading:
    """Gaussian approximation of the per-codeword mutual information."""


@dataclass(frozen=True)
class MonteCarlo:
    """Empirical outage over seeded mutual-information samples."""

    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples!r}")


@dataclass(frozen=True)
class FiniteBlocklength:
    """Finite-n evaluator: conditional Gaussian tail on Monte Carlo draws."""

    n: int
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n!r}")
        if self.samples < 1:
            raise ValueError(f"samples must be >= 1, got {self.samples!r}")


OutageModel = Union[ExactL1, GaussianFading, MonteCarlo, FiniteBlocklength]


@dataclass(frozen=True)
class RateEpsPoint:
    """A rate (bits/symbol) paired with the outage probability it induces."""

    rate_bits: float
    eps: float


# ---------------------------------------------------------------------------
# shared validation and sampling plumbing
# ---------------------------------------------------------------------------

def _require_rate(rate_bits: float) -> None:
    if math.isnan(rate_bits) or rate_bits < 0.0:
        raise ValueError(f"rate_bits must be >= 0, got {rate_bits!r}")


def _require_single_branch(spec: ChannelSpec) -> None:
    if spec.diversity_l != 1:
        raise ValueError(
            f"closed form requires diversity_l == 1, got {spec.diversity_l!r}"
        )


def _clamp_eps(eps: float) -> float:
    if math.isnan(eps) or not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in the open interval (0, 1), got {eps!r}")
    return min(max(eps, EPS_FLOOR), EPS_CEIL)


def _iter_gain_chunks(l: int, samples: int, seed: int) -> Iterator[np.ndarray]:
    """Unit-mean exponential gains in (chunk, l) blocks from one seeded stream.

    The chunk size is a fixed constant so that a draw of ``samples`` rows is
    a prefix-consistent extension of any smaller draw with the same seed.
    """
    rng = np.random.default_rng(seed)
    remaining = samples
    while remaining > 0:
        m = min(remaining, _CHUNK)
        yield rng.exponential(size=(m, l))
        remaining -= m


@lru_cache(maxsize=64)
def _mi_sample_set(snr: float, l: int, samples: int, seed: int) -> np.ndarray:
    """Sorted per-codeword mutual-information samples, bits/symbol, read-only."""
    out = np.empty(samples)
    pos = 0
    for gains in _iter_gain_chunks(l, samples, seed):
        out[pos:pos + gains.shape[0]] = np.log2(1.0 + snr * gains).mean(axis=1)
        pos += gains.shape[0]
    out.sort()
    out.flags.writeable = False
    return out


@lru_cache(maxsize=8)
def _finite_n_tables(
    snr: float, l: int, n: int, samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-draw conditional mean (nats) and standard deviation at blocklength n."""
    mean = np.empty(samples)
    sd = np.empty(samples)
    pos = 0
    for gains in _iter_gain_chunks(l, samples, seed):
        gam = snr * gains
        mean[pos:pos + gains.shape[0]] = np.log1p(gam).mean(axis=1)
        sd[pos:pos + gains.shape[0]] = np.sqrt(
            (2.0 * gam / (n * (1.0 + gam))).mean(axis=1)
        )
        pos += gains.shape[0]
    mean.flags.writeable = False
    sd.flags.writeable = False
    return mean, sd


def _conditional_outage(
    mean_nats: np.ndarray, sd_nats: np.ndarray, rate_nats: float
) -> np.ndarray:
    """Conditional Gaussian tail per draw; zero spread degenerates to a step."""
    out = np.empty_like(mean_nats)
    degenerate = sd_nats == 0.0
    regular = ~degenerate
    z = (mean_nats[regular] - rate_nats) / sd_nats[regular]
    out[regular] = 0.5 * _erfc(z / _SQRT2)
    out[degenerate] = (mean_nats[degenerate] <= rate_nats).astype(float)
    return out


# ---------------------------------------------------------------------------
# closed form, single branch
# ---------------------------------------------------------------------------

def outage_exact_l1(spec: ChannelSpec, rate_bits: float) -> float:
    """P[log2(1 + snr * G) <= R] for a single unit-mean exponential gain G.

    Equals 1 - exp(-(2^R - 1) / snr); exactly 0 at R = 0.
    """
    _require_single_branch(spec)
    _require_rate(rate_bits)
    return -math.expm1(-(2.0 ** rate_bits - 1.0) / spec.snr)


def rate_exact_l1(spec: ChannelSpec, eps: float) -> float:
    """Rate in bits/symbol whose single-branch outage equals eps.

    Inverts the closed form: R = log2(1 - snr * ln(1 - eps)).  Round-trips
    with ``outage_exact_l1`` to a relative error below 1e-10.
    """
    _require_single_branch(spec)
    e = _clamp_eps(eps)
    return math.log2(1.0 - spec.snr * math.log1p(-e))


# ---------------------------------------------------------------------------
# Gaussian fading approximation
# ---------------------------------------------------------------------------

def outage_gaussian(spec: ChannelSpec, rate_bits: float) -> float:
    """Gaussian-approximation outage Q(sqrt(L) * (mu - R) / sigma)."""
    _require_rate(rate_bits)
    st = mi_stats(spec.snr)
    z = math.sqrt(spec.diversity_l) * (st.mu_bits - rate_bits) / st.sigma_bits
    return gaussian_tail(z)


def rate_gaussian(spec: ChannelSpec, eps: float) -> float:
    """Rate meeting outage target eps under the Gaussian approximation.

    Computes mu - Qinv(eps) * sigma / sqrt(L) and clamps the result below
    at 0.0; an exact 0.0 return is the clamp indicator (the unclamped
    approximation went negative, i.e. the target is not meaningfully
    reachable at this snr and diversity).
    """
    st = mi_stats(spec.snr)
    e = _clamp_eps(eps)
    rate = st.mu_bits - gaussian_tail_inv(e) * st.sigma_bits / math.sqrt(spec.diversity_l)
    return max(rate, 0.0)


# ---------------------------------------------------------------------------
# Monte Carlo over fading draws
# ---------------------------------------------------------------------------

def outage_mc(
    spec: ChannelSpec,
    rate_bits: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[float, float]:
    """Empirical outage probability and its binomial standard error."""
    _require_rate(rate_bits)
    mi = _mi_sample_set(spec.snr, spec.diversity_l, int(samples), int(seed))
    p = float(np.searchsorted(mi, rate_bits, side="right")) / mi.size
    return p, math.sqrt(p * (1.0 - p) / mi.size)


def rate_mc(
    spec: ChannelSpec,
    eps: float,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> float:
    """Largest rate whose empirical outage stays at or below eps.

    Bisection against one fixed sample set keeps the map monotone in eps
    and deterministic per seed; the bracket is driven below 1e-4 bits.

    Raises:
        ValueError: if the target is not reachable for any rate up to
            mu + 10 * sigma.
    """
    e = _clamp_eps(eps)
    mi = _mi_sample_set(spec.snr, spec.diversity_l, int(samples), int(seed))
    st = mi_stats(spec.snr)
    hi = st.mu_bits + 10.0 * st.sigma_bits

    def empirical(r: float) -> float:
        return float(np.searchsorted(mi, r, side="right")) / mi.size

    if empirical(hi) < e:
        raise ValueError(
            f"outage target {eps!r} not reachable below rate {hi:.3f} bits/symbol"
        )
    return bisect_monotone(empirical, e, 0.0, hi, xtol=RATE_BRACKET_TOL)


# ---------------------------------------------------------------------------
# finite blocklength
# ---------------------------------------------------------------------------

def outage_finite_n(
    spec: ChannelSpec,
    rate_bits: float,
    n: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
) -> tuple[float, float]:
    """Outage probability at blocklength n symbols, with standard error.

    For each fading draw the per-codeword information density is treated as
    Gaussian with mean (1/L) sum log(1 + g_i * snr) nats and variance
    (1/L) sum 2 g_i snr / (n (1 + g_i snr)); the outage estimate averages
    the conditional tail over draws.  The rate is converted to nats
    internally; n must be divisible by diversity_l so each block spans an
    integer number of symbols.
    """
    _require_rate(rate_bits)
    if n % spec.diversity_l != 0:
        raise ValueError(
            f"blocklength n={n!r} must be divisible by diversity_l={spec.diversity_l!r}"
        )
    mean, sd = _finite_n_tables(
        spec.snr, spec.diversity_l, int(n), int(samples), int(seed)
    )
    per_draw = _conditional_outage(mean, sd, rate_bits * _LN2)
    eps = float(per_draw.mean())
    if per_draw.size < 2:
        return eps, 0.0
    return eps, float(per_draw.std(ddof=1) / math.sqrt(per_draw.size))


def _rate_finite_n(spec: ChannelSpec, eps: float, model: FiniteBlocklength) -> float:
    """Invert the finite-n outage in rate on a fixed draw set."""
    e = _clamp_eps(eps)
    if model.n % spec.diversity_l != 0:
        raise ValueError(
            f"blocklength n={model.n!r} must be divisible by "
            f"diversity_l={spec.diversity_l!r}"
        )
    mean, sd = _finite_n_tables(
        spec.snr, spec.diversity_l, int(model.n), int(model.samples), int(model.seed)
    )
    st = mi_stats(spec.snr)
    hi = st.mu_bits + 10.0 * st.sigma_bits

    def f(rate_bits: float) -> float:
        return float(_conditional_outage(mean, sd, rate_bits * _LN2).mean())

    if f(0.0) > e:
        raise ValueError(
            f"outage target {eps!r} sits below the blocklength floor {f(0.0):.3e} "
            f"at zero rate (n={model.n})"
        )
    if f(hi) < e:
        raise ValueError(
            f"outage target {eps!r} not reachable below rate {hi:.3f} bits/symbol"
        )
    return bisect_monotone(f, e, 0.0, hi, xtol=RATE_BRACKET_TOL)


# ---------------------------------------------------------------------------
# backend dispatch
# ---------------------------------------------------------------------------

def eps_for_rate(spec: ChannelSpec, rate_bits: float, model: OutageModel) -> float:
    """Outage probability of ``rate_bits`` under the chosen backend."""
    if isinstance(model, ExactL1):
        return outage_exact_l1(spec, rate_bits)
    if isinstance(model, GaussianFading):
        return outage_gaussian(spec, rate_bits)
    if isinstance(model, MonteCarlo):
        return outage_mc(spec, rate_bits, model.samples, model.seed)[0]
    if isinstance(model, FiniteBlocklength):
        return outage_finite_n(spec, rate_bits, model.n, model.samples, model.seed)[0]
    raise TypeError(f"unknown outage model: {model!r}")


def rate_for_eps(spec: ChannelSpec, eps: float, model: OutageModel) -> float:
    """Rate in bits/symbol meeting the outage target under the backend."""
    if isinstance(model, ExactL1):
        return rate_exact_l1(spec, eps)
    if isinstance(model, GaussianFading):
        return rate_gaussian(spec, eps)
    if isinstance(model, MonteCarlo):
        return rate_mc(spec, eps, model.samples, model.seed)
    if isinstance(model, FiniteBlocklength):
        return _rate_finite_n(spec, eps, model)
    raise TypeError(f"unknown outage model: {model!r}")
