"""Practical ARQ layers: CRC overhead, delay caps, and noisy acknowledgements.

The ideal-ARQ analysis assumes free and perfect error detection, unlimited
retransmissions, and an error-free return link.  Each function here prices
one of those assumptions:

* error detection costs k parity bits inside the n-symbol codeword and
  leaves a residual undetected-error probability of about eps * 2**-k,
* a round cap d turns the outage target into a residual loss eps**d that
  has to stay within budget q,
* a noisy return link loses packets through NACK-to-ACK flips and wastes
  rounds through ACK-to-NACK flips, on top of an f-symbol overhead per
  round.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel_stats import ChannelSpec
from .exceptions import ConsistencyError, InfeasibleError
from .goodput_opt import GoodputReport, optimize_eps
from .outage import OutageModel, rate_for_eps

__all__ = [
    "CrcConfig",
    "CrcDesign",
    "DelayConstraint",
    "FeedbackSpec",
    "NoisyArqDesign",
    "crc_joint_optimize",
    "delay_constrained_optimize",
    "feedback_error_prob",
    "min_feedback_symbols",
    "packet_loss_prob",
    "expected_rounds",
    "noisy_fb_goodput",
    "joint_optimize_noisy_fb",
    "simplified_constraints_ok",
]

# the two redundant packet-loss derivations must agree this tightly
_DUAL_FORM_TOL = 1e-12


# ---------------------------------------------------------------------------
# configuration records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CrcConfig:
    """Error-detection budget: n-symbol codewords, undetected-error cap p."""

    n: int
    p: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n!r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {self.p!r}")


@dataclass(frozen=True)
class DelayConstraint:
    """At most d ARQ rounds per packet, residual loss at most q."""

    d: int
    q: float

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d!r}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q!r}")


@dataclass(frozen=True)
class FeedbackSpec:
    """Acknowledgement link: f binary symbols spread over l_fb diversity branches."""

    f: int
    l_fb: int
    snr: float

    def __post_init__(self) -> None:
        if self.f < 1:
            raise ValueError(f"f must be >= 1, got {self.f!r}")
        if self.l_fb < 1:
            raise ValueError(f"l_fb must be >= 1, got {self.l_fb!r}")
        if not self.snr > 0.0:
            raise ValueError(f"snr must be positive, got {self.snr!r}")


@dataclass(frozen=True)
class CrcDesign:
    """CRC optimizer outcome."""

    eps_star: float
    k_star: int
    goodput: float


@dataclass(frozen=True)
class NoisyArqDesign:
    """Joint forward/feedback operating point."""

    eps: float
    eps_fb: float
    f: int
    xi_d: float
    expected_rounds: float
    goodput: float


def _check_prob(name: str, value: float) -> None:
    if math.isnan(value) or not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


# ---------------------------------------------------------------------------
# CRC overhead
# ---------------------------------------------------------------------------

def _min_parity_bits(eps: float, p: float) -> int:
    """Smallest k >= 0 with eps * 2**-k <= p."""
    if eps <= p:
        return 0
    k = max(0, math.ceil(math.log2(eps / p)))
    while eps * 2.0 ** -k > p:
        k += 1
    while k > 0 and eps * 2.0 ** -(k - 1) <= p:
        k -= 1
    return k


def crc_joint_optimize(
    spec: ChannelSpec,
    crc: CrcConfig,
    model: OutageModel,
    *,
    grid_points: int = 400,
) -> CrcDesign:
    """Best outage target and CRC length for effective goodput.

    Maximizes (R_eps - k/n) * (1 - eps) over a log-spaced eps grid and
    integer k >= 0, subject to the undetected-error budget eps * 2**-k <= p.
    Since goodput falls with k, each eps is paired with the smallest k that
    meets the budget; a second pass refines the grid around the incumbent.

    Raises:
        InfeasibleError: when no grid point leaves a positive effective
            rate after the required parity bits.
    """
    def scan(eps_values: np.ndarray) -> Optional[tuple[float, float, int]]:
        best = None
        for eps in eps_values:
            eps = float(eps)
            k = _min_parity_bits(eps, crc.p)
            rate = rate_for_eps(spec, eps, model)
            effective = rate - k / crc.n
            if effective <= 0.0:
                continue
            value = effective * (1.0 - eps)
            if best is None or value > best[0]:
                best = (value, eps, k)
        return best

    grid = np.geomspace(1e-6, 1.0 - 1e-6, grid_points)
    best = scan(grid)
    if best is None:
        raise InfeasibleError(
            f"no outage target meets undetected-error budget p={crc.p!r} "
            f"with positive effective rate at n={crc.n!r}"
        )
    idx = int(np.searchsorted(grid, best[1]))
    lo = grid[max(idx - 1, 0)]
    hi = grid[min(idx + 1, grid_points - 1)]
    refined = scan(np.geomspace(lo, hi, grid_points))
    if refined is not None and refined[0] > best[0]:
        best = refined
    value, eps_star, k_star = best
    return CrcDesign(eps_star=eps_star, k_star=k_star, goodput=value)


# ---------------------------------------------------------------------------
# delay constraint with ideal feedback
# ---------------------------------------------------------------------------

def _loss_budget_cap(dc: DelayConstraint) -> float:
    """Largest float eps with eps**d <= q; pow can overshoot the root by an ulp."""
    cap = dc.q ** (1.0 / dc.d)
    while cap ** dc.d > dc.q:
        cap = math.nextafter(cap, 0.0)
    return cap


def delay_constrained_optimize(
    spec: ChannelSpec,
    dc: DelayConstraint,
    model: OutageModel,
) -> GoodputReport:
    """Cap the outage target so the d-round residual loss eps**d stays within q.

    The goodput expression is unchanged; by concavity the constrained
    optimum is min(eps_star, q**(1/d)), sitting on the boundary whenever
    the cap binds.
    """
    cap = _loss_budget_cap(dc)
    report = optimize_eps(spec, model)
    if report.eps_star <= cap:
        return report
    rate = rate_for_eps(spec, cap, model)
    return GoodputReport(
        eps_star=cap,
        rate_star=rate,
        goodput_star=rate * (1.0 - cap),
        model=model,
        iterations=report.iterations,
        bracket_width=report.bracket_width,
        unimodal_ok=report.unimodal_ok,
    )


# ---------------------------------------------------------------------------
# acknowledgement link reliability
# ---------------------------------------------------------------------------

def feedback_error_prob(fb: FeedbackSpec) -> float:
    """Acknowledgement word error rate for BPSK with maximum-ratio combining.

    The f symbols are repetition-spread evenly over l_fb Rayleigh branches,
    so each branch carries energy (f / l_fb) * snr.  With
    nu = sqrt(m / (1 + m)) and m = (f / l_fb) * snr, the combined error
    probability is the standard diversity closed form

        ((1 - nu) / 2)**l_fb * sum_{j=0}^{l_fb - 1} C(l_fb - 1 + j, j) * ((1 + nu) / 2)**j.
    """
    m = (fb.f / fb.l_fb) * fb.snr
    nu = math.sqrt(m / (1.0 + m))
    half_minus = 0.5 * (1.0 - nu)
    half_plus = 0.5 * (1.0 + nu)
    acc = 0.0
    for j in range(fb.l_fb):
        acc += math.comb(fb.l_fb - 1 + j, j) * half_plus ** j
    return half_minus ** fb.l_fb * acc


def min_feedback_symbols(snr: float, l_fb: int, target_eps_fb: float) -> int:
    """Fewest acknowledgement symbols whose word error rate meets the target.

    The error rate is strictly decreasing in f, so an exponential bracket
    followed by integer bisection finds the exact minimum.
    """
    if not 0.0 < target_eps_fb < 1.0:
        raise ValueError(
            f"target_eps_fb must lie in (0, 1), got {target_eps_fb!r}"
        )
    if feedback_error_prob(FeedbackSpec(f=1, l_fb=l_fb, snr=snr)) <= target_eps_fb:
        return 1
    hi = 2
    while feedback_error_prob(FeedbackSpec(f=hi, l_fb=l_fb, snr=snr)) > target_eps_fb:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feedback_error_prob(FeedbackSpec(f=mid, l_fb=l_fb, snr=snr)) > target_eps_fb:
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# packet loss and round count under feedback errors
# ---------------------------------------------------------------------------

def packet_loss_prob(eps: float, eps_fb: float, d: int) -> float:
    """Probability the packet is still undelivered when the sender moves on.

    Two redundant derivations are evaluated: the union of loss events
    (a NACK-to-ACK flip after l failed rounds, or d failed rounds with
    clean NACKs) and one minus the total delivery mass.  They must agree
    to 1e-12 or a ConsistencyError is raised.
    """
    _check_prob("eps", eps)
    _check_prob("eps_fb", eps_fb)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d!r}")
    loss = eps ** d * (1.0 - eps_fb) ** (d - 1)
    for rounds in range(1, d):
        loss += eps ** rounds * (1.0 - eps_fb) ** (rounds - 1) * eps_fb
    delivered = 0.0
    for i in range(1, d + 1):
        delivered += (1.0 - eps) * eps ** (i - 1) * (1.0 - eps_fb) ** (i - 1)
    alternative = 1.0 - delivered
    if abs(loss - alternative) > _DUAL_FORM_TOL:
        raise ConsistencyError(
            f"packet-loss derivations disagree: {loss!r} vs {alternative!r} "
            f"at eps={eps!r}, eps_fb={eps_fb!r}, d={d!r}"
        )
    return loss


def expected_rounds(eps: float, eps_fb: float, d: int) -> float:
    """Mean ARQ rounds consumed per packet under a d-round cap.

    The process stops in round i < d through a NACK-to-ACK flip after i
    failures, or through the first clean ACK after a decode in round
    j <= i followed by i - j ACK-to-NACK flips.  Round d is charged
    whenever neither stop happened earlier.  Python's 0**0 == 1 covers
    the error-free edge cases.
    """
    _check_prob("eps", eps)
    _check_prob("eps_fb", eps_fb)
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d!r}")
    clean = 1.0 - eps_fb
    total = 0.0
    for i in range(1, d):
        false_ack = eps ** i * clean ** (i - 1) * eps_fb
        landed_ack = sum(
            eps ** (j - 1) * clean ** j * (1.0 - eps) * eps_fb ** (i - j)
            for j in range(1, i + 1)
        )
        total += i * (false_ack + landed_ack)
    exhausted = eps ** (d - 1) * clean ** (d - 1)
    exhausted += sum(
        eps ** (j - 1) * clean ** (j - 1) * (1.0 - eps) * eps_fb ** (d - j)
        for j in range(1, d)
    )
    return total + d * exhausted


# ---------------------------------------------------------------------------
# goodput with acknowledgement overhead and errors
# ---------------------------------------------------------------------------

def noisy_fb_goodput(
    spec: ChannelSpec,
    eps: float,
    fb: Optional[FeedbackSpec],
    dc: DelayConstraint,
    n: int,
    model: OutageModel,
) -> float:
    """Delivered rate per channel use, acknowledgement costs included.

    Each round spends n forward symbols plus f acknowledgement symbols,
    delivers R_eps * (1 - xi_d) useful bits per packet on average, and
    lasts expected_rounds rounds.  ``fb=None`` models an ideal zero-cost
    acknowledgement (f = 0, no errors), in which case the expression
    collapses back to R_eps * (1 - eps) as the round cap grows.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    if fb is None:
        f, eps_fb = 0, 0.0
    else:
        f, eps_fb = fb.f, feedback_error_prob(fb)
    rate = rate_for_eps(spec, eps, model)
    xi = packet_loss_prob(eps, eps_fb, dc.d)
    rounds = expected_rounds(eps, eps_fb, dc.d)
    return (n / (n + f)) * rate * (1.0 - xi) / rounds


def simplified_constraints_ok(eps: float, eps_fb: float, dc: DelayConstraint) -> bool:
    """Product-form screen for the loss budget: eps * eps_fb <= q and eps <= q**(1/d).

    A diagnostic only; the joint optimizer keeps the exact d-round loss
    expression as the binding feasibility test.
    """
    return eps * eps_fb <= dc.q and eps <= dc.q ** (1.0 / dc.d)


# vectorized twins of the scalar forms above, used in the joint scan where
# one eps meets every candidate f at once; the returned design is always
# re-evaluated through the checked scalar functions

def _feedback_error_prob_vec(f: np.ndarray, l_fb: int, snr: float) -> np.ndarray:
    m = (f / l_fb) * snr
    nu = np.sqrt(m / (1.0 + m))
    half_minus = 0.5 * (1.0 - nu)
    half_plus = 0.5 * (1.0 + nu)
    acc = np.zeros_like(nu)
    for j in range(l_fb):
        acc += math.comb(l_fb - 1 + j, j) * half_plus ** j
    return half_minus ** l_fb * acc


def _packet_loss_vec(eps: float, eps_fb: np.ndarray, d: int) -> np.ndarray:
    loss = eps ** d * (1.0 - eps_fb) ** (d - 1)
    for rounds in range(1, d):
        loss = loss + eps ** rounds * (1.0 - eps_fb) ** (rounds - 1) * eps_fb
    return loss


def _expected_rounds_vec(eps: float, eps_fb: np.ndarray, d: int) -> np.ndarray:
    clean = 1.0 - eps_fb
    total = np.zeros_like(eps_fb)
    for i in range(1, d):
        term = eps ** i * clean ** (i - 1) * eps_fb
        for j in range(1, i + 1):
            term = term + eps ** (j - 1) * clean ** j * (1.0 - eps) * eps_fb ** (i - j)
        total += i * term
    exhausted = eps ** (d - 1) * clean ** (d - 1) * np.ones_like(eps_fb)
    for j in range(1, d):
        exhausted = (
            exhausted
            + eps ** (j - 1) * clean ** (j - 1) * (1.0 - eps) * eps_fb ** (d - j)
        )
    return total + d * exhausted


def joint_optimize_noisy_fb(
    spec: ChannelSpec,
    l_fb: int,
    dc: DelayConstraint,
    n: int,
    model: OutageModel,
    *,
    grid_points: int = 200,
) -> NoisyArqDesign:
    """Grid search over the outage target and acknowledgement length.

    eps runs over a log grid capped at q**(1/d), since larger targets miss
    the loss budget even with a perfect return link; f runs over
    1..f_max, where f_max first pushes the acknowledgement error rate below
    q on its own.  Feasibility uses the exact d-round loss expression.
    Ties prefer fewer acknowledgement symbols, and one refinement pass
    halves the grid spacing around the incumbent.

    Raises:
        InfeasibleError: if no scanned pair meets the loss budget.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    cap = _loss_budget_cap(dc)
    f_max = min_feedback_symbols(spec.snr, l_fb, dc.q)
    f_values = np.arange(1, f_max + 1, dtype=float)
    eps_fb_values = _feedback_error_prob_vec(f_values, l_fb, spec.snr)
    overhead = n / (n + f_values)

    def scan(eps_values: np.ndarray) -> Optional[tuple[float, float, int]]:
        best = None
        for eps in eps_values:
            eps = float(eps)
            xi = _packet_loss_vec(eps, eps_fb_values, dc.d)
            feasible = xi <= dc.q
            if not feasible.any():
                continue
            rate = rate_for_eps(spec, eps, model)
            rounds = _expected_rounds_vec(eps, eps_fb_values, dc.d)
            eta = np.where(feasible, overhead * rate * (1.0 - xi) / rounds, -np.inf)
            j = int(np.argmax(eta))  # first hit wins, i.e. the smallest f
            if best is None or eta[j] > best[0]:
                best = (float(eta[j]), eps, int(f_values[j]))
        return best

    lo_eps = min(1e-6, cap * 1e-3)
    grid = np.geomspace(lo_eps, cap, grid_points)
    best = scan(grid)
    if best is None:
        raise InfeasibleError(
            f"no (eps, f) pair meets loss budget q={dc.q!r} within d={dc.d!r} rounds"
        )
    idx = int(np.searchsorted(grid, best[1]))
    refine_lo = grid[max(idx - 1, 0)]
    refine_hi = grid[min(idx + 1, grid_points - 1)]
    refined = scan(np.geomspace(refine_lo, refine_hi, grid_points))
    if refined is not None and refined[0] > best[0]:
        best = refined

    _, eps_star, f_star = best
    fb = FeedbackSpec(f=f_star, l_fb=l_fb, snr=spec.snr)
    eps_fb_star = feedback_error_prob(fb)
    return NoisyArqDesign(
        eps=eps_star,
        eps_fb=eps_fb_star,
        f=f_star,
        xi_d=packet_loss_prob(eps_star, eps_fb_star, dc.d),
        expected_rounds=expected_rounds(eps_star, eps_fb_star, dc.d),
        goodput=noisy_fb_goodput(spec, eps_star, fb, dc, n, model),
    )
