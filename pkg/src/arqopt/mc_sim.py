"""Event-level ARQ simulators used to cross-check the analytical expressions.

Both simulators walk actual packet lifecycles round by round instead of
evaluating formulas, so agreement with the analytical goodput, loss and
round-count expressions is evidence rather than tautology.  Randomness
comes from a single seeded generator and every round draws full-width
arrays, which keeps a given configuration bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .arq_practical import DelayConstraint, FeedbackSpec, feedback_error_prob
from .channel_stats import ChannelSpec
from .harq import HarqSpec
from .outage import DEFAULT_SEED

__all__ = ["SimConfig", "SimResult", "simulate_simple_arq", "simulate_harq"]


@dataclass(frozen=True)
class SimConfig:
    """One simulation scenario.

    ``forward_eps`` switches the forward link between two modes: ``None``
    draws Rayleigh fades and decodes a round when its mutual information
    clears ``rate_bits``, while a numeric value short-circuits the channel
    into an i.i.d. decode-failure coin with that bias (useful for checking
    the feedback layer against hand-computable trees).  ``f`` mirrors the
    acknowledgement length of ``fb`` and is 0 for ideal feedback.
    """

    channel: ChannelSpec
    rate_bits: float
    dc: Optional[DelayConstraint] = None
    fb: Optional[FeedbackSpec] = None
    harq: Optional[HarqSpec] = None
    packets: int = 100_000
    seed: int = DEFAULT_SEED
    n: int = 100
    forward_eps: Optional[float] = None
    f: int = field(init=False)

    def __post_init__(self) -> None:
        if not self.rate_bits > 0.0:
            raise ValueError(f"rate_bits must be positive, got {self.rate_bits!r}")
        if self.packets < 1:
            raise ValueError(f"packets must be >= 1, got {self.packets!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n!r}")
        if self.forward_eps is not None and not 0.0 <= self.forward_eps < 1.0:
            raise ValueError(
                f"forward_eps must lie in [0, 1), got {self.forward_eps!r}"
            )
        if self.harq is not None:
            if self.fb is not None or self.forward_eps is not None:
                raise ValueError(
                    "incremental-redundancy mode assumes ideal feedback and "
                    "a faded forward link"
                )
            if self.harq.r_init != self.rate_bits:
                raise ValueError(
                    f"rate_bits {self.rate_bits!r} must equal the initial "
                    f"rate {self.harq.r_init!r}"
                )
        object.__setattr__(self, "f", self.fb.f if self.fb is not None else 0)


@dataclass(frozen=True)
class SimResult:
    packets_offered: int
    packets_delivered: int
    packets_lost: int
    total_rounds: int
    goodput_estimate: float
    goodput_stderr: float
    loss_rate: float
    loss_rate_stderr: float
    mean_rounds: float
    mean_rounds_stderr: float


def _pack_result(cfg: SimConfig, delivered: np.ndarray, rounds: np.ndarray) -> SimResult:
    """Aggregate per-packet outcomes; goodput is delivered bits over symbol time."""
    npk = cfg.packets
    n_del = int(np.count_nonzero(delivered))
    total_rounds = int(rounds.sum())
    loss_rate = (npk - n_del) / npk
    goodput = (n_del * cfg.rate_bits * cfg.n) / (total_rounds * (cfg.n + cfg.f))
    scale = cfg.rate_bits * cfg.n / (cfg.n + cfg.f)
    d_bar = n_del / npk
    x_bar = total_rounds / npk
    if npk >= 2:
        cov = np.cov(delivered.astype(float), rounds.astype(float), ddof=1)
        grad_d = scale / x_bar
        grad_x = -scale * d_bar / x_bar ** 2
        var = (
            grad_d * grad_d * cov[0, 0]
            + 2.0 * grad_d * grad_x * cov[0, 1]
            + grad_x * grad_x * cov[1, 1]
        ) / npk
        goodput_se = math.sqrt(max(var, 0.0))
        rounds_se = float(rounds.std(ddof=1) / math.sqrt(npk))
    else:
        goodput_se = 0.0
        rounds_se = 0.0
    return SimResult(
        packets_offered=npk,
        packets_delivered=n_del,
        packets_lost=npk - n_del,
        total_rounds=total_rounds,
        goodput_estimate=goodput,
        goodput_stderr=goodput_se,
        loss_rate=loss_rate,
        loss_rate_stderr=math.sqrt(loss_rate * (1.0 - loss_rate) / npk),
        mean_rounds=float(rounds.mean()),
        mean_rounds_stderr=rounds_se,
    )


def simulate_simple_arq(cfg: SimConfig) -> SimResult:
    """Retransmit-identical-codeword ARQ under a round cap and noisy feedback.

    Per round, every still-active sender transmits; the receiver decodes
    unless it already holds the packet, then acknowledges accordingly; the
    one-bit acknowledgement flips with the feedback word error rate.  A
    sender stops on a perceived ACK or after d rounds.  Losses are packets
    the receiver never held when the sender stopped: either a flipped NACK
    ended the exchange early or all d attempts failed.
    """
    if cfg.dc is None:
        raise ValueError("a round cap is required; set dc")
    if cfg.harq is not None:
        raise ValueError("cfg selects incremental redundancy; use simulate_harq")
    eps_fb = feedback_error_prob(cfg.fb) if cfg.fb is not None else 0.0
    rng = np.random.default_rng(cfg.seed)
    npk = cfg.packets
    l = cfg.channel.diversity_l

    alive = np.ones(npk, dtype=bool)
    delivered = np.zeros(npk, dtype=bool)
    rounds = np.zeros(npk, dtype=np.int64)

    for _ in range(cfg.dc.d):
        if not alive.any():
            break
        if cfg.forward_eps is None:
            gains = rng.exponential(size=(npk, l))
            mi = np.log2(1.0 + cfg.channel.snr * gains).mean(axis=1)
            decode_ok = mi > cfg.rate_bits
        else:
            decode_ok = rng.random(npk) >= cfg.forward_eps
        flip = rng.random(npk) < eps_fb

        rounds[alive] += 1
        delivered |= alive & ~delivered & decode_ok
        got_ack = delivered ^ flip
        alive &= ~got_ack

    return _pack_result(cfg, delivered, rounds)


_MAX_HARQ_CYCLES = 100_000


def simulate_harq(cfg: SimConfig) -> SimResult:
    """Two-layer incremental-redundancy ARQ with ideal, free feedback.

    Within a cycle of up to m_max slots the accumulated mutual information
    must clear the initial rate; a cycle that runs out restarts the packet
    from scratch with fresh fades, indefinitely, so every packet is
    eventually delivered and only the consumed rounds vary.
    """
    if cfg.harq is None:
        raise ValueError("cfg lacks an incremental-redundancy block; set harq")
    rng = np.random.default_rng(cfg.seed)
    npk = cfg.packets
    l = cfg.channel.diversity_l
    m = cfg.harq.m_max

    rounds = np.zeros(npk, dtype=np.int64)
    pending = np.arange(npk)
    for _ in range(_MAX_HARQ_CYCLES):
        if pending.size == 0:
            break
        gains = rng.exponential(size=(pending.size, m, l))
        per_round = np.log2(1.0 + cfg.channel.snr * gains).mean(axis=2)
        decoded_by = np.cumsum(per_round, axis=1) > cfg.harq.r_init
        done = decoded_by[:, -1]
        t = np.where(done, np.argmax(decoded_by, axis=1) + 1, m)
        rounds[pending] += t
        pending = pending[~done]
    else:
        raise RuntimeError(
            f"{pending.size} packets undelivered after {_MAX_HARQ_CYCLES} "
            f"restart cycles; r_init is far beyond what the link sustains"
        )

    return _pack_result(cfg, np.ones(npk, dtype=bool), rounds)
