"""Outage-target optimization and goodput analysis for ARQ over block fading.

The package answers one design question in several settings: at which
outage probability should a retransmission link operate?  Modules build on
each other roughly in this order:

``channel_stats``
    per-codeword mutual-information moments and small special functions,
``outage``
    interchangeable outage/rate backends (closed form, Gaussian, Monte
    Carlo, finite blocklength),
``goodput_opt``
    the goodput objective and the optimal outage target,
``arq_practical``
    error-detection overhead, round caps, and noisy acknowledgements,
``harq``
    incremental-redundancy accumulation across rounds,
``mc_sim``
    packet-level simulators used as independent cross-checks,
``cli``
    CSV-emitting command-line front end (``arqopt``).
"""

from .channel_stats import ChannelSpec, MiStats, gaussian_tail, gaussian_tail_inv, kappa, lambert_w0, mi_stats
from .exceptions import ConsistencyError, InfeasibleError
from .outage import (
    ExactL1,
    FiniteBlocklength,
    GaussianFading,
    MonteCarlo,
    OutageModel,
    RateEpsPoint,
    eps_for_rate,
    rate_for_eps,
)
from .goodput_opt import (
    GoodputReport,
    eps_star_gaussian,
    eps_star_l1_closed,
    goodput,
    optimize_eps,
)
from .arq_practical import (
    CrcConfig,
    CrcDesign,
    DelayConstraint,
    FeedbackSpec,
    NoisyArqDesign,
    crc_joint_optimize,
    delay_constrained_optimize,
    expected_rounds,
    feedback_error_prob,
    joint_optimize_noisy_fb,
    min_feedback_symbols,
    noisy_fb_goodput,
    packet_loss_prob,
    simplified_constraints_ok,
)
from .harq import (
    HarqSpec,
    InitialRateReport,
    harq_expected_rounds,
    harq_first_round_outage,
    harq_goodput,
    harq_outage,
    optimize_initial_rate,
)
from .mc_sim import SimConfig, SimResult, simulate_harq, simulate_simple_arq
from .search import SearchResult, bisect_monotone, golden_section_max

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ChannelSpec",
    "MiStats",
    "gaussian_tail",
    "gaussian_tail_inv",
    "kappa",
    "lambert_w0",
    "mi_stats",
    "ConsistencyError",
    "InfeasibleError",
    "ExactL1",
    "FiniteBlocklength",
    "GaussianFading",
    "MonteCarlo",
    "OutageModel",
    "RateEpsPoint",
    "eps_for_rate",
    "rate_for_eps",
    "GoodputReport",
    "eps_star_gaussian",
    "eps_star_l1_closed",
    "goodput",
    "optimize_eps",
    "CrcConfig",
    "CrcDesign",
    "DelayConstraint",
    "FeedbackSpec",
    "NoisyArqDesign",
    "crc_joint_optimize",
    "delay_constrained_optimize",
    "expected_rounds",
    "feedback_error_prob",
    "joint_optimize_noisy_fb",
    "min_feedback_symbols",
    "noisy_fb_goodput",
    "packet_loss_prob",
    "simplified_constraints_ok",
    "HarqSpec",
    "InitialRateReport",
    "harq_expected_rounds",
    "harq_first_round_outage",
    "harq_goodput",
    "harq_outage",
    "optimize_initial_rate",
    "SimConfig",
    "SimResult",
    "simulate_harq",
    "simulate_simple_arq",
    "SearchResult",
    "bisect_monotone",
    "golden_section_max",
]
