"""CRC budget, delay cap, and noisy-acknowledgement ARQ design."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from arqopt.arq_practical import (
    CrcConfig,
    DelayConstraint,
    FeedbackSpec,
    NoisyArqDesign,
    _expected_rounds_vec,
    _feedback_error_prob_vec,
    _loss_budget_cap,
    _min_parity_bits,
    _packet_loss_vec,
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
from arqopt.channel_stats import ChannelSpec
from arqopt.exceptions import InfeasibleError
from arqopt.goodput_opt import optimize_eps
from arqopt.outage import (
    ExactL1,
    GaussianFading,
    MonteCarlo,
    rate_exact_l1,
    rate_for_eps,
)
from tree_oracle import enumerate_arq_tree, tree_loss, tree_mass, tree_rounds

SNR_5DB = 10.0 ** 0.5


class TestConfigTypes:
    @pytest.mark.parametrize("n,p", [(0, 0.5), (100, 0.0), (100, 1.0)])
    def test_crc_config_validation(self, n: int, p: float) -> None:
        with pytest.raises(ValueError):
            CrcConfig(n=n, p=p)

    @pytest.mark.parametrize("d,q", [(0, 0.5), (3, 0.0), (3, 1.0)])
    def test_delay_constraint_validation(self, d: int, q: float) -> None:
        with pytest.raises(ValueError):
            DelayConstraint(d=d, q=q)

    @pytest.mark.parametrize("f,l_fb,snr", [(0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.0)])
    def test_feedback_spec_validation(self, f: int, l_fb: int, snr: float) -> None:
        with pytest.raises(ValueError):
            FeedbackSpec(f=f, l_fb=l_fb, snr=snr)


class TestCrcJointOptimize:
    def test_parity_bits_arithmetic(self) -> None:
        # eps/p = 1e5 needs ceil(log2(1e5)) = 17 parity bits
        assert _min_parity_bits(0.1, 1e-6) == 17
        assert _min_parity_bits(0.1, 0.1) == 0
        assert _min_parity_bits(0.5, 0.25) == 1

    def test_slack_budget_reduces_to_unconstrained(self) -> None:
        spec = ChannelSpec(1.0, 1)
        design = crc_joint_optimize(spec, CrcConfig(n=200, p=0.6), ExactL1())
        assert design.k_star == 0
        unconstrained = optimize_eps(spec, ExactL1()).eps_star
        assert design.eps_star == pytest.approx(unconstrained, abs=5e-3)

    def test_matches_two_dimensional_grid_scan(self) -> None:
        spec = ChannelSpec(10.0, 1)
        crc = CrcConfig(n=100, p=1e-4)
        design = crc_joint_optimize(spec, crc, ExactL1())

        best = (-math.inf, None, None)
        for eps in np.geomspace(1e-6, 1.0 - 1e-6, 400):
            rate = rate_exact_l1(spec, float(eps))
            for k in range(65):
                if eps * 2.0 ** -k > crc.p:
                    continue
                effective = rate - k / crc.n
                if effective <= 0.0:
                    break
                value = effective * (1.0 - eps)
                if value > best[0]:
                    best = (value, float(eps), k)
                break  # larger k only loses goodput
        assert design.k_star == best[2]
        assert design.goodput >= best[0] - 1e-12
        assert design.eps_star == pytest.approx(best[1], rel=0.08)

    def test_parity_length_consistency(self) -> None:
        design = crc_joint_optimize(
            ChannelSpec(10.0, 1), CrcConfig(n=100, p=1e-4), ExactL1()
        )
        predicted = max(0, math.ceil(-math.log2(1e-4 / design.eps_star)))
        assert abs(design.k_star - predicted) <= 1

    def test_budget_always_met(self) -> None:
        crc = CrcConfig(n=100, p=1e-5)
        design = crc_joint_optimize(ChannelSpec(10.0, 1), crc, ExactL1())
        assert design.eps_star * 2.0 ** -design.k_star <= crc.p

    def test_hopeless_budget_is_infeasible(self) -> None:
        # one-symbol codewords cannot pay for ~30 parity bits
        with pytest.raises(InfeasibleError):
            crc_joint_optimize(ChannelSpec(1.0, 1), CrcConfig(n=1, p=1e-9), ExactL1())


class TestDelayConstrainedOptimize:
    def test_slack_constraint_returns_unconstrained_report(self) -> None:
        spec = ChannelSpec(10.0, 1)
        report = delay_constrained_optimize(spec, DelayConstraint(d=1, q=0.99), ExactL1())
        assert report == optimize_eps(spec, ExactL1())

    def test_binding_cap_lands_on_boundary(self) -> None:
        dc = DelayConstraint(d=3, q=1e-6)
        report = delay_constrained_optimize(ChannelSpec(10.0, 1), dc, ExactL1())
        assert report.eps_star == pytest.approx(1e-2, rel=1e-12)
        assert report.eps_star ** 3 <= 1e-6
        assert report.goodput_star == pytest.approx(
            report.rate_star * (1.0 - report.eps_star), rel=1e-12
        )

    def test_cap_value_is_largest_feasible_float(self) -> None:
        cap = _loss_budget_cap(DelayConstraint(d=3, q=1e-6))
        assert cap ** 3 <= 1e-6
        assert math.nextafter(cap, 1.0) ** 3 > 1e-6

    def test_capped_point_beats_feasible_grid(self) -> None:
        spec = ChannelSpec(10.0, 1)
        dc = DelayConstraint(d=3, q=1e-6)
        report = delay_constrained_optimize(spec, dc, ExactL1())
        for eps in np.geomspace(1e-6, report.eps_star, 50):
            value = rate_exact_l1(spec, float(eps)) * (1.0 - eps)
            assert value <= report.goodput_star + 1e-12


class TestFeedbackErrorProb:
    def test_paper_operating_points_at_5db(self) -> None:
        # the acknowledgement budget jumps from 79 symbols to 9 with one
        # extra diversity branch
        assert feedback_error_prob(FeedbackSpec(79, 1, SNR_5DB)) <= 1e-3
        assert feedback_error_prob(FeedbackSpec(78, 1, SNR_5DB)) > 1e-3
        assert feedback_error_prob(FeedbackSpec(9, 2, SNR_5DB)) <= 1e-3
        assert feedback_error_prob(FeedbackSpec(8, 2, SNR_5DB)) > 1e-3

    def test_frozen_values(self) -> None:
        cases = {
            (79, 1): 9.977264390e-04,
            (9, 2): 8.267019879e-04,
            (34, 2): 6.291550531e-05,
            (5, 5): 1.102068003e-04,
        }
        for (f, l_fb), ref in cases.items():
            got = feedback_error_prob(FeedbackSpec(f, l_fb, SNR_5DB))
            assert got == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize(
        "f,l_fb,snr", [(10, 1, SNR_5DB), (9, 2, SNR_5DB), (12, 3, SNR_5DB), (7, 2, 1.0)]
    )
    def test_matches_fading_average_quadrature(
        self, f: int, l_fb: int, snr: float
    ) -> None:
        # independent route: average the coherent BPSK tail over the
        # combined branch energy, Gamma(l_fb, f*snr/l_fb) distributed
        mbar = (f / l_fb) * snr

        def integrand(x: float) -> float:
            dens = (
                x ** (l_fb - 1)
                * math.exp(-x / mbar)
                / (math.gamma(l_fb) * mbar ** l_fb)
            )
            return 0.5 * math.erfc(math.sqrt(x)) * dens

        avg, err = quad(integrand, 0.0, math.inf, limit=200)
        assert err < 1e-6
        assert feedback_error_prob(FeedbackSpec(f, l_fb, snr)) == pytest.approx(
            avg, abs=1e-10
        )

    def test_vanishes_with_many_symbols(self) -> None:
        # single-branch fading only buys a 1/(4m) decay; a second branch
        # squares it
        assert feedback_error_prob(FeedbackSpec(1_000_000, 1, SNR_5DB)) < 1e-7
        assert feedback_error_prob(FeedbackSpec(1_000_000, 2, SNR_5DB)) < 1e-13

    def test_decreasing_in_f_and_snr(self) -> None:
        by_f = [feedback_error_prob(FeedbackSpec(f, 2, SNR_5DB)) for f in (2, 5, 10, 40)]
        assert all(a > b for a, b in zip(by_f, by_f[1:]))
        by_snr = [feedback_error_prob(FeedbackSpec(10, 2, s)) for s in (0.5, 1.0, 3.0, 10.0)]
        assert all(a > b for a, b in zip(by_snr, by_snr[1:]))

    def test_diversity_pays_at_large_budget(self) -> None:
        assert feedback_error_prob(FeedbackSpec(40, 2, SNR_5DB)) < feedback_error_prob(
            FeedbackSpec(40, 1, SNR_5DB)
        )


class TestMinFeedbackSymbols:
    def test_paper_budgets_at_5db(self) -> None:
        assert min_feedback_symbols(SNR_5DB, 1, 1e-3) == 79
        assert min_feedback_symbols(SNR_5DB, 2, 1e-3) == 9

    def test_loose_target_needs_one_symbol(self) -> None:
        assert feedback_error_prob(FeedbackSpec(1, 1, SNR_5DB)) < 0.49
        assert min_feedback_symbols(SNR_5DB, 1, 0.49) == 1

    def test_result_is_exactly_minimal(self) -> None:
        for l_fb, target in ((1, 1e-4), (2, 1e-5)):
            f = min_feedback_symbols(SNR_5DB, l_fb, target)
            assert feedback_error_prob(FeedbackSpec(f, l_fb, SNR_5DB)) <= target
            assert f == 1 or (
                feedback_error_prob(FeedbackSpec(f - 1, l_fb, SNR_5DB)) > target
            )

    def test_monotone_in_target(self) -> None:
        assert min_feedback_symbols(SNR_5DB, 1, 1e-4) >= min_feedback_symbols(
            SNR_5DB, 1, 1e-3
        )

    @pytest.mark.parametrize("bad", [0.0, 1.0])
    def test_degenerate_target_rejected(self, bad: float) -> None:
        with pytest.raises(ValueError):
            min_feedback_symbols(SNR_5DB, 1, bad)


class TestPacketLossProb:
    def test_clean_feedback_reduces_to_power(self) -> None:
        assert packet_loss_prob(0.2, 0.0, 4) == 0.2 ** 4

    def test_hand_enumerated_two_rounds(self) -> None:
        # round-1 NACK flip: 0.1*0.1; two failures with clean NACK: 0.01*0.9
        assert packet_loss_prob(0.1, 0.1, 2) == pytest.approx(0.019, rel=1e-12)

    def test_perfect_forward_link_never_loses(self) -> None:
        assert packet_loss_prob(0.0, 0.7, 5) == 0.0

    def test_dual_forms_agree_on_random_triples(self) -> None:
        # the two derivations are both evaluated inside the call; any
        # disagreement beyond 1e-12 raises
        rng = np.random.default_rng(2024)
        for _ in range(10_000):
            eps = float(rng.random())
            eps_fb = float(rng.random())
            d = int(rng.integers(1, 9))
            assert 0.0 <= packet_loss_prob(eps, eps_fb, d) <= 1.0

    def test_monotone_in_both_error_rates(self) -> None:
        by_eps = [packet_loss_prob(e, 0.1, 3) for e in (0.05, 0.1, 0.3, 0.6)]
        assert all(a < b for a, b in zip(by_eps, by_eps[1:]))
        by_fb = [packet_loss_prob(0.3, e, 3) for e in (0.0, 0.05, 0.2, 0.5)]
        assert all(a < b for a, b in zip(by_fb, by_fb[1:]))

    @pytest.mark.parametrize("eps,eps_fb,d", [(-0.1, 0.1, 2), (0.1, 1.5, 2), (0.1, 0.1, 0)])
    def test_domain_validation(self, eps: float, eps_fb: float, d: int) -> None:
        with pytest.raises(ValueError):
            packet_loss_prob(eps, eps_fb, d)


class TestExpectedRounds:
    def test_error_free_single_round(self) -> None:
        assert expected_rounds(0.0, 0.0, 7) == 1.0

    def test_hand_enumerated_cases(self) -> None:
        assert expected_rounds(0.5, 0.0, 2) == pytest.approx(1.5, rel=1e-12)
        assert expected_rounds(0.0, 0.5, 2) == pytest.approx(1.5, rel=1e-12)

    def test_clean_feedback_is_truncated_geometric(self) -> None:
        for eps, d in ((0.3, 4), (0.7, 6), (0.05, 2)):
            expected = (1.0 - eps ** d) / (1.0 - eps)
            assert expected_rounds(eps, 0.0, d) == pytest.approx(expected, rel=1e-12)

    def test_stays_within_round_budget(self) -> None:
        rng = np.random.default_rng(77)
        for _ in range(500):
            eps = float(rng.random())
            eps_fb = float(rng.random())
            d = int(rng.integers(1, 9))
            r = expected_rounds(eps, eps_fb, d)
            assert 1.0 - 1e-12 <= r <= d + 1e-12


class TestAgainstOutcomeTree:
    @pytest.mark.parametrize("eps", [0.0, 0.1, 0.5, 0.9])
    @pytest.mark.parametrize("eps_fb", [0.0, 0.05, 0.3])
    @pytest.mark.parametrize("d", [1, 2, 3, 6])
    def test_mass_loss_and_rounds(self, eps: float, eps_fb: float, d: int) -> None:
        leaves = enumerate_arq_tree(eps, eps_fb, d)
        assert abs(tree_mass(leaves) - 1.0) <= 1e-12
        assert abs(tree_loss(leaves) - packet_loss_prob(eps, eps_fb, d)) <= 1e-12
        assert abs(tree_rounds(leaves) - expected_rounds(eps, eps_fb, d)) <= 1e-12


class TestNoisyFbGoodput:
    def test_ideal_feedback_recovers_plain_goodput(self) -> None:
        spec = ChannelSpec(10.0, 1)
        eta = noisy_fb_goodput(
            spec, 0.3, None, DelayConstraint(d=60, q=0.5), 200, ExactL1()
        )
        ideal = rate_exact_l1(spec, 0.3) * 0.7
        assert eta == pytest.approx(ideal, rel=1e-9)

    def test_overhead_decreasing_in_f(self) -> None:
        spec = ChannelSpec(SNR_5DB, 3)
        dc = DelayConstraint(d=3, q=1e-3)
        etas = [
            noisy_fb_goodput(
                spec, 0.01, FeedbackSpec(f, 2, SNR_5DB), dc, 200, GaussianFading()
            )
            for f in (20, 40, 80, 160)
        ]
        assert all(a > b for a, b in zip(etas, etas[1:]))

    def test_bad_blocklength_rejected(self) -> None:
        with pytest.raises(ValueError):
            noisy_fb_goodput(
                ChannelSpec(1.0, 1), 0.1, None, DelayConstraint(2, 0.1), 0, ExactL1()
            )


class TestSimplifiedConstraints:
    def test_screen_matches_product_form(self) -> None:
        dc = DelayConstraint(d=3, q=1e-6)
        assert simplified_constraints_ok(0.009, 1e-5, dc)
        assert not simplified_constraints_ok(0.02, 1e-5, dc)  # above q**(1/d)
        assert not simplified_constraints_ok(0.009, 2e-4, dc)  # product too big


class TestVectorizedTwins:
    def test_feedback_error_matches_scalar(self) -> None:
        fs = np.arange(1.0, 60.0)
        for l_fb in (1, 2, 5):
            vec = _feedback_error_prob_vec(fs, l_fb, SNR_5DB)
            for f, v in zip(fs, vec):
                assert v == pytest.approx(
                    feedback_error_prob(FeedbackSpec(int(f), l_fb, SNR_5DB)), rel=1e-14
                )

    def test_loss_and_rounds_match_scalar(self) -> None:
        eps_fb = np.array([0.0, 1e-4, 0.01, 0.3])
        for eps in (0.005, 0.2, 0.8):
            for d in (1, 3, 5):
                loss_vec = _packet_loss_vec(eps, eps_fb, d)
                rounds_vec = _expected_rounds_vec(eps, eps_fb, d)
                for i, efb in enumerate(eps_fb):
                    assert loss_vec[i] == pytest.approx(
                        packet_loss_prob(eps, float(efb), d), rel=1e-12, abs=1e-300
                    )
                    assert rounds_vec[i] == pytest.approx(
                        expected_rounds(eps, float(efb), d), rel=1e-12
                    )


# one shared design for the 5 dB, L=3, two-branch feedback benchmark
JOINT_SPEC = ChannelSpec(SNR_5DB, 3)
JOINT_DC = DelayConstraint(d=3, q=1e-6)
JOINT_MODEL = MonteCarlo(samples=100_000, seed=12345)


@pytest.fixture(scope="module")
def design() -> NoisyArqDesign:
    return joint_optimize_noisy_fb(JOINT_SPEC, 2, JOINT_DC, 200, JOINT_MODEL)


class TestJointOptimizeNoisyFb:
    SPEC = JOINT_SPEC
    DC = JOINT_DC
    MODEL = JOINT_MODEL

    def test_benchmark_operating_point(self, design: NoisyArqDesign) -> None:
        assert 4e-3 <= design.eps <= 1.2e-2
        assert 29 <= design.f <= 39
        assert 3.15e-5 <= design.eps_fb <= 9.45e-5

    def test_feasibility_exact_and_simplified(self, design: NoisyArqDesign) -> None:
        assert design.xi_d <= self.DC.q
        assert simplified_constraints_ok(design.eps, design.eps_fb, self.DC)
        assert design.xi_d >= design.eps * design.eps_fb
        assert 1.0 <= design.expected_rounds <= self.DC.d

    def test_single_branch_feedback_sits_far_below_cap(self) -> None:
        design = joint_optimize_noisy_fb(self.SPEC, 1, self.DC, 200, self.MODEL)
        assert design.eps < 0.5 * self.DC.q ** (1.0 / self.DC.d)

    def test_beats_ultra_reliable_single_shot(self, design: NoisyArqDesign) -> None:
        # alternative design philosophy: make the forward link so clean
        # (eps = q) that acknowledgements are unnecessary
        single_shot = noisy_fb_goodput(
            self.SPEC, self.DC.q, None, DelayConstraint(d=1, q=self.DC.q), 200, self.MODEL
        )
        assert design.goodput >= single_shot

    def test_goodput_recomputes_from_fields(self, design: NoisyArqDesign) -> None:
        rate = rate_for_eps(self.SPEC, design.eps, self.MODEL)
        expected = (
            (200 / (200 + design.f))
            * rate
            * (1.0 - design.xi_d)
            / design.expected_rounds
        )
        assert design.goodput == pytest.approx(expected, rel=1e-12)
