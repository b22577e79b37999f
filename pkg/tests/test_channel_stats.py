"""Scalar special functions: Lambert W, Gaussian tail, MI moments."""

from __future__ import annotations

import math

import pytest

from arqopt.channel_stats import (
    ChannelSpec,
    MiStats,
    gaussian_tail,
    gaussian_tail_inv,
    kappa,
    lambert_w0,
    mi_stats,
)

# Reference values computed with mpmath at 30 significant digits.
LAMBERT_REFS = {
    0.01: 0.0099014738435950118853,
    0.5: 0.35173371124919582602,
    1.0: 0.567143290409783873,
    2.0: 0.85260550201372549135,
    10.0: 1.7455280027406993831,
    100.0: 3.3856301402900501849,
    1000.0: 5.2496028524015962271,
    1e6: 11.383358086140052622,
    -0.25: -0.35740295618138890307,
    -0.36: -0.80608431597081777829,
}

GAUSSIAN_TAIL_REFS = {
    0.5: 0.30853753872598689636,
    1.3: 0.096800484585610333152,
    1.96: 0.024997895148220434137,
    3.0: 0.0013498980316300945267,
    -1.0: 0.84134474606854294859,
}

GAUSSIAN_TAIL_INV_REFS = {
    0.3: 0.52440051270804078404,
    0.1: 1.281551565544600467,
    0.01: 2.3263478740408411009,
    0.001: 3.0902323061678135415,
    1e-6: 4.7534243088228989482,
}

# Dual-route check: adaptive quadrature of E[ln(1+s*g)] against the
# closed form exp(1/s) E1(1/s), both converted to bits.  Values agree
# to ~1e-13, frozen here at full double precision.
MI_REFS = {
    0.5: (0.52128700371590688, 0.40869025688576293),
    1.0: (0.86034738227088595, 0.60576116306261604),
    math.sqrt(10.0): (1.71597418506740521, 0.97767466971203034),
    10.0: (2.90651480841480498, 1.31500685398206412),
    100.0: (5.88404823368347345, 1.70366969641672337),
}


class TestLambertW0:
    @pytest.mark.parametrize("x,ref", sorted(LAMBERT_REFS.items()))
    def test_reference_values(self, x: float, ref: float) -> None:
        assert lambert_w0(x) == pytest.approx(ref, rel=1e-12)

    def test_fixed_points(self) -> None:
        assert lambert_w0(0.0) == 0.0
        assert lambert_w0(math.e) == pytest.approx(1.0, abs=1e-14)

    def test_defining_residual_on_log_grid(self) -> None:
        # w * exp(w) must reproduce x across the whole supported range,
        # including the flat region near the branch point.
        xs = [-1.0 / math.e + 1e-6]
        x = 1e-8
        while x <= 1e6:
            xs.append(x)
            x *= 10.0
        for x in xs:
            w = lambert_w0(x)
            assert abs(w * math.exp(w) - x) <= 1e-10 * max(1.0, abs(x))

    def test_monotone_increasing(self) -> None:
        xs = [-0.36, -0.2, 0.0, 0.3, 1.0, 5.0, 50.0, 1e4]
        ws = [lambert_w0(x) for x in xs]
        assert all(a < b for a, b in zip(ws, ws[1:]))

    @pytest.mark.parametrize("bad", [-0.5, -1.0, math.nan])
    def test_outside_domain_raises(self, bad: float) -> None:
        with pytest.raises(ValueError):
            lambert_w0(bad)


class TestGaussianTail:
    @pytest.mark.parametrize("x,ref", sorted(GAUSSIAN_TAIL_REFS.items()))
    def test_reference_values(self, x: float, ref: float) -> None:
        assert gaussian_tail(x) == pytest.approx(ref, rel=1e-13)

    def test_midpoint_and_symmetry(self) -> None:
        assert gaussian_tail(0.0) == 0.5
        for x in (0.25, 1.0, 2.5, 4.0):
            assert gaussian_tail(-x) == pytest.approx(
                1.0 - gaussian_tail(x), rel=1e-14
            )

    def test_far_tail_underflows_gracefully(self) -> None:
        assert gaussian_tail(40.0) < 1e-300
        assert gaussian_tail(40.0) >= 0.0

    def test_strictly_decreasing(self) -> None:
        xs = [-6.0 + 0.5 * i for i in range(25)]
        vals = [gaussian_tail(x) for x in xs]
        assert all(a > b for a, b in zip(vals, vals[1:]))


class TestGaussianTailInv:
    @pytest.mark.parametrize("p,ref", sorted(GAUSSIAN_TAIL_INV_REFS.items()))
    def test_reference_values(self, p: float, ref: float) -> None:
        assert gaussian_tail_inv(p) == pytest.approx(ref, rel=1e-12)

    def test_median_is_exact_zero(self) -> None:
        assert gaussian_tail_inv(0.5) == 0.0

    def test_round_trip_identity(self) -> None:
        # Inverse composed with forward recovers x well inside 1e-8
        # everywhere the tail probability is representable.
        for i in range(121):
            x = -6.0 + 0.1 * i
            assert abs(gaussian_tail_inv(gaussian_tail(x)) - x) <= 1e-8

    def test_mirror_symmetry(self) -> None:
        for p in (0.01, 0.2, 0.45):
            assert gaussian_tail_inv(1.0 - p) == pytest.approx(
                -gaussian_tail_inv(p), rel=1e-12
            )

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.1, 1.1, math.nan])
    def test_outside_open_interval_raises(self, bad: float) -> None:
        with pytest.raises(ValueError):
            gaussian_tail_inv(bad)


class TestMiStats:
    @pytest.mark.parametrize("snr,ref", sorted(MI_REFS.items()))
    def test_frozen_moments(self, snr: float, ref: tuple[float, float]) -> None:
        st = mi_stats(snr)
        assert st.mu_bits == pytest.approx(ref[0], abs=1e-9)
        assert st.sigma_bits == pytest.approx(ref[1], abs=1e-9)

    def test_returns_tagged_record(self) -> None:
        st = mi_stats(2.0)
        assert isinstance(st, MiStats)
        assert st.snr == 2.0

    def test_moments_increase_with_snr(self) -> None:
        grid = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0]
        mus = [mi_stats(s).mu_bits for s in grid]
        sds = [mi_stats(s).sigma_bits for s in grid]
        assert all(a < b for a, b in zip(mus, mus[1:]))
        assert all(a < b for a, b in zip(sds, sds[1:]))

    def test_small_snr_mean_matches_linear_expansion(self) -> None:
        # E[log2(1+s*g)] ~ s/ln2 for small s (up to the s^2 term).
        s = 1e-4
        assert mi_stats(s).mu_bits == pytest.approx(s / math.log(2.0), rel=2e-4)

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_nonpositive_snr_raises(self, bad: float) -> None:
        with pytest.raises(ValueError):
            mi_stats(bad)


class TestKappa:
    def test_frozen_values_single_branch(self) -> None:
        assert kappa(mi_stats(1.0), 1) == pytest.approx(0.7040890407124971, rel=1e-12)
        assert kappa(mi_stats(10.0), 1) == pytest.approx(0.4524342522442757, rel=1e-12)

    def test_quarter_diversity_halves_spread(self) -> None:
        st = mi_stats(7.3)
        assert kappa(st, 4) == kappa(st, 1) / 2.0

    def test_bounded_and_decreasing(self) -> None:
        snrs = [0.5, 1.0, 4.0, 16.0, 64.0]
        for l in (1, 2, 8):
            vals = [kappa(mi_stats(s), l) for s in snrs]
            assert all(0.0 < v < 1.0 for v in vals)
            assert all(a > b for a, b in zip(vals, vals[1:]))
        st = mi_stats(5.0)
        by_l = [kappa(st, l) for l in (1, 2, 4, 8, 16)]
        assert all(a > b for a, b in zip(by_l, by_l[1:]))

    def test_invalid_diversity_raises(self) -> None:
        with pytest.raises(ValueError):
            kappa(mi_stats(1.0), 0)


class TestChannelSpec:
    def test_accepts_valid_fields(self) -> None:
        spec = ChannelSpec(snr=2.0, diversity_l=3)
        assert spec.snr == 2.0
        assert spec.diversity_l == 3

    def test_single_branch_default(self) -> None:
        assert ChannelSpec(1.0).diversity_l == 1

    @pytest.mark.parametrize("snr,l", [(0.0, 1), (-1.0, 1), (1.0, 0), (1.0, -2)])
    def test_invalid_fields_raise(self, snr: float, l: int) -> None:
        with pytest.raises(ValueError):
            ChannelSpec(snr=snr, diversity_l=l)
