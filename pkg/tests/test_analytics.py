"""Closed-form results checked against hand expansions and the oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvgmp import oracle
from mvgmp.analytics import (
    AlphaResult,
    ZipfPeriodicSubscription,
    alpha_asymptotic_spaced,
    alpha_asymptotic_uniform,
    alpha_asymptotic_zipf_consecutive,
    expected_alpha_exact,
    renewal_phase_kernel,
    view_failure_prob,
    window_subscription_mass,
)
from mvgmp.model import (
    Subscription,
    SynthesisConfig,
    TransmissionPlan,
    UserChannelState,
    combined_view_loss_prob,
)


def one_tx_each(M, p, n=1):
    """Every view broadcast n times on a single (channel, rate) with loss p."""
    state = UserChannelState(user_id="u", loss={(0, 0): p})
    plan = TransmissionPlan({(v, 0, 0): n for v in range(1, M + 1)})
    return state, plan


def random_instance(rng, max_views=6, max_range=3, max_total_tx=10):
    M = int(rng.integers(1, max_views + 1))
    R = int(rng.integers(1, max_range + 1))
    cfg = SynthesisConfig(total_views=M, dibr_range=R)
    pairs = [(0, 0), (0, 1), (1, 0)][: int(rng.integers(1, 4))]
    user = UserChannelState(
        user_id="u", loss={pair: float(rng.uniform(0.02, 0.98)) for pair in pairs}
    )
    counts = {}
    budget = max_total_tx
    for v in rng.permutation(np.arange(1, M + 1)):
        for pair in pairs:
            n = int(rng.integers(0, 3))
            n = min(n, budget)
            budget -= n
            if n:
                counts[(int(v), pair[0], pair[1])] = n
    return cfg, user, TransmissionPlan(counts)


class TestViewFailureProb:
    def test_boundary_view_is_direct_loss(self):
        cfg = SynthesisConfig(total_views=4, dibr_range=2)
        state = UserChannelState(user_id="u", loss={(0, 0): 0.1})
        plan = TransmissionPlan({(1, 0, 0): 2})
        assert view_failure_prob(cfg, state, plan, 1) == pytest.approx(0.01, abs=1e-15)

    def test_three_view_hand_enumeration(self):
        # fail iff view 2 lost and not both neighbors received:
        # 0.5 * (1 - 0.25) = 0.375
        cfg = SynthesisConfig(total_views=3, dibr_range=2)
        state, plan = one_tx_each(3, 0.5)
        assert view_failure_prob(cfg, state, plan, 2) == pytest.approx(0.375, abs=1e-15)
        assert oracle.enumerate_failure_prob(cfg, state, plan, 2) == pytest.approx(
            0.375, abs=1e-15
        )

    def test_zero_direct_loss_means_zero_failure(self):
        cfg = SynthesisConfig(total_views=5, dibr_range=2)
        state, plan = one_tx_each(5, 0.0)
        assert view_failure_prob(cfg, state, plan, 3) == 0.0

    def test_out_of_range_desired(self):
        cfg = SynthesisConfig(total_views=3, dibr_range=2)
        state, plan = one_tx_each(3, 0.5)
        with pytest.raises(ValueError):
            view_failure_prob(cfg, state, plan, 4)

    def test_matches_enumeration_on_random_instances(self):
        rng = np.random.Generator(np.random.PCG64(2024))
        for _ in range(100):
            cfg, user, plan = random_instance(rng)
            for desired in range(1, cfg.total_views + 1):
                closed = view_failure_prob(cfg, user, plan, desired)
                brute = oracle.enumerate_failure_prob(cfg, user, plan, desired)
                assert abs(closed - brute) < 1e-12

    def test_failure_at_most_direct_loss(self):
        rng = np.random.Generator(np.random.PCG64(7))
        for _ in range(50):
            cfg, user, plan = random_instance(rng)
            for desired in range(1, cfg.total_views + 1):
                fail = view_failure_prob(cfg, user, plan, desired)
                direct = combined_view_loss_prob(user, plan, desired)
                assert fail <= direct + 1e-15
                if desired in (1, cfg.total_views):
                    assert fail == pytest.approx(direct, abs=1e-15)

    def test_monotone_non_increasing_in_range(self):
        rng = np.random.Generator(np.random.PCG64(13))
        for _ in range(30):
            cfg, user, plan = random_instance(rng, max_range=1)
            M = cfg.total_views
            for desired in range(1, M + 1):
                vals = [
                    view_failure_prob(
                        SynthesisConfig(total_views=M, dibr_range=R), user, plan, desired
                    )
                    for R in range(1, 5)
                ]
                assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


class TestExpectedAlphaExact:
    def test_all_certain(self):
        cfg = SynthesisConfig(total_views=3, dibr_range=2)
        state, plan = one_tx_each(3, 0.0)
        got = expected_alpha_exact(cfg, state, plan, Subscription("u", (1, 2, 3)))
        assert got.value == 1.0
        assert got.kind == "exact-expectation"

    def test_single_view_reduction(self):
        cfg = SynthesisConfig(total_views=3, dibr_range=2)
        state, plan = one_tx_each(3, 0.5)
        got = expected_alpha_exact(cfg, state, plan, Subscription("u", (2,)))
        assert got.value == pytest.approx(1 - 0.375, abs=1e-15)

    def test_untransmitted_boundary_views(self):
        cfg = SynthesisConfig(total_views=4, dibr_range=2)
        state = UserChannelState(user_id="u", loss={(0, 0): 0.5})
        got = expected_alpha_exact(
            cfg, state, TransmissionPlan({}), Subscription("u", (1, 4))
        )
        assert got.value == 0.0

    def test_mean_over_views(self):
        cfg = SynthesisConfig(total_views=3, dibr_range=2)
        state, plan = one_tx_each(3, 0.5)
        per_view = [
            1 - view_failure_prob(cfg, state, plan, v) for v in (1, 2, 3)
        ]
        got = expected_alpha_exact(cfg, state, plan, Subscription("u", (1, 2, 3)))
        assert got.value == pytest.approx(sum(per_view) / 3, abs=1e-15)


class TestAlphaAsymptoticUniform:
    def test_range_one_collapse(self):
        for p in (0.0, 0.3, 0.9, 1.0):
            assert alpha_asymptotic_uniform(p, 1).value == pytest.approx(1 - p, abs=1e-15)

    def test_perfect_channel(self):
        assert alpha_asymptotic_uniform(0.0, 4).value == 1.0

    def test_hand_expansion_anchor(self):
        # 0.5 * (0.5 + 2*0.5*0.5 + 0.25) = 0.625
        assert alpha_asymptotic_uniform(0.5, 2).value == pytest.approx(0.625, abs=1e-15)

    def test_monte_carlo_convergence(self):
        est = oracle.mc_alpha_uniform(0.5, 2, 10**5, p_select=0.3, seed=42)
        assert abs(alpha_asymptotic_uniform(0.5, 2).value - est.mean) < 0.01

    @settings(max_examples=60)
    @given(
        p=st.floats(min_value=0.01, max_value=0.99),
        R=st.integers(min_value=1, max_value=6),
    )
    def test_strictly_increasing_in_range(self, p, R):
        assert (
            alpha_asymptotic_uniform(p, R + 1).value
            > alpha_asymptotic_uniform(p, R).value
        )

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            alpha_asymptotic_uniform(-0.1, 2)
        with pytest.raises(ValueError):
            alpha_asymptotic_uniform(0.5, 0)


class TestAlphaAsymptoticSpaced:
    def test_spacing_one_equals_uniform(self):
        for p in (0.0, 0.2, 0.5, 0.9):
            for R in range(1, 6):
                assert (
                    alpha_asymptotic_spaced(p, R, 1).value
                    == alpha_asymptotic_uniform(p, R).value
                )

    def test_hand_expansion_anchor(self):
        # 0.5 * (2*0.5 + 0.5) / 2 = 0.375
        assert alpha_asymptotic_spaced(0.5, 2, 2).value == pytest.approx(0.375, abs=1e-15)

    def test_perfect_channel_full_coverage(self):
        for R, spacing in ((2, 2), (3, 2), (5, 5)):
            assert alpha_asymptotic_spaced(0.0, R, spacing).value == pytest.approx(1.0)

    def test_spacing_exceeding_range_rejected(self):
        with pytest.raises(ValueError):
            alpha_asymptotic_spaced(0.5, 2, 3)

    @settings(max_examples=60)
    @given(
        p=st.floats(min_value=0.0, max_value=1.0),
        R=st.integers(min_value=1, max_value=6),
        spacing=st.integers(min_value=1, max_value=6),
    )
    def test_never_beats_uniform_delivery(self, p, R, spacing):
        if spacing > R:
            spacing = R
        spaced = alpha_asymptotic_spaced(p, R, spacing).value
        uniform = alpha_asymptotic_uniform(p, R).value
        assert spaced <= uniform + 1e-12

    def test_monte_carlo_convergence(self):
        est = oracle.mc_alpha_spaced(0.5, 2, 2, 10**5, seed=11)
        assert abs(0.375 - est.mean) < 0.01


class TestZipfSubscription:
    def test_weights_must_be_probabilities(self):
        ZipfPeriodicSubscription(period=5, exponent=2.0, normalizer=1.0)
        with pytest.raises(ValueError):
            ZipfPeriodicSubscription(period=5, exponent=2.0, normalizer=1.5)
        with pytest.raises(ValueError):
            ZipfPeriodicSubscription(period=0, exponent=1.0, normalizer=0.5)

    def test_phase_mapping_wraps_to_period(self):
        z = ZipfPeriodicSubscription(period=5, exponent=2.0, normalizer=1.0)
        assert [z.phase_of(k) for k in (1, 5, 6, 10, 11)] == [1, 5, 1, 5, 1]

    def test_window_mass_is_cyclic_sum(self):
        z = ZipfPeriodicSubscription(period=4, exponent=1.0, normalizer=0.8)
        w = z.weights
        # window of 6 after phase 3: positions 4,1,2,3,4,1
        expect = w[3] + w[0] + w[1] + w[2] + w[3] + w[0]
        assert window_subscription_mass(z, 3, 6) == pytest.approx(expect, abs=1e-12)
        assert window_subscription_mass(z, 2, 0) == 0.0


class TestRenewalPhaseKernel:
    @settings(max_examples=40)
    @given(
        p=st.floats(min_value=0.01, max_value=0.99),
        m=st.integers(min_value=1, max_value=8),
    )
    def test_rows_sum_to_one_and_uniform_is_stationary(self, p, m):
        kernel = np.array(renewal_phase_kernel(p, m))
        assert np.allclose(kernel.sum(axis=1), 1.0, atol=1e-12)
        pi = np.full(m, 1.0 / m)
        assert np.allclose(pi @ kernel, pi, atol=1e-12)


class TestAlphaZipfConsecutive:
    def test_certain_reception_full_subscription(self):
        z = ZipfPeriodicSubscription(period=3, exponent=0.0, normalizer=1.0)
        assert alpha_asymptotic_zipf_consecutive(1.0, 2, z).value == pytest.approx(1.0)

    def test_reduces_to_uniform_subscription(self):
        z = ZipfPeriodicSubscription(period=1, exponent=0.0, normalizer=1.0)
        for p in (0.1, 0.3, 0.5, 0.8, 1.0):
            for R in (1, 2, 3, 5):
                got = alpha_asymptotic_zipf_consecutive(p, R, z).value
                ref = alpha_asymptotic_uniform(1.0 - p, R).value
                assert got == pytest.approx(ref, abs=1e-12)

    def test_matches_markov_reward_oracle(self):
        z = ZipfPeriodicSubscription(period=5, exponent=2.0, normalizer=1.0)
        closed = alpha_asymptotic_zipf_consecutive(0.5, 2, z).value
        est = oracle.mc_alpha_zipf_consecutive(0.5, 2, z, 10**6, seed=314)
        assert abs(closed - est.mean) < 0.02

    def test_zero_success_probability(self):
        z = ZipfPeriodicSubscription(period=4, exponent=1.0, normalizer=0.5)
        assert alpha_asymptotic_zipf_consecutive(0.0, 3, z).value == 0.0


class TestAlphaResult:
    def test_value_range_enforced(self):
        with pytest.raises(ValueError):
            AlphaResult(value=1.5, kind="asymptotic")
        with pytest.raises(ValueError):
            AlphaResult(value=0.5, kind="magic")
