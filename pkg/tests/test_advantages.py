"""Advantage formulas, trajectory masking, and the masked surrogate loss."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from passband.advantages import (
    TokenTrajectory,
    ToyPolicy,
    apply_prefix_mask,
    loss_gradient,
    masked_grpo_loss,
    mean_centered_advantages,
    rloo_advantages,
    unmasked_token_count,
)
from passband.errors import ContractError, DomainError
from passband.signals import mean_centered_advantage_variance, rloo_advantage_energy
from passband.verification import finite_difference_gradient


class TestRlooAdvantages:
    def test_balanced_8(self):
        adv = rloo_advantages([1, 1, 1, 1, 0, 0, 0, 0])
        assert_allclose(adv[:4], 4 / 7)
        assert_allclose(adv[4:], -4 / 7)

    def test_single_pass(self):
        adv = rloo_advantages([1, 0, 0, 0, 0, 0, 0, 0])
        assert adv[0] == 1.0
        assert_allclose(adv[1:], -1 / 7)

    def test_degenerate_zero(self):
        assert_allclose(rloo_advantages([1] * 8), 0.0)
        assert_allclose(rloo_advantages([0] * 8), 0.0)

    def test_sign_structure(self):
        adv = rloo_advantages([1, 0, 1, 0, 0, 0, 0, 0])
        rewards = np.array([1, 0, 1, 0, 0, 0, 0, 0])
        assert np.all(adv[rewards == 1] > 0)
        assert np.all(adv[rewards == 0] < 0)

    def test_energy_matches_signal_formula(self):
        for n in (2, 4, 8, 12):
            for k in range(n + 1):
                adv = rloo_advantages([1] * k + [0] * (n - k))
                assert_allclose(
                    np.mean(adv**2), rloo_advantage_energy(k, n), atol=1e-12
                )

    def test_domain(self):
        with pytest.raises(DomainError):
            rloo_advantages([1])
        with pytest.raises(DomainError):
            rloo_advantages([1, 2])


class TestMeanCenteredAdvantages:
    def test_single_pass(self):
        adv = mean_centered_advantages([1, 0, 0, 0, 0, 0, 0, 0])
        assert adv[0] == 0.875
        assert_allclose(adv[1:], -0.125)

    def test_zero_mean(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            rewards = rng.integers(0, 2, size=8)
            assert abs(mean_centered_advantages(rewards).mean()) < 1e-15

    def test_variance_matches_signal_formula(self):
        for k in range(9):
            adv = mean_centered_advantages([1] * k + [0] * (8 - k))
            assert_allclose(
                np.mean(adv**2), mean_centered_advantage_variance(k, 8), atol=1e-12
            )


class TestTokenTrajectory:
    def test_auto_mask(self):
        t = TokenTrajectory(token_ids=(3, 1, 4, 1), replay_boundary=2)
        assert t.response_mask == (0, 0, 1, 1)
        assert len(t) == 4
        assert unmasked_token_count(t) == 2

    def test_zero_boundary_all_live(self):
        t = TokenTrajectory(token_ids=(5, 5, 5))
        assert t.response_mask == (1, 1, 1)

    def test_apply_prefix_mask(self):
        t = TokenTrajectory(token_ids=(3, 1, 4, 1, 5))
        masked = apply_prefix_mask(t, 3)
        assert masked.replay_boundary == 3
        assert masked.response_mask == (0, 0, 0, 1, 1)
        # Idempotent at the same boundary.
        again = apply_prefix_mask(masked, 3)
        assert again.response_mask == masked.response_mask

    def test_mask_monotone_in_boundary(self):
        t = TokenTrajectory(token_ids=tuple(range(6)))
        prev = 6
        for m in range(6):
            live = unmasked_token_count(apply_prefix_mask(t, m))
            assert live == 6 - m
            assert live <= prev
            prev = live

    def test_boundary_out_of_range(self):
        with pytest.raises(DomainError):
            TokenTrajectory(token_ids=(1, 2), replay_boundary=3)
        with pytest.raises(DomainError):
            TokenTrajectory(token_ids=(1, 2), replay_boundary=-1)

    def test_inconsistent_explicit_mask(self):
        with pytest.raises(ContractError):
            TokenTrajectory(
                token_ids=(1, 2, 3), replay_boundary=1, response_mask=(1, 1, 1)
            )


class TestToyPolicy:
    def test_uniform_log_probs(self):
        policy = ToyPolicy(logits=np.zeros((2, 4)))
        assert_allclose(policy.log_probs(), np.log(0.25))
        assert_allclose(policy.probs().sum(axis=1), 1.0)

    def test_context_clamping(self):
        policy = ToyPolicy(logits=np.zeros((3, 4)))
        assert policy.context_of(0) == 0
        assert policy.context_of(2) == 2
        assert policy.context_of(9) == 2

    def test_domain(self):
        with pytest.raises(DomainError):
            ToyPolicy(logits=np.zeros((3,)))
        with pytest.raises(DomainError):
            ToyPolicy(logits=np.zeros((3, 1)))


class TestMaskedLoss:
    def test_hand_value_uniform_policy(self):
        # Two tokens live under a uniform 2-token vocabulary: each costs log 2,
        # advantage 1 scales the sum, so the loss is exactly 2 log 2.
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        traj = TokenTrajectory(token_ids=(0, 1, 0, 1), replay_boundary=2)
        loss = masked_grpo_loss([traj], np.array([1.0]), policy)
        assert_allclose(loss, 2 * np.log(2), rtol=1e-15)

    def test_boundary_zero_counts_everything(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        traj = TokenTrajectory(token_ids=(0, 1, 0, 1))
        loss = masked_grpo_loss([traj], np.array([1.0]), policy)
        assert_allclose(loss, 4 * np.log(2), rtol=1e-15)

    def test_negative_advantage_flips_sign(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        traj = TokenTrajectory(token_ids=(0, 1), replay_boundary=1)
        up = masked_grpo_loss([traj], np.array([1.0]), policy)
        down = masked_grpo_loss([traj], np.array([-1.0]), policy)
        assert_allclose(up, -down, rtol=1e-15)

    def test_mean_reduction(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        trajs = [
            TokenTrajectory(token_ids=(0, 1), replay_boundary=1),
            TokenTrajectory(token_ids=(0, 1), replay_boundary=1),
        ]
        total = masked_grpo_loss(trajs, np.array([1.0, 1.0]), policy)
        mean = masked_grpo_loss(
            trajs, np.array([1.0, 1.0]), policy, group_reduction="mean"
        )
        assert_allclose(mean, total / 2, rtol=1e-15)

    def test_length_normalization(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        trajs = [
            TokenTrajectory(token_ids=(0, 1, 0, 1), replay_boundary=1),
            TokenTrajectory(token_ids=(0, 1), replay_boundary=1),
        ]
        raw = masked_grpo_loss(trajs, np.array([1.0, 1.0]), policy)
        normed = masked_grpo_loss(
            trajs, np.array([1.0, 1.0]), policy, length_normalized=True
        )
        # 3 + 1 live tokens total.
        assert_allclose(normed, raw / 4, rtol=1e-15)

    def test_fully_masked_trajectory_contributes_nothing(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        live = TokenTrajectory(token_ids=(0, 1), replay_boundary=1)
        dead = TokenTrajectory(token_ids=(0, 1), replay_boundary=2)
        with_dead = masked_grpo_loss(
            [live, dead], np.array([1.0, 5.0]), policy, length_normalized=True
        )
        alone = masked_grpo_loss(
            [live], np.array([1.0]), policy, length_normalized=True
        )
        assert_allclose(with_dead, alone, rtol=1e-15)

    def test_all_masked_is_zero(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        dead = TokenTrajectory(token_ids=(0, 1), replay_boundary=2)
        assert masked_grpo_loss([dead], np.array([1.0]), policy) == 0.0

    def test_contract_errors(self):
        policy = ToyPolicy(logits=np.zeros((2, 2)))
        traj = TokenTrajectory(token_ids=(0, 1))
        with pytest.raises(DomainError):
            masked_grpo_loss([], np.array([]), policy)
        with pytest.raises(ContractError):
            masked_grpo_loss([traj], np.array([1.0, 2.0]), policy)
        with pytest.raises(DomainError):
            masked_grpo_loss([traj], np.array([1.0]), policy, group_reduction="median")


class TestLossGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        for _ in range(5):
            policy = ToyPolicy(logits=rng.normal(size=(4, 5)))
            trajs = []
            advs = []
            for _ in range(3):
                length = int(rng.integers(3, 8))
                ids = tuple(int(v) for v in rng.integers(0, 5, size=length))
                boundary = int(rng.integers(0, length))
                trajs.append(TokenTrajectory(token_ids=ids, replay_boundary=boundary))
                advs.append(float(rng.normal()))
            advs = np.array(advs)
            analytic = loss_gradient(trajs, advs, policy)
            numeric = finite_difference_gradient(trajs, advs, policy)
            assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-7)

    def test_prefix_only_contexts_exactly_zero(self):
        # Boundary 3 on a 5-token trajectory: contexts 0..2 only ever appear
        # inside the replayed prefix, so their gradient block is exactly zero.
        policy = ToyPolicy(logits=np.linspace(-1, 1, 30).reshape(5, 6))
        traj = TokenTrajectory(
            token_ids=(0, 1, 2, 3, 4), replay_boundary=3
        )
        grad = loss_gradient([traj], np.array([1.5]), policy)
        assert np.all(grad[:3] == 0.0)
        assert np.any(grad[3:] != 0.0)

    def test_zero_advantages_zero_gradient(self):
        policy = ToyPolicy(logits=np.linspace(-1, 1, 12).reshape(3, 4))
        traj = TokenTrajectory(token_ids=(0, 1, 2, 3))
        grad = loss_gradient([traj], np.array([0.0]), policy)
        assert np.all(grad == 0.0)

    def test_gradient_shape(self):
        policy = ToyPolicy(logits=np.zeros((3, 4)))
        traj = TokenTrajectory(token_ids=(0, 1, 2))
        assert loss_gradient([traj], np.array([1.0]), policy).shape == (3, 4)
