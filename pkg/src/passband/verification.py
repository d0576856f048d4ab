"""Independent oracle suites for the package's numerical claims.

Every check pits a closed form against a second route that does not share
code with it: explicit advantage enumeration, Monte Carlo sampling, or
central finite differences. The CLI `verify` subcommand runs these and
fails loudly; the test suite reuses them so the two entry points cannot
drift apart.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .advantages import (
    TokenTrajectory,
    ToyPolicy,
    loss_gradient,
    masked_grpo_loss,
    mean_centered_advantages,
    rloo_advantages,
)
from .controller import (
    BucketControllerState,
    ControllerParams,
    initial_controller_state,
    prefix_pool_memory_bound,
    update_controller,
)
from .groups import BucketKind, controlled_buckets
from .signals import (
    contrastive_pair_count,
    expected_pair_count,
    group_survival_probability,
    mean_centered_advantage_variance,
    reward_entropy,
    rloo_advantage_energy,
)

__all__ = [
    "CheckResult",
    "check_landmarks",
    "check_advantage_oracles",
    "check_monte_carlo",
    "finite_difference_gradient",
    "check_gradients",
    "check_controller",
    "check_memory_bounds",
    "run_default_checks",
]

_MIB = 1024.0 * 1024.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_landmarks() -> CheckResult:
    """Reference values of the signal quantities at N = 8.

    Rounded targets are held to 1e-4, exact rationals to 1e-12.
    """
    failures: list[str] = []

    def close(label: str, got: float, want: float, tol: float) -> None:
        if not abs(got - want) <= tol:
            failures.append(f"{label}: got {got!r}, want {want} +/- {tol}")

    close("H(0.5)", reward_entropy(0.5), 1.0, 1e-12)
    close("H(0.25)", reward_entropy(0.25), 0.8113, 1e-4)
    close("H(0.125)", reward_entropy(0.125), 0.5436, 1e-4)
    close("H(0)", reward_entropy(0.0), 0.0, 1e-12)
    close("S_8(0.5)", group_survival_probability(0.5, 8), 0.9922, 1e-4)
    close("S_8(0.25)", group_survival_probability(0.25, 8), 0.8999, 1e-4)
    close("S_8(0.125)", group_survival_probability(0.125, 8), 0.6564, 1e-4)
    close("E(4,8)", rloo_advantage_energy(4, 8), 16.0 / 49.0, 1e-12)
    close("E(2,8)", rloo_advantage_energy(2, 8), 12.0 / 49.0, 1e-12)
    close("E(1,8)", rloo_advantage_energy(1, 8), 7.0 / 49.0, 1e-12)
    pairs = [contrastive_pair_count(k, 8) for k in range(9)]
    if pairs != [0, 7, 12, 15, 16, 15, 12, 7, 0]:
        failures.append(f"pair counts: got {pairs}")
    return CheckResult(
        name="landmark values",
        passed=not failures,
        detail="; ".join(failures) if failures else "all reference values match",
    )


def check_advantage_oracles(max_n: int = 12) -> CheckResult:
    """Closed forms vs explicit enumeration for every (k, N) with N <= max_n.

    The energy oracle averages squared leave-one-out advantages; the
    variance oracle takes the population variance of mean-centered ones.
    Both must agree with the closed forms to 1e-12.
    """
    worst = 0.0
    for n in range(2, max_n + 1):
        for k in range(n + 1):
            rewards = [1] * k + [0] * (n - k)
            energy = float(np.mean(rloo_advantages(rewards) ** 2))
            worst = max(worst, abs(energy - rloo_advantage_energy(k, n)))
            variance = float(np.var(mean_centered_advantages(rewards)))
            worst = max(
                worst, abs(variance - mean_centered_advantage_variance(k, n))
            )
    return CheckResult(
        name="advantage oracles",
        passed=worst <= 1e-12,
        detail=f"max |closed form - enumeration| = {worst:.3e} over N <= {max_n}",
    )


def check_monte_carlo(seed: int = 0, draws: int = 10**6) -> CheckResult:
    """Sampled survival and pair-count means vs their closed forms.

    Survival must land within 3 standard errors, the pair-count mean
    within an absolute 0.05, at p in {0.125, 0.25, 0.5} and N = 8.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 777)))
    n = 8
    failures: list[str] = []
    details: list[str] = []
    for p in (0.125, 0.25, 0.5):
        ks = rng.binomial(n, p, size=draws)
        survival = float(np.mean((ks > 0) & (ks < n)))
        expected = group_survival_probability(p, n)
        se = np.sqrt(expected * (1.0 - expected) / draws)
        if abs(survival - expected) > 3.0 * se:
            failures.append(
                f"survival at p={p}: |{survival:.6f} - {expected:.6f}| > 3se"
            )
        pair_mean = float(np.mean(ks * (n - ks)))
        pair_expected = expected_pair_count(p, n)
        if abs(pair_mean - pair_expected) > 0.05:
            failures.append(
                f"pair mean at p={p}: |{pair_mean:.4f} - {pair_expected:.4f}| > 0.05"
            )
        details.append(f"p={p}: surv {survival:.5f}, pairs {pair_mean:.3f}")
    return CheckResult(
        name="monte carlo survival and pair count",
        passed=not failures,
        detail="; ".join(failures if failures else details),
    )


def finite_difference_gradient(
    group_trajectories,
    advantages,
    policy: ToyPolicy,
    step: float = 1e-5,
    **loss_options,
) -> np.ndarray:
    """Central finite differences of the masked surrogate over every logit."""
    base = policy.logits
    grad = np.zeros_like(base)
    for idx in np.ndindex(*base.shape):
        up = base.copy()
        up[idx] += step
        down = base.copy()
        down[idx] -= step
        grad[idx] = (
            masked_grpo_loss(group_trajectories, advantages, ToyPolicy(up), **loss_options)
            - masked_grpo_loss(group_trajectories, advantages, ToyPolicy(down), **loss_options)
        ) / (2.0 * step)
    return grad


def _random_gradient_instance(rng):
    n_contexts = int(rng.integers(3, 7))
    vocab = int(rng.integers(4, 9))
    policy = ToyPolicy(rng.normal(size=(n_contexts, vocab)))
    n_traj = int(rng.integers(2, 7))
    trajectories = []
    rewards = []
    for _ in range(n_traj):
        length = int(rng.integers(3, 11))
        tokens = tuple(int(x) for x in rng.integers(0, vocab, size=length))
        boundary = int(rng.integers(0, length + 1))
        trajectories.append(TokenTrajectory(tokens, boundary))
        rewards.append(int(rng.integers(0, 2)))
    options = {
        "length_normalized": bool(rng.integers(0, 2)),
        "group_reduction": "mean" if rng.integers(0, 2) else "sum",
    }
    return policy, trajectories, rloo_advantages(rewards), options


def check_gradients(seed: int = 0, instances: int = 50) -> CheckResult:
    """Analytic gradient vs finite differences, plus the masking contract.

    Each randomized instance must match central differences (step 1e-5) at
    relative tolerance 1e-4; contexts touched only by prefix tokens must
    carry exactly zero gradient; all-zero advantages must give an exactly
    zero gradient.
    """
    rng = np.random.default_rng(np.random.SeedSequence((seed, 778)))
    failures: list[str] = []
    for i in range(instances):
        policy, trajectories, advantages, options = _random_gradient_instance(rng)
        analytic = loss_gradient(trajectories, advantages, policy, **options)
        numeric = finite_difference_gradient(
            trajectories, advantages, policy, **options
        )
        if not np.allclose(analytic, numeric, rtol=1e-4, atol=1e-7):
            gap = float(np.max(np.abs(analytic - numeric)))
            failures.append(f"instance {i}: max gap {gap:.3e}")

    # Prefix-only contexts: with every boundary >= 2, positions 0 and 1
    # (and so contexts 0 and 1) are replayed everywhere.
    policy = ToyPolicy(np.linspace(-1.0, 1.0, 5 * 6).reshape(5, 6))
    trajectories = [
        TokenTrajectory(tuple(range(6)), 2),
        TokenTrajectory((5, 4, 3, 2, 1, 0, 1), 3),
    ]
    grad = loss_gradient(trajectories, np.array([1.0, -1.0]), policy)
    if not np.all(grad[:2] == 0.0):
        failures.append("prefix-only context rows are not exactly zero")
    zero_grad = loss_gradient(
        [TokenTrajectory((0, 1, 2), 0)], np.array([0.0]), policy
    )
    if not np.all(zero_grad == 0.0):
        failures.append("zero advantages did not give an exactly zero gradient")
    return CheckResult(
        name="masking gradient contract",
        passed=not failures,
        detail="; ".join(failures)
        if failures
        else f"{instances} randomized instances matched finite differences",
    )


def _controller_sequence_ok(
    bucket, rng, params: ControllerParams
) -> str | None:
    state = initial_controller_state(bucket, params)
    last_change_update = None
    for _ in range(int(rng.integers(10, 31))):
        p_new = float(rng.random())
        new_state = update_controller(state, p_new, params)
        expected_ema = (1.0 - params.alpha) * state.ema + params.alpha * p_new
        if abs(new_state.ema - expected_ema) > 1e-12:
            return "ema update mismatch"
        if not params.ratio_min <= new_state.ratio <= params.ratio_max:
            return f"ratio {new_state.ratio} escaped bounds"
        changed = new_state.ratio != state.ratio
        in_deadzone = (
            params.target - params.deadzone
            <= new_state.ema
            <= params.target + params.deadzone
        )
        if changed:
            if state.cooldown_remaining > 0:
                return "ratio changed during cooldown"
            if in_deadzone:
                return "ratio changed inside the deadzone"
            raised = new_state.ratio > state.ratio
            above = new_state.ema > params.target + params.deadzone
            hard = bucket.kind is BucketKind.HARD
            # hard lowers on above-target and raises below; easy inverted
            if raised != (above != hard):
                return "ratio moved in the wrong direction"
            if new_state.cooldown_remaining != params.cooldown:
                return "cooldown not re-armed after a change"
            if last_change_update is not None:
                gap = new_state.updates_seen - last_change_update
                if gap < params.cooldown + 1:
                    return f"only {gap} updates between ratio changes"
            last_change_update = new_state.updates_seen
        if new_state.updates_seen != state.updates_seen + 1:
            return "updates_seen did not increment"
        state = new_state
    return None


def check_controller(seed: int = 0, sequences: int = 10**4) -> CheckResult:
    """EMA half-crossing plus randomized feedback invariants per bucket.

    Starting from an EMA of 1.0 under a constant observation of 0.0, the
    EMA must cross 0.5 between updates 13 and 14 (0.95^13 > 0.5 >
    0.95^14). Randomized sequences then exercise bounds, deadzone,
    direction, cooldown spacing, and bookkeeping for every controlled
    bucket at N = 8.
    """
    params = ControllerParams()
    failures: list[str] = []
    buckets = controlled_buckets(8)
    state = BucketControllerState(bucket=buckets[0], ratio=0.5, ema=1.0)
    crossing = None
    for update in range(1, 30):
        state = update_controller(state, 0.0, params)
        if crossing is None and state.ema < 0.5:
            crossing = update
    if crossing != 14:
        failures.append(f"EMA crossed 0.5 at update {crossing}, want 14")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 779)))
    for bucket in buckets:
        for i in range(sequences):
            problem = _controller_sequence_ok(bucket, rng, params)
            if problem:
                failures.append(f"bucket {bucket.label}, sequence {i}: {problem}")
                break
    return CheckResult(
        name="controller unit behavior",
        passed=not failures,
        detail="; ".join(failures)
        if failures
        else f"half-crossing at update 14; {sequences} sequences per bucket clean",
    )


def check_memory_bounds() -> CheckResult:
    """Prefix-pool worst cases against their reference sizes in MiB."""
    cases = [
        ((128, 2048, 16384), 8.6),
        ((64, 4096, 32768), 8.6),
        ((64, 4096, 65536), 16.2),
    ]
    failures: list[str] = []
    details: list[str] = []
    for args, want_mib in cases:
        got = prefix_pool_memory_bound(*args) / _MIB
        if abs(got - want_mib) > 0.05:
            failures.append(f"{args}: got {got:.4f} MiB, want {want_mib}")
        details.append(f"{args} -> {got:.2f} MiB")
    return CheckResult(
        name="prefix pool memory bounds",
        passed=not failures,
        detail="; ".join(failures if failures else details),
    )


def run_default_checks(seed: int = 0) -> list[CheckResult]:
    """The oracle suite behind the `verify` subcommand."""
    return [
        check_landmarks(),
        check_advantage_oracles(),
        check_monte_carlo(seed),
        check_gradients(seed),
        check_controller(seed),
        check_memory_bounds(),
    ]
