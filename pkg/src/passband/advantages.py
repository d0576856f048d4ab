"""Group-relative advantages, prefix masking, and the masked surrogate loss.

Advantages come in two flavors for a group of binary rewards r_1..r_N with
k successes:

* leave-one-out (RLOO):  A_i = (N-k)/(N-1) for successes, -k/(N-1) for
  failures; each rollout is baselined by the mean of the other N-1.
* mean-centered:         A_i = r_i - k/N; zero-mean within the group.

Trajectories replayed from a saved prefix must not train on the replayed
tokens: the response mask is zero before the replay boundary t_cont and
one from it onward. The surrogate

    L = - sum_i A_i * sum_{t >= t_cont,i} log pi(token_{i,t} | context_t)

is evaluated against a small tabular softmax policy whose gradient is
analytic, so the masking contract (no gradient from prefix tokens) can be
checked exactly and against finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_softmax, softmax

from .errors import ContractError, DomainError

__all__ = [
    "TokenTrajectory",
    "ToyPolicy",
    "rloo_advantages",
    "mean_centered_advantages",
    "apply_prefix_mask",
    "unmasked_token_count",
    "masked_grpo_loss",
    "loss_gradient",
]


def _check_binary_rewards(rewards) -> np.ndarray:
    arr = np.asarray(rewards)
    if arr.ndim != 1:
        raise DomainError("rewards must be a flat sequence")
    if not np.all(np.isin(arr, (0, 1))):
        raise DomainError(f"rewards must be binary, got {list(rewards)!r}")
    return arr.astype(float)


def rloo_advantages(rewards) -> np.ndarray:
    """Leave-one-out advantages: reward minus the mean of the other N-1."""
    arr = _check_binary_rewards(rewards)
    n = arr.size
    if n < 2:
        raise DomainError(f"RLOO needs at least 2 rollouts, got {n}")
    k = arr.sum()
    return arr - (k - arr) / (n - 1)


def mean_centered_advantages(rewards) -> np.ndarray:
    """Advantages centered by the group mean: r_i - k/N. Sums to zero."""
    arr = _check_binary_rewards(rewards)
    if arr.size < 1:
        raise DomainError("mean centering needs at least 1 rollout")
    return arr - arr.mean()


@dataclass(frozen=True)
class TokenTrajectory:
    """A tokenized trajectory with a replay boundary and its response mask.

    Positions before replay_boundary are replayed prefix tokens and carry
    mask 0; positions at or after it are current-policy tokens with mask 1.
    When no mask is supplied it is derived from the boundary.
    """

    token_ids: tuple[int, ...]
    replay_boundary: int = 0
    response_mask: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        length = len(self.token_ids)
        if not 0 <= self.replay_boundary <= length:
            raise DomainError(
                f"replay boundary must lie in [0, {length}], got {self.replay_boundary}"
            )
        expected = tuple(
            0 if t < self.replay_boundary else 1 for t in range(length)
        )
        if self.response_mask == ():
            object.__setattr__(self, "response_mask", expected)
        elif tuple(self.response_mask) != expected:
            raise ContractError(
                "response_mask must be 0 before the replay boundary and 1 after"
            )

    def __len__(self) -> int:
        return len(self.token_ids)


def apply_prefix_mask(trajectory: TokenTrajectory, t_cont: int) -> TokenTrajectory:
    """Re-mask a trajectory at a new replay boundary. Idempotent."""
    return TokenTrajectory(trajectory.token_ids, t_cont)


def unmasked_token_count(trajectory: TokenTrajectory) -> int:
    return len(trajectory) - trajectory.replay_boundary


class ToyPolicy:
    """Tabular softmax policy: one categorical over a small vocabulary per
    context class, with positions bucketed by min(t, n_contexts - 1).

    Small enough that log-probabilities and the surrogate gradient are
    exact, which is the whole point: it stands in for the real policy so
    the masking contract is checkable.
    """

    def __init__(self, logits) -> None:
        arr = np.array(logits, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 2:
            raise DomainError(
                "logits must be a (contexts x vocabulary) matrix with vocab >= 2"
            )
        self.logits = arr

    @property
    def n_contexts(self) -> int:
        return self.logits.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logits.shape[1]

    def context_of(self, t: int) -> int:
        return min(t, self.n_contexts - 1)

    def log_probs(self) -> np.ndarray:
        return log_softmax(self.logits, axis=1)

    def probs(self) -> np.ndarray:
        return softmax(self.logits, axis=1)


def _check_group(group_trajectories, advantages) -> np.ndarray:
    if len(group_trajectories) == 0:
        raise DomainError("the trajectory group must not be empty")
    adv = np.asarray(advantages, dtype=float)
    if adv.ndim != 1 or adv.size != len(group_trajectories):
        raise ContractError(
            f"got {len(group_trajectories)} trajectories but "
            f"{adv.size} advantages"
        )
    return adv


def _scale(value, n_trajectories: int, n_unmasked: int,
           length_normalized: bool, group_reduction: str):
    if group_reduction not in ("sum", "mean"):
        raise DomainError(
            f"group_reduction must be 'sum' or 'mean', got {group_reduction!r}"
        )
    if group_reduction == "mean":
        value = value / n_trajectories
    if length_normalized and n_unmasked > 0:
        value = value / n_unmasked
    return value


def masked_grpo_loss(
    group_trajectories,
    advantages,
    policy: ToyPolicy,
    *,
    length_normalized: bool = False,
    group_reduction: str = "sum",
) -> float:
    """Masked policy-gradient surrogate of one group.

    Only tokens at or after each trajectory's replay boundary contribute.
    A fully masked trajectory contributes nothing, including to the
    length-normalization denominator (the count of unmasked tokens).
    """
    adv = _check_group(group_trajectories, advantages)
    lp = policy.log_probs()
    total = 0.0
    n_unmasked = 0
    for traj, a in zip(group_trajectories, adv):
        for t in range(traj.replay_boundary, len(traj)):
            total += a * lp[policy.context_of(t), traj.token_ids[t]]
            n_unmasked += 1
    return float(
        _scale(-total, len(group_trajectories), n_unmasked,
               length_normalized, group_reduction)
    )


def loss_gradient(
    group_trajectories,
    advantages,
    policy: ToyPolicy,
    *,
    length_normalized: bool = False,
    group_reduction: str = "sum",
) -> np.ndarray:
    """Analytic gradient of masked_grpo_loss with respect to every logit.

    With p_c = softmax(logits[c]), each unmasked token (context c, token v,
    advantage a) contributes a * (p_c - e_v) to row c; masked tokens
    contribute nothing, so a context touched only by prefix tokens has an
    exactly zero gradient block.
    """
    adv = _check_group(group_trajectories, advantages)
    weight = np.zeros_like(policy.logits)
    row_total = np.zeros(policy.n_contexts)
    n_unmasked = 0
    for traj, a in zip(group_trajectories, adv):
        for t in range(traj.replay_boundary, len(traj)):
            c = policy.context_of(t)
            weight[c, traj.token_ids[t]] += a
            row_total[c] += a
            n_unmasked += 1
    grad = policy.probs() * row_total[:, None] - weight
    return _scale(grad, len(group_trajectories), n_unmasked,
                  length_normalized, group_reduction)
