"""Prefix selection, replay boundaries, and the per-bucket pass-rate controller.

Skewed fresh groups seed replay material: a hard group (mostly failures)
saves one successful trajectory, an easy group (mostly successes) saves
one failing trajectory. Rerollouts restart from the first M = floor(r_b T)
steps of the saved trajectory, where r_b is a per-bucket prefix ratio.

Each controlled bucket b runs an independent feedback loop on its
rerollout pass rate:

    ema <- (1 - alpha) ema + alpha p_new

with a deadzone around the 0.5 target, a fixed adjustment step, ratio
bounds, and a cooldown of several controller updates between consecutive
ratio changes. Hard buckets lower r_b when rerollouts pass too often
(shorter successful head start) and raise it when they pass too rarely;
easy buckets invert the direction because their prefixes are failing ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .errors import ContractError, DomainError
from .groups import Bucket, BucketKind, GroupOrigin, RolloutGroup, classify_bucket, pass_count

__all__ = [
    "PrefixOutcome",
    "PrefixRecord",
    "ControllerParams",
    "BucketControllerState",
    "initial_controller_state",
    "update_controller",
    "select_prefix",
    "replay_boundary",
    "prefix_pool_memory_bound",
    "PrefixPool",
]


class PrefixOutcome(Enum):
    SUCCESS = "success"
    FAILURE = "failure"


@dataclass(frozen=True)
class PrefixRecord:
    """A saved trajectory eligible for replay, tagged with its source bucket.

    Hard buckets save successes, easy buckets save failures; any other
    combination is a contract violation.
    """

    task_id: str
    source_bucket: Bucket
    outcome: PrefixOutcome
    steps: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.source_bucket.is_controlled:
            raise ContractError(
                f"prefixes come only from hard or easy buckets, "
                f"got {self.source_bucket.label}"
            )
        expected = (
            PrefixOutcome.SUCCESS
            if self.source_bucket.kind is BucketKind.HARD
            else PrefixOutcome.FAILURE
        )
        if self.outcome is not expected:
            raise ContractError(
                f"a {self.source_bucket.kind.value} bucket must save a "
                f"{expected.value} trajectory"
            )
        if len(self.steps) < 1:
            raise ContractError("a prefix must contain at least one step")

    @property
    def length(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class ControllerParams:
    """Feedback parameters shared by all buckets of one run."""

    alpha: float = 0.05
    deadzone: float = 0.03
    step_size: float = 0.05
    ratio_min: float = 0.05
    ratio_max: float = 0.95
    cooldown: int = 5
    initial_ratio: float = 0.5
    target: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 <= self.deadzone < 0.5:
            raise DomainError(f"deadzone must lie in [0, 0.5), got {self.deadzone}")
        if self.step_size < 0.0:
            raise DomainError(f"step size must be >= 0, got {self.step_size}")
        if not 0.0 < self.ratio_min <= self.ratio_max < 1.0:
            raise DomainError(
                f"ratio bounds must satisfy 0 < min <= max < 1, "
                f"got [{self.ratio_min}, {self.ratio_max}]"
            )
        if not self.ratio_min <= self.initial_ratio <= self.ratio_max:
            raise DomainError(
                f"initial ratio {self.initial_ratio} outside bounds "
                f"[{self.ratio_min}, {self.ratio_max}]"
            )
        if self.cooldown < 0:
            raise DomainError(f"cooldown must be >= 0, got {self.cooldown}")
        if not 0.0 < self.target < 1.0:
            raise DomainError(f"target must lie in (0, 1), got {self.target}")


@dataclass(frozen=True)
class BucketControllerState:
    """One bucket's ratio, smoothed pass rate, and cooldown bookkeeping."""

    bucket: Bucket
    ratio: float
    ema: float
    cooldown_remaining: int = 0
    updates_seen: int = 0


def initial_controller_state(
    bucket: Bucket, params: ControllerParams = ControllerParams()
) -> BucketControllerState:
    """Neutral starting state: ratio and EMA both at their initial values."""
    if not bucket.is_controlled:
        raise ContractError(f"bucket {bucket.label} is not controlled")
    return BucketControllerState(
        bucket=bucket, ratio=params.initial_ratio, ema=params.target
    )


def update_controller(
    state: BucketControllerState,
    observed_pass_rate: float,
    params: ControllerParams = ControllerParams(),
) -> BucketControllerState:
    """Fold one completed rerollout's pass rate into the bucket's state.

    The EMA always absorbs the observation. The ratio moves by one step
    only when the fresh EMA sits outside the deadzone and no cooldown is
    pending; an actual ratio change re-arms the cooldown.
    """
    if not 0.0 <= observed_pass_rate <= 1.0:
        raise DomainError(
            f"observed pass rate must lie in [0, 1], got {observed_pass_rate}"
        )
    ema = (1.0 - params.alpha) * state.ema + params.alpha * observed_pass_rate
    updates = state.updates_seen + 1
    if state.cooldown_remaining > 0:
        return replace(
            state,
            ema=ema,
            cooldown_remaining=state.cooldown_remaining - 1,
            updates_seen=updates,
        )
    direction = 0
    if ema > params.target + params.deadzone:
        direction = -1 if state.bucket.kind is BucketKind.HARD else +1
    elif ema < params.target - params.deadzone:
        direction = +1 if state.bucket.kind is BucketKind.HARD else -1
    ratio = min(
        params.ratio_max,
        max(params.ratio_min, state.ratio + direction * params.step_size),
    )
    cooldown = params.cooldown if ratio != state.ratio else 0
    return replace(
        state, ratio=ratio, ema=ema, cooldown_remaining=cooldown, updates_seen=updates
    )


def select_prefix(group: RolloutGroup, trajectories) -> PrefixRecord | None:
    """Pick the replay trajectory a fresh skewed group contributes, if any.

    Hard groups contribute their lowest-index success, easy groups their
    lowest-index failure, balanced groups nothing. Degenerate or rerollout
    groups must not be offered.
    """
    if group.origin is not GroupOrigin.FRESH:
        raise ContractError("rerollout groups never seed prefixes")
    k = pass_count(group)
    bucket = classify_bucket(k, group.group_size)
    if bucket.kind is BucketKind.DEGENERATE:
        raise ContractError("degenerate groups carry no replay material")
    if bucket.kind is BucketKind.BALANCED:
        return None
    wanted = 1 if bucket.kind is BucketKind.HARD else 0
    index = group.rewards.index(wanted)
    trajectory = trajectories[group.trajectory_refs[index]]
    outcome = PrefixOutcome.SUCCESS if wanted == 1 else PrefixOutcome.FAILURE
    return PrefixRecord(
        task_id=group.task_id,
        source_bucket=bucket,
        outcome=outcome,
        steps=tuple(trajectory.steps),
    )


def replay_boundary(ratio: float, length: int) -> int:
    """Number of replayed steps M = floor(ratio * length).

    For lengths of at least 2 the result is clamped to [1, length - 1] so
    every replay keeps at least one replayed and one fresh step. A length-1
    trajectory admits no valid boundary and returns the bare floor.
    """
    if length < 1:
        raise DomainError(f"trajectory length must be >= 1, got {length}")
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"replay ratio must lie in [0, 1], got {ratio}")
    m = math.floor(ratio * length)
    if length >= 2:
        m = min(length - 1, max(1, m))
    return m


def prefix_pool_memory_bound(
    batch_size: int, max_prompt: int, max_response: int
) -> float:
    """Worst-case bytes to hold one batch of text prefixes.

    Each saved prefix stores at most the prompt plus the longest possible
    replayed share (ratio bound 0.95) of the response, at 4 bytes per
    token: batch_size * (max_prompt + 0.95 * max_response) * 4.
    """
    for name, value in (
        ("batch_size", batch_size),
        ("max_prompt", max_prompt),
        ("max_response", max_response),
    ):
        if value < 0:
            raise DomainError(f"{name} must be >= 0, got {value}")
    return batch_size * (max_prompt + 0.95 * max_response) * 4.0


class PrefixPool:
    """Pending replay material, at most one record per (task, bucket).

    Saving again for the same key replaces the old record (newest wins);
    draining hands out every record in insertion order and empties the
    pool, so each record is consumed exactly once.
    """

    def __init__(self) -> None:
        self._records: dict[tuple[str, Bucket], PrefixRecord] = {}

    def save(self, record: PrefixRecord) -> None:
        self._records[(record.task_id, record.source_bucket)] = record

    def drain(self) -> list[PrefixRecord]:
        records = list(self._records.values())
        self._records.clear()
        return records

    def __len__(self) -> int:
        return len(self._records)
