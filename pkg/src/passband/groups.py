"""Rollout groups, pass-count bucketing, and group filtering.

A rollout group is one task's N binary-reward rollouts. Groups are routed
by pass count k into buckets:

* degenerate  k in {0, N}        discarded, no within-group contrast
* hard        k in {1 .. ceil(N/4)}
* easy        k in {N - ceil(N/4) .. N-1}
* balanced    everything between

For N = 8 this gives the partition {0,8} / {1,2} / {3,4,5} / {6,7}. Hard
and easy buckets are the controlled ones: they seed prefix replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .errors import ContractError, DomainError

__all__ = [
    "BucketKind",
    "Bucket",
    "GroupOrigin",
    "RolloutGroup",
    "classify_bucket",
    "controlled_buckets",
    "pass_count",
    "filter_groups",
    "pass_count_distance",
    "group_to_record",
]


class BucketKind(Enum):
    DEGENERATE = "degenerate"
    HARD = "hard"
    BALANCED = "balanced"
    EASY = "easy"


@dataclass(frozen=True)
class Bucket:
    """One routing class of the pass-count partition for a given group size.

    Degenerate, hard, and easy variants carry the single pass count they
    cover; the balanced variant covers a range and carries none.
    """

    kind: BucketKind
    group_size: int
    pass_count: int | None = None

    def __post_init__(self) -> None:
        if (self.pass_count is None) != (self.kind is BucketKind.BALANCED):
            raise ContractError(
                "pass_count is required for degenerate/hard/easy buckets "
                "and forbidden for balanced"
            )

    @property
    def label(self) -> str:
        if self.pass_count is None:
            return "balanced"
        return f"{self.pass_count}/{self.group_size}"

    @property
    def is_controlled(self) -> bool:
        return self.kind in (BucketKind.HARD, BucketKind.EASY)


class GroupOrigin(Enum):
    FRESH = "fresh"
    REROLLOUT = "rerollout"


@dataclass(frozen=True)
class RolloutGroup:
    """One task's N binary-reward rollouts plus origin metadata.

    trajectory_refs are opaque handles into whatever produced the group;
    the group itself never embeds trajectories.
    """

    task_id: str
    rewards: tuple[int, ...]
    origin: GroupOrigin = GroupOrigin.FRESH
    parent_bucket: Bucket | None = None
    trajectory_refs: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        if len(self.rewards) == 0:
            raise ContractError("a rollout group must contain at least one rollout")
        if any(r not in (0, 1) for r in self.rewards):
            raise ContractError(f"rewards must be binary, got {self.rewards!r}")
        if (self.parent_bucket is not None) != (self.origin is GroupOrigin.REROLLOUT):
            raise ContractError(
                "parent_bucket must be set exactly when origin is rerollout"
            )
        if self.trajectory_refs == ():
            object.__setattr__(
                self, "trajectory_refs", tuple(range(len(self.rewards)))
            )
        elif len(self.trajectory_refs) != len(self.rewards):
            raise ContractError("trajectory_refs must align with rewards")

    @property
    def group_size(self) -> int:
        return len(self.rewards)


def pass_count(group: RolloutGroup) -> int:
    """Number of successful rollouts in the group."""
    return sum(group.rewards)


def _hard_upper(n: int) -> int:
    # Lowest quartile excluding 0; reproduces hard = {1, 2} at N = 8.
    return math.ceil(n / 4)


def classify_bucket(k: int, n: int) -> Bucket:
    """Map a pass count to its bucket for an even group size n >= 4."""
    if n < 4 or n % 2 != 0:
        raise DomainError(f"bucketing requires even group size N >= 4, got {n}")
    if not 0 <= k <= n:
        raise DomainError(f"pass count k must lie in [0, {n}], got {k}")
    hard_hi = _hard_upper(n)
    if k == 0 or k == n:
        return Bucket(BucketKind.DEGENERATE, n, k)
    if k <= hard_hi:
        return Bucket(BucketKind.HARD, n, k)
    if k >= n - hard_hi:
        return Bucket(BucketKind.EASY, n, k)
    return Bucket(BucketKind.BALANCED, n)


def controlled_buckets(n: int) -> tuple[Bucket, ...]:
    """The hard and easy buckets of group size n, in ascending pass count."""
    hard_hi = _hard_upper(n)
    if n < 4 or n % 2 != 0:
        raise DomainError(f"bucketing requires even group size N >= 4, got {n}")
    hard = [Bucket(BucketKind.HARD, n, k) for k in range(1, hard_hi + 1)]
    easy = [Bucket(BucketKind.EASY, n, k) for k in range(n - hard_hi, n)]
    return tuple(hard + easy)


def filter_groups(
    batch: list[RolloutGroup],
) -> tuple[list[RolloutGroup], list[RolloutGroup]]:
    """Partition a batch into (valid, discarded) by the degeneracy rule.

    Valid groups have 0 < k < N; relative order is preserved on both
    sides. Every group in the batch must share one group size.
    """
    sizes = {g.group_size for g in batch}
    if len(sizes) > 1:
        raise ContractError(f"mixed group sizes in one batch: {sorted(sizes)}")
    valid: list[RolloutGroup] = []
    discarded: list[RolloutGroup] = []
    for group in batch:
        k = pass_count(group)
        if 0 < k < group.group_size:
            valid.append(group)
        else:
            discarded.append(group)
    return valid, discarded


def pass_count_distance(k: int, n: int) -> float:
    """Distance |k - N/2| from the balanced center."""
    return abs(k - n / 2)


def group_to_record(group: RolloutGroup, step: int) -> dict:
    """One JSON-serializable audit record for a group observed at a step."""
    return {
        "task_id": group.task_id,
        "rewards": list(group.rewards),
        "origin": group.origin.value,
        "parent_bucket": None if group.parent_bucket is None else group.parent_bucket.label,
        "step": step,
    }
