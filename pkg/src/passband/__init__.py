"""Pass-rate control and prefix replay for grouped binary-reward rollouts.

The package models the training-signal side of verifier-reward rollout
collection: groups of N binary-reward rollouts, their signal quantities,
bucket routing of skewed groups, bidirectional prefix replay with loss
masking, and a per-bucket feedback controller that steers rerollout pass
rates toward one half, all closed over a synthetic environment.
"""

from .advantages import (
    TokenTrajectory,
    ToyPolicy,
    apply_prefix_mask,
    loss_gradient,
    masked_grpo_loss,
    mean_centered_advantages,
    rloo_advantages,
)
from .config import (
    Arm,
    ExperimentConfig,
    LossOptions,
    OptimizerFlags,
    default_config,
    load_config,
    parse_config,
)
from .controller import (
    BucketControllerState,
    ControllerParams,
    PrefixOutcome,
    PrefixPool,
    PrefixRecord,
    initial_controller_state,
    prefix_pool_memory_bound,
    replay_boundary,
    select_prefix,
    update_controller,
)
from .env import (
    GroupSample,
    PopulationSpec,
    SyntheticTask,
    Trajectory,
    conditioned_pass_probability,
    make_task_population,
    sample_fresh_group,
    sample_rerollout_group,
)
from .errors import ConfigError, ContractError, DomainError, PassbandError
from .groups import (
    Bucket,
    BucketKind,
    GroupOrigin,
    RolloutGroup,
    classify_bucket,
    controlled_buckets,
    filter_groups,
    pass_count,
    pass_count_distance,
)
from .harness import (
    RunResult,
    StepMetrics,
    TransitionMatrix,
    compare_arms,
    compute_step_metrics,
    compute_transition_matrix,
    emit_traces,
    run_experiment,
)
from .signals import (
    SignalReport,
    contrastive_pair_count,
    expected_pair_count,
    group_survival_probability,
    mean_centered_advantage_variance,
    reward_entropy,
    rloo_advantage_energy,
    signal_report,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "PassbandError",
    "DomainError",
    "ContractError",
    "ConfigError",
    # signals
    "SignalReport",
    "reward_entropy",
    "group_survival_probability",
    "rloo_advantage_energy",
    "contrastive_pair_count",
    "expected_pair_count",
    "mean_centered_advantage_variance",
    "signal_report",
    # groups
    "Bucket",
    "BucketKind",
    "GroupOrigin",
    "RolloutGroup",
    "classify_bucket",
    "controlled_buckets",
    "filter_groups",
    "pass_count",
    "pass_count_distance",
    # advantages and masking
    "TokenTrajectory",
    "ToyPolicy",
    "apply_prefix_mask",
    "rloo_advantages",
    "mean_centered_advantages",
    "masked_grpo_loss",
    "loss_gradient",
    # controller
    "PrefixOutcome",
    "PrefixRecord",
    "ControllerParams",
    "BucketControllerState",
    "PrefixPool",
    "initial_controller_state",
    "update_controller",
    "select_prefix",
    "replay_boundary",
    "prefix_pool_memory_bound",
    # environment
    "SyntheticTask",
    "Trajectory",
    "GroupSample",
    "PopulationSpec",
    "sample_fresh_group",
    "sample_rerollout_group",
    "conditioned_pass_probability",
    "make_task_population",
    # configuration
    "Arm",
    "ExperimentConfig",
    "LossOptions",
    "OptimizerFlags",
    "default_config",
    "parse_config",
    "load_config",
    # harness
    "RunResult",
    "StepMetrics",
    "TransitionMatrix",
    "run_experiment",
    "compute_step_metrics",
    "compute_transition_matrix",
    "emit_traces",
    "compare_arms",
]
