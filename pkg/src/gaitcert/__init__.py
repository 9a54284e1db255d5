"""Train and certify gait-switching supervisors for force-guided walking.

A reduced stride-map walker follows a leader it cannot see, reading only the
interaction force.  The package trains a neural supervisor that switches
among a library of walking gaits (evolutionary strategies for the prior,
convex PAC-Bayes optimization for the certified posterior) and evaluates the
resulting performance bound against held-out environments.
"""

from .bounds import (
    BoundResult,
    CostMatrix,
    compute_cost_matrix,
    discretize_policy_space,
    estimate_true_cost,
    kl_discrete,
    optimize_posterior,
    quad_bound,
    regularizer,
)
from .environments import (
    EnvDistributionParams,
    Environment,
    ImpedanceParams,
    LeaderTrajectory,
    generate_leader_trajectory,
    impedance_force,
    leader_pose,
    noisy_force,
    sample_environment,
)
from .es import ESConfig, ESTrace, estimate_gradient, train_prior
from .gaits import (
    GaitLibrary,
    GaitPrimitive,
    RobotPose,
    StrideState,
    advance_pose,
    make_library,
    stride_map,
)
from .policy import (
    DiscretePolicySet,
    FeatureScales,
    PolicyArch,
    PolicyDistribution,
    forward,
    param_count,
    sample_weights,
    select_primitive,
)
from .simulate import (
    ObservationVector,
    RolloutResult,
    SimConfig,
    Trace,
    backend_name,
    extract_features,
    prior_cost,
    rollout,
    rollout_batch,
    tube_cost,
)

__version__ = "0.1.0"
