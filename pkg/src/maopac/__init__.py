"""Decentralized off-policy actor-critic with social-learning state estimation."""
from ._backend import BACKEND
from .actor_critic import AgentState, BehaviorPolicy, HyperParams, critic_combine, etd_update, log_policy_gradient
from .bounds import constants, theorem2_bounds, trajectory_bounds
from .config import RunConfig, default_config, load_config
from .environment import GridConfig, GridWorld, RangeSensors
from .errors import (
    AssumptionViolation,
    BeliefError,
    ConfigurationError,
    DivergenceError,
    MaopacError,
    PairingError,
    TopologyError,
)
from .harness import paired_gap_metrics, run_experiment
from .ratio_consensus import estimate_joint_ratios, recover_ratio
from .simulation import RunTrace, run_maopac_decpomdp, run_maopac_oracle
from .social_learning import estimate_belief
from .topology import Graph, build_metropolis_matrix, validate_combination_matrix
from .zopo import run_zopo, zopo_gradient_estimate

__version__ = "0.1.0"
