"""Regret minimisation in stochastic shortest path via finite-horizon reduction."""
from .envs import LowerBoundSpec, chain_ssp, lower_bound_instance, random_ssp
from .finite_horizon import (FiniteHorizonMdp, Trajectory, build_finite_horizon, fh_brute_force_optimal,
                             fh_optimal_values, fh_policy_values)
from .harness import ExperimentConfig, compute_regret, emit_plot_data, run_experiment
from .mdp import CostModel, InvalidMdpError, SspMdp, sample_cost, sample_transition, validate_mdp
from .planning import Diverged, InstanceParameters, instance_parameters, policy_values, ssp_optimal_values
from .reduction import (IncompleteRun, ReductionConfig, RunLog, compute_horizon, interval_diagnostics,
                        run_ssp_reduction, ulcvi_factory, uniform_random_factory)
from .rng import RngStream
from .ulcvi import UlcviLearner, UlcviParams, admissibility_profile, init_learner, opvi

__version__ = "0.1.0"
