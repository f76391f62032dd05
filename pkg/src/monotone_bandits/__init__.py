"""Continuum-armed bandits with monotone (nondecreasing) arm sequences."""
from .env import (
    InstanceSpec,
    NoiseModel,
    PiecewiseLinearFunction,
    check_lipschitz,
    check_quasiconcave,
    evaluate,
    make_lower_bound_instance,
    make_prop1_pair,
    make_random_peak_instance,
    max_value,
    sample_reward,
)
from .experiments import (
    ExperimentConfig,
    RegretTable,
    fit_scaling_exponent,
    monte_carlo,
    read_csv,
    theorem1_ceiling,
    write_csv,
)
from .harness import MonotonicityViolation, RunRecord, Trajectory, assert_monotone, regret, run_episode
from .kernels import BACKEND
from .policies import (
    ConstantPolicy,
    EscalationPolicy,
    Policy,
    UcbPolicy,
    confidence_bounds,
    escalation_params,
    make_policy,
    ucb_grid_size,
)

__version__ = "0.1.0"
