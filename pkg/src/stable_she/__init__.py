"""Monte Carlo laboratory for the heat equation driven by spectrally positive stable noise and its approximating dual."""
from .config import ConfigError, ExperimentConfig, parse_config
from .dual_pde import PdeSegment, pde_step, reaction_substep, solve_segment
from .dual_process import (
    DualTrajectory,
    dual_exp_pairing_estimator,
    sample_jump_height,
    sample_jump_location,
    sample_waiting_time,
    simulate_dual_path,
)
from .heat import SemigroupPlan, apply_semigroup, heat_kernel
from .model import Field, GaussianBump, GridSpec, ModelParams, RngStream, integrate, lp_norm_pow, pairing
from .noise import (
    JumpEvent,
    LevyMeasure,
    laplace_functional_target,
    m0_first_moment_tail,
    m0_tail_mass,
    sample_noise_increment,
    sample_pareto_jump_size,
)
from .she import PathSample, exp_pairing_estimator, simulate_y_path, simulate_y_step
from .summary import MCSummary

__all__ = [
    "ConfigError",
    "DualTrajectory",
    "ExperimentConfig",
    "Field",
    "GaussianBump",
    "GridSpec",
    "JumpEvent",
    "LevyMeasure",
    "MCSummary",
    "ModelParams",
    "PathSample",
    "PdeSegment",
    "RngStream",
    "SemigroupPlan",
    "apply_semigroup",
    "dual_exp_pairing_estimator",
    "exp_pairing_estimator",
    "heat_kernel",
    "integrate",
    "laplace_functional_target",
    "lp_norm_pow",
    "m0_first_moment_tail",
    "m0_tail_mass",
    "pairing",
    "parse_config",
    "pde_step",
    "reaction_substep",
    "sample_jump_height",
    "sample_jump_location",
    "sample_noise_increment",
    "sample_pareto_jump_size",
    "sample_waiting_time",
    "simulate_dual_path",
    "simulate_y_path",
    "simulate_y_step",
    "solve_segment",
]

__version__ = "0.1.0"
