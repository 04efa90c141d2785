"""Numerical solver and verification harness for the 1D aggregation equation

    u_t = eps u_xx + (u K' * u)_x,    K' = -(A/2) sign(x) + V(x),

with repulsive kernels satisfying ||V_x||_1 < A.
"""

from .config import ConfigError, ExperimentConfig, parse_config
from .config import resolve as resolve_config
from .experiments import Report, run_experiment
from .grid import Field, Grid
from .kernel import (
    Family,
    HypothesisViolation,
    KernelSpec,
    interaction_velocity,
    make_kernel,
    sign_convolution,
    v_convolution,
)
from .particles import ParticleEnsemble, evolve_particles, particle_velocities, sample_particles
from .reference import rarefaction, rarefaction_derivative, viscous_rarefaction
from .solver import (
    BoundaryMassError,
    PositivityError,
    SolverConfig,
    SolverError,
    evolve,
    initial_datum,
    primitive,
    stable_dt,
    step,
)

__all__ = [
    "BoundaryMassError",
    "ConfigError",
    "ExperimentConfig",
    "Family",
    "Field",
    "Grid",
    "HypothesisViolation",
    "KernelSpec",
    "ParticleEnsemble",
    "PositivityError",
    "Report",
    "SolverConfig",
    "SolverError",
    "evolve",
    "evolve_particles",
    "initial_datum",
    "interaction_velocity",
    "make_kernel",
    "parse_config",
    "particle_velocities",
    "primitive",
    "rarefaction",
    "rarefaction_derivative",
    "resolve_config",
    "run_experiment",
    "sample_particles",
    "sign_convolution",
    "stable_dt",
    "step",
    "v_convolution",
    "viscous_rarefaction",
]
