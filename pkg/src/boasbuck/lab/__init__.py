"""Experiment runner: convergence sweeps, bound checks and CSV output."""

from .catalog import CATALOG, get_function
from .experiments import (
    ExperimentResult,
    ExperimentSpec,
    emit_csv,
    load_specs,
    read_csv,
    run,
    run_bv_decay,
    run_dt_bound,
    run_lipschitz_bound,
    run_modulus_bound,
    run_suite,
    run_uniform_convergence,
    run_weighted_convergence,
)
