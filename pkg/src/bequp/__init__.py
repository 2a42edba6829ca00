"""Best-path identification in simulated noisy quantum networks.

The package provides the network/channel model, bounce-sequence benchmarking,
two fixed-confidence identification algorithms (adaptive link-level probing
and regression-based path-level halving), secret-key-fraction metric
adapters, four baselines, and a seeded experiment harness with CSV output.
"""

from .baselines import BaselineConfig, halving_eliminator, succ_elim, uniform_link, uniform_path
from .benchmark import Bench, BenchConfig, BenchResult, ExactBench, fit_exponential
from .calibration import DEFAULT_C, DEFAULT_C0
from .channels import (
    NoiseModel,
    clifford_table,
    compose,
    effective_depolarizing,
    ptm_of,
    strength_from_fidelity,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    build_experiment_instance,
    emit_csv,
    run_matrix,
    summarize,
)
from .link_learner import LinkRunResult, RadiusConfig, radius, run_bequp_link
from .metrics import MetricAdapters, fidelity_adapters
from .network import (
    DegenerateInstanceError,
    GapReport,
    Instance,
    Topology,
    best_path_oracle,
    build_segmented_topology,
    compute_gaps,
    fidelity_from_p,
    path_depolarizing,
    transformed_fidelity,
)
from .path_learner import link_est, optimal_design, prune, run_bequp_path, schedule_params
from .qkd import skf, skf_metric_adapters, transformed_skf, werner_from_p

__version__ = "0.1.0"
