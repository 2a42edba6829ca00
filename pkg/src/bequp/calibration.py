"""Empirical calibration of the two learner constants.

The learners take two constants whose theory leaves only the functional form:

* ``C`` scales the link-level confidence radius sqrt(C ln(2 L t^3 / delta) / N)
  and the eliminators' radii.  It is calibrated so the deviation of the
  N-sample average of bench estimates is dominated by sqrt(C ln(1/delta) / N)
  across a grid of link parameters, sample counts, and confidence levels, at
  the adaptive learners' bench settings (T0 = 10, bounces 1..10).  The grid
  covers the resolvable regime p in [0.85, 0.99]: below roughly p = 0.85 a
  ten-shot decay curve fails to clear the fit floor with non-vanishing
  probability, the estimate saturates at the clip floor, and no finite
  envelope constant exists.  Estimates of such weak targets are pessimistic
  (clipped down), which keeps comparisons against them conservative; the
  radius guarantee itself is only claimed on resolvable links (see README,
  "Calibration").

* ``C0`` scales the path-level regression sample budgets.  Two procedures
  pin it from opposite ends.  ``calibrate_regression_constant`` finds the
  smallest value whose prescribed budget meets the coverage target (all path
  projections of the log-parameter error within eps) at eps = 0.25,
  delta = 0.1 on the three-segment reference instance under the accurate
  bench settings (T0 = 200); small budgets fail primarily by leaving links
  unsampled, so this captures the design-coverage floor (~5e-4).  The
  shipped default instead comes from ``calibrate_operating_constant``: on
  ten-shot feedback the weak paths' log estimates are an order of magnitude
  noisier than anything the accurate-setting calibration sees, and the
  first pruning stages need budgets that survive it.  The procedure scans
  an upward grid and returns the smallest value whose full-algorithm
  failure rate on the reference instance stays within half the confidence
  budget.  The operating value dominates the coverage floor, so one shipped
  constant serves both uses.

Shipped defaults below were produced by ``python -m bequp.calibration`` with
the recorded seeds and a 1.5x safety margin; rerunning prints fresh values.
"""

from __future__ import annotations

import math

import numpy as np

from .benchmark import Bench, BenchConfig
from .network import Instance, all_transformed_fidelities, build_segmented_topology
from .path_learner import lemma_sample_size, link_est, optimal_design

# Calibrated 2026-08 with the procedures in this module (seed 20260809,
# safety margin 1.5x on the measured envelopes).
DEFAULT_C = 0.015
DEFAULT_C0 = 0.003

CAL_P_GRID = (0.85, 0.9, 0.95, 0.98, 0.99)
CAL_N_GRID = (1, 2, 4, 8, 16, 32, 64)
CAL_DELTA_GRID = (0.1, 0.05, 0.02, 0.01)


def _single_link_instance(p: float) -> Instance:
    return Instance(build_segmented_topology([1]), np.array([p]))


def calibrate_radius_constant(runs: int = 6000, t0: int = 10,
                              seed: int = 20260809,
                              p_grid=CAL_P_GRID, n_grid=CAL_N_GRID,
                              delta_grid=CAL_DELTA_GRID) -> float:
    """Envelope constant for the link-estimate concentration bound.

    For each link parameter p, draws ``runs`` independent bench estimates,
    groups them into N-sample averages, and finds the smallest C such that
    the empirical (1 - delta) quantile of |average - p| is at most
    sqrt(C ln(1/delta) / N) over the whole grid.  Returns the raw envelope
    (no safety margin applied).
    """
    rng = np.random.default_rng(seed)
    cfg = BenchConfig(t0=t0)
    worst = 0.0
    for p in p_grid:
        bench = Bench(_single_link_instance(p), cfg)
        draws = np.array([bench.link(0, rng).p_hat for _ in range(runs)])
        for n in n_grid:
            groups = draws[: (runs // n) * n].reshape(-1, n)
            dev = np.abs(groups.mean(axis=1) - p)
            for delta in delta_grid:
                q = float(np.quantile(dev, 1.0 - delta))
                worst = max(worst, q * q * n / math.log(1.0 / delta))
    return worst


def reference_instance(n: int = 3) -> Instance:
    """The [2, 2, n] instance used for regression calibration (see harness)."""
    from .harness import build_experiment_instance

    return build_experiment_instance(n)


def linkest_coverage(instance: Instance, c0: float, eps: float = 0.25,
                     delta: float = 0.1, runs: int = 200, t0: int = 200,
                     seed: int = 20260809) -> float:
    """Fraction of runs with every path projection error within eps."""
    rng = np.random.default_rng(seed)
    cfg = BenchConfig(t0=t0)
    bench = Bench(instance, cfg)
    topo = instance.topology
    n = lemma_sample_size(topo.num_links, eps, delta, c0)
    design = optimal_design(topo, range(topo.num_paths))
    truth = all_transformed_fidelities(instance)
    X = topo.incidence.astype(float)
    hits = 0
    for _ in range(runs):
        est = link_est(instance, design.support, n, bench, rng, design=design)
        err = np.abs(X @ est.log_p_hat - truth)
        hits += int(err.max() <= eps)
    return hits / runs


def calibrate_regression_constant(eps: float = 0.25, delta: float = 0.1,
                                  runs: int = 200, t0: int = 200,
                                  seed: int = 20260809,
                                  target_margin: float = 0.03) -> float:
    """Smallest grid C0 whose prescribed budget meets the coverage target.

    Scans an upward geometric grid and returns the first C0 with empirical
    coverage at least (1 - delta) + ``target_margin`` (the margin absorbs
    200-run resampling noise).  No safety factor applied.
    """
    instance = reference_instance()
    c0 = 4e-5
    while c0 < 1e-2:
        cov = linkest_coverage(instance, c0, eps, delta, runs, t0, seed)
        if cov >= (1.0 - delta) + target_margin:
            return c0
        c0 *= 1.3
    raise RuntimeError("coverage target not reached on the calibration grid")


def calibrate_operating_constant(delta: float = 0.05, runs: int = 200,
                                 t0: int = 10, seed: int = 20260809) -> float:
    """Smallest grid C0 whose ten-shot failure rate stays within delta / 2.

    Runs the full path-level learner on the reference instance with the
    adaptive bench settings and scans an upward geometric grid.  No safety
    factor applied.
    """
    from .benchmark import Bench, BenchConfig
    from .path_learner import run_bequp_path

    instance = reference_instance()
    best = compute_reference_best(instance)
    c0 = 5e-4
    while c0 < 0.1:
        bench = Bench(instance, BenchConfig(t0=t0))
        fails = 0
        for i in range(runs):
            rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
            out = run_bequp_path(instance, bench, delta, c0, rng, keep_trace=False)
            fails += int(out.output_path != best)
        if fails / runs <= delta / 2.0:
            return c0
        c0 *= 2.0
    raise RuntimeError("failure-rate target not reached on the grid")


def compute_reference_best(instance: Instance) -> int:
    from .network import compute_gaps

    return compute_gaps(instance).best_path


def main() -> None:
    raw_c = calibrate_radius_constant()
    raw_c0 = calibrate_regression_constant()
    raw_op = calibrate_operating_constant()
    print(f"radius constant envelope:    {raw_c:.6g} "
          f"(shipped default {DEFAULT_C} = 1.5x margin, rounded)")
    print(f"regression coverage floor:   {raw_c0:.6g} (reference only)")
    print(f"operating constant:          {raw_op:.6g} "
          f"(shipped default {DEFAULT_C0} = 1.5x margin, rounded)")


if __name__ == "__main__":
    main()
