"""Experiment orchestration: instance family, trial matrix, CSV emission.

The benchmark family is a four-node chain with parallel links: two links on
each of the first two hops and n parallel links on the last hop, so
L = n + 4 links and K = 4n paths.  Fidelity assignment fixes one 0.99 link
per hop, a 0.90 alternative on the first two hops, and a decreasing schedule
0.95, 0.85, ... on the remaining last-hop links, which makes the all-0.99
path the unique best.

Trials are keyed by (algorithm, metric, noise model, n, trial index); the
per-trial RNG stream is derived by seeding a SeedSequence with the tuple
(master_seed, algo_index, metric_index, noise_index, n, trial), so any cell
can be reproduced in isolation and results are independent of worker
scheduling.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import BaselineConfig, halving_eliminator, succ_elim, uniform_link, uniform_path
from .benchmark import Bench, BenchConfig, ExactBench
from .calibration import DEFAULT_C, DEFAULT_C0
from .channels import NOISE_KINDS
from .link_learner import RadiusConfig, run_bequp_link
from .metrics import fidelity_adapters
from .network import Instance, build_segmented_topology, compute_gaps
from .path_learner import run_bequp_path
from .qkd import skf_metric_adapters

ALGORITHMS = ("bequp-link", "bequp-path", "uniform-link", "uniform-path",
              "succ-elim", "linkselfie")
#: algorithms that never form per-link estimates and so cannot rank by SKF
PATH_ONLY_ALGORITHMS = ("uniform-path", "succ-elim", "linkselfie")
METRICS = ("fidelity", "skf")

ADAPTIVE_T0 = 10
UNIFORM_T0 = 200
_FIDELITY_FLOOR = 0.55
_P_FLOOR = 0.05

CSV_HEADER = ("algo,metric,noise_model,n,K,L,trial,seed,output_path,"
              "true_best,success,resource_cost,rounds,wall_time_ms")


def experiment_fidelities(n: int) -> list[float]:
    """Per-link fidelity schedule for the [2, 2, n] instance."""
    if n < 2:
        raise ValueError("need at least two last-hop links")
    last_hop = [0.99] + [round(0.95 - 0.1 * j, 2) for j in range(n - 1)]
    return [0.99, 0.90, 0.99, 0.90] + last_hop


def build_experiment_instance(n: int, allow_low_fidelity: bool = False) -> Instance:
    """[2, 2, n] instance with the benchmark fidelity assignment.

    Fidelities below 0.55 are rejected by default: they map to depolarizing
    parameters below 0.1, where the simulated channels stop being useful.
    With ``allow_low_fidelity`` the schedule is kept but each link parameter
    is floored at 0.05, the lowest value every built-in noise family can
    realize.
    """
    fids = experiment_fidelities(n)
    if min(fids) < _FIDELITY_FLOOR and not allow_low_fidelity:
        raise ValueError(
            f"n={n} drives a link fidelity to {min(fids):.2f} < {_FIDELITY_FLOOR}; "
            "pass allow_low_fidelity to proceed with floored parameters"
        )
    p = np.maximum(2.0 * np.array(fids) - 1.0, _P_FLOOR)
    instance = Instance(build_segmented_topology([2, 2, n]), p,
                        label=f"segmented-2-2-{n}")
    compute_gaps(instance)  # asserts a unique best path
    return instance


@dataclass(frozen=True)
class ExperimentConfig:
    algos: tuple = ("bequp-link", "bequp-path")
    metric: str = "fidelity"
    noise_models: tuple = NOISE_KINDS
    n_values: tuple = (2, 3, 4, 5, 6, 7)
    trials: int = 10
    delta: float = 0.05
    seed: int = 0
    mode: str = "surrogate"
    t0_adaptive: int = ADAPTIVE_T0
    t0_uniform: int = UNIFORM_T0
    bounces: tuple = tuple(range(1, 11))
    samples_per_arm: int = 20
    c: float = DEFAULT_C
    c0: float = DEFAULT_C0
    allow_low_fidelity: bool = False
    keep_trace: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if any(n < 2 for n in self.n_values):
            raise ValueError("instance sizes must be >= 2")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        for a in self.algos:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
            if self.metric == "skf" and a in PATH_ONLY_ALGORITHMS:
                raise ValueError(f"{a} has no link estimates and cannot rank by skf")
        for nm in self.noise_models:
            if nm not in NOISE_KINDS:
                raise ValueError(f"unknown noise model {nm!r}")


@dataclass
class ExperimentRecord:
    algo: str
    metric: str
    noise_model: str
    n: int
    K: int
    L: int
    trial: int
    seed: int
    output_path: int
    true_best: int
    success: int
    resource_cost: int
    rounds: int
    wall_time_ms: int
    trace: list | None = None

    def csv_row(self) -> str:
        return (f"{self.algo},{self.metric},{self.noise_model},{self.n},"
                f"{self.K},{self.L},{self.trial},{self.seed},{self.output_path},"
                f"{self.true_best},{self.success},{self.resource_cost},"
                f"{self.rounds},{self.wall_time_ms}")


def trial_seed_sequence(cfg: ExperimentConfig, algo: str, noise: str,
                        n: int, trial: int) -> np.random.SeedSequence:
    key = (cfg.seed, ALGORITHMS.index(algo), METRICS.index(cfg.metric),
           NOISE_KINDS.index(noise), n, trial)
    return np.random.SeedSequence(key)


def run_algorithm(algo: str, instance: Instance, bench, rng,
                  cfg: ExperimentConfig):
    adapters = fidelity_adapters() if cfg.metric == "fidelity" else skf_metric_adapters()
    keep = cfg.keep_trace
    if algo == "bequp-link":
        return run_bequp_link(instance, bench,
                              RadiusConfig(c=cfg.c, delta=cfg.delta), rng,
                              adapters=adapters, keep_trace=keep)
    if algo == "bequp-path":
        return run_bequp_path(instance, bench, cfg.delta, cfg.c0, rng,
                              adapters=adapters, keep_trace=keep)
    bl = BaselineConfig(samples_per_arm=cfg.samples_per_arm, delta=cfg.delta,
                        c=cfg.c)
    if algo == "uniform-link":
        return uniform_link(instance, bench, bl, rng, adapters=adapters,
                            keep_trace=keep)
    if algo == "uniform-path":
        return uniform_path(instance, bench, bl, rng, keep_trace=keep)
    if algo == "succ-elim":
        return succ_elim(instance, bench, bl, rng, keep_trace=keep)
    if algo == "linkselfie":
        return halving_eliminator(instance, bench, bl, rng, keep_trace=keep)
    raise ValueError(f"unknown algorithm {algo!r}")


def _bench_for(algo: str, instance: Instance, noise: str,
               cfg: ExperimentConfig) -> Bench:
    t0 = cfg.t0_uniform if algo.startswith("uniform") else cfg.t0_adaptive
    bc = BenchConfig(bounces=cfg.bounces, t0=t0, mode=cfg.mode)
    kind = noise if cfg.mode == "ptm" else None
    return Bench(instance, bc, noise_kind=kind)


def run_one_trial(cfg: ExperimentConfig, algo: str, noise: str, n: int,
                  trial: int) -> ExperimentRecord:
    seq = trial_seed_sequence(cfg, algo, noise, n, trial)
    seed_id = int(seq.generate_state(1)[0])
    rng = np.random.default_rng(seq)
    start = time.perf_counter()
    true_best = -2
    # failures are recorded as unsuccessful rows, never fatal to the sweep
    try:
        instance = build_experiment_instance(n, cfg.allow_low_fidelity)
        true_best = compute_gaps(instance).best_path
        bench = _bench_for(algo, instance, noise, cfg)
        result = run_algorithm(algo, instance, bench, rng, cfg)
        output, cost, rounds = result.output_path, result.cost, result.rounds
        trace = result.trace if cfg.keep_trace else None
    except Exception:
        output, cost, rounds, trace = -1, 0, 0, None
    elapsed_ms = int(round((time.perf_counter() - start) * 1000))
    return ExperimentRecord(
        algo=algo, metric=cfg.metric, noise_model=noise, n=n,
        K=4 * n, L=n + 4,
        trial=trial, seed=seed_id,
        output_path=output, true_best=true_best,
        success=int(output == true_best),
        resource_cost=cost, rounds=rounds,
        wall_time_ms=elapsed_ms,
        trace=trace,
    )


def _worker(args) -> ExperimentRecord:
    return run_one_trial(*args)


def max_workers() -> int:
    env = os.environ.get("BEQUP_THREADS")
    if env:
        return max(1, int(env))
    return min(os.cpu_count() or 1, 8)


def run_matrix(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Run every (algo, noise, n, trial) cell; order is canonical, not temporal.

    Individual trial failures are recorded as unsuccessful rows with zero
    cost rather than aborting the sweep.
    """
    tasks = [(cfg, algo, noise, n, trial)
             for algo in cfg.algos
             for noise in cfg.noise_models
             for n in cfg.n_values
             for trial in range(cfg.trials)]
    workers = min(max_workers(), len(tasks))
    records: list[ExperimentRecord] = []
    if workers > 1 and not cfg.keep_trace:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for rec in pool.map(_worker, tasks, chunksize=4):
                records.append(rec)
    else:
        for t in tasks:
            records.append(_worker(t))
    records.sort(key=lambda r: (r.algo, r.metric, r.noise_model, r.n, r.trial))
    return records


def emit_csv(records, path) -> None:
    """Write records under the fixed header contract (UTF-8, LF endings)."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for rec in records:
                fh.write(rec.csv_row() + "\n")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def summarize(records) -> dict:
    """Per-cell mean/standard-error of cost and empirical success rate."""
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.algo, rec.metric, rec.noise_model, rec.n), []).append(rec)
    out = {}
    for key, rows in sorted(cells.items()):
        costs = np.array([r.resource_cost for r in rows], dtype=float)
        se = float(costs.std(ddof=1) / math.sqrt(len(costs))) if len(costs) > 1 else 0.0
        out[key] = {
            "trials": len(rows),
            "mean_cost": float(costs.mean()),
            "se_cost": se,
            "success_rate": float(np.mean([r.success for r in rows])),
        }
    return out
