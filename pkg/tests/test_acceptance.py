"""End-to-end acceptance suite.

One test per exit criterion, each printing a PASS/FAIL line (run pytest with
``-s`` or read captured output).  Tolerances are fixed here, not tuned at run
time.  The cost-ordering check is known to fail in part on this artifact's
honest calibration; see README, "Known limitations", before touching it.
"""

import math

import numpy as np
import pytest
from scipy import stats

from bequp.baselines import BaselineConfig, halving_eliminator, succ_elim, uniform_link, uniform_path
from bequp.benchmark import Bench, BenchConfig, ExactBench, pooled_ptm_estimate
from bequp.calibration import DEFAULT_C, DEFAULT_C0
from bequp.channels import NOISE_KINDS, effective_depolarizing, ptm_of, strength_from_fidelity
from bequp.harness import ExperimentConfig, build_experiment_instance, run_matrix
from bequp.link_learner import RadiusConfig, run_bequp_link
from bequp.network import Instance, all_transformed_fidelities, build_segmented_topology, compute_gaps
from bequp.path_learner import lemma_sample_size, link_est, optimal_design, run_bequp_path
from bequp.qkd import skf_metric_adapters

from conftest import random_instance

DELTA = 0.05
TRIALS = 100
# one-sided exact binomial check at 5% significance against a 0.95 rate
PASS_THRESHOLD = int(stats.binom.ppf(0.05, TRIALS, 0.95))


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def _confidence_cells(algo: str) -> dict:
    cfg = ExperimentConfig(algos=(algo,), metric="fidelity",
                           noise_models=NOISE_KINDS, n_values=(2, 3),
                           trials=TRIALS, delta=DELTA, seed=2026,
                           mode="surrogate")
    records = run_matrix(cfg)
    cells: dict = {}
    for rec in records:
        cells.setdefault((rec.noise_model, rec.n), []).append(rec.success)
    return {key: sum(flags) for key, flags in cells.items()}


@pytest.mark.parametrize("algo", ["bequp-link", "bequp-path"])
def test_correctness_at_confidence(algo):
    """>= 95% identification per noise model and size at delta = 0.05."""
    successes = _confidence_cells(algo)
    assert len(successes) == 8
    worst = min(successes.values())
    detail = ", ".join(f"{noise}/n={n}: {s}/{TRIALS}"
                       for (noise, n), s in sorted(successes.items()))
    ok = worst >= PASS_THRESHOLD
    _report(f"confidence[{algo}]", ok, detail)
    assert ok, f"cells below the {PASS_THRESHOLD}/{TRIALS} binomial bar: {detail}"


def test_oracle_suite():
    """Every algorithm identifies the best path under noiseless feedback."""
    rng = np.random.default_rng(424242)
    rad_cfg = RadiusConfig(c=DEFAULT_C, delta=DELTA)
    base_cfg = BaselineConfig(samples_per_arm=20, delta=DELTA, c=DEFAULT_C)
    skf = skf_metric_adapters()
    failures = []
    for idx in range(50):
        inst = random_instance(rng)
        best = compute_gaps(inst).best_path
        bench = ExactBench(inst)

        def check(label, result):
            if result.output_path != best:
                failures.append((idx, label, result.output_path, best))

        seed = np.random.default_rng((555, idx))
        check("bequp-link", run_bequp_link(inst, bench, rad_cfg, seed,
                                           keep_trace=False))
        check("bequp-link/skf", run_bequp_link(inst, bench, rad_cfg, seed,
                                               adapters=skf, keep_trace=False))
        check("bequp-path", run_bequp_path(inst, bench, DELTA, DEFAULT_C0, seed,
                                           keep_trace=False))
        check("bequp-path/skf", run_bequp_path(inst, bench, DELTA, DEFAULT_C0,
                                               seed, adapters=skf,
                                               keep_trace=False))
        check("uniform-link", uniform_link(inst, bench, base_cfg, seed,
                                           keep_trace=False))
        check("uniform-link/skf", uniform_link(inst, bench, base_cfg, seed,
                                               adapters=skf, keep_trace=False))
        check("uniform-path", uniform_path(inst, bench, base_cfg, seed,
                                           keep_trace=False))
        check("succ-elim", succ_elim(inst, bench, base_cfg, seed,
                                     keep_trace=False))
        check("linkselfie", halving_eliminator(inst, bench, base_cfg, seed,
                                               keep_trace=False))
    ok = not failures
    _report("oracle-suite", ok, f"450 runs, {len(failures)} failures")
    assert ok, failures


def test_benchmarking_rate():
    """RMS error of N-sample averages decays at the square-root rate."""
    p = 0.95
    inst = Instance(build_segmented_topology([1]), np.array([p]))
    bench = Bench(inst, BenchConfig(t0=10))
    rng = np.random.default_rng(77)
    reps = 300
    ns = [1, 4, 16, 64, 256]
    rms = []
    for n in ns:
        draws, _, _ = bench.path_batch(np.zeros(reps * n, dtype=int), rng)
        groups = draws.reshape(reps, n).mean(axis=1)
        rms.append(float(np.sqrt(np.mean((groups - p) ** 2))))
    slope = float(np.polyfit(np.log(ns), np.log(rms), 1)[0])
    ok = abs(slope + 0.5) <= 0.1
    _report("benchmarking-rate", ok,
            f"slope {slope:.3f}, rms {['%.4f' % r for r in rms]}")
    assert ok, f"log-log slope {slope:.3f} outside -0.5 +/- 0.1"


def test_linkest_guarantee():
    """Regression coverage at eps = 0.25, delta = 0.1 with the shipped budget."""
    eps, delta_cov, runs = 0.25, 0.1, 200
    inst = build_experiment_instance(3)
    topo = inst.topology
    n = lemma_sample_size(topo.num_links, eps, delta_cov, DEFAULT_C0)
    bench = Bench(inst, BenchConfig(t0=200))
    design = optimal_design(topo, range(topo.num_paths))
    truth = all_transformed_fidelities(inst)
    X = topo.incidence.astype(float)
    rng = np.random.default_rng(88)
    hits = 0
    for _ in range(runs):
        est = link_est(inst, design.support, n, bench, rng, design=design)
        hits += int(np.max(np.abs(X @ est.log_p_hat - truth)) <= eps)
    ok = hits >= math.ceil((1 - delta_cov) * runs)
    _report("linkest-guarantee", ok, f"coverage {hits}/{runs} at N={n}")
    assert ok, f"coverage {hits}/{runs} below {1 - delta_cov:.0%} at N={n}"


def test_werner_log_contraction():
    """The per-link transform at most doubles log-scale errors: 1e5 triples."""
    rng = np.random.default_rng(99)
    size = 100_000
    a = rng.uniform(1e-4, 0.9999, size=size)
    eps = rng.uniform(1e-5, 2.0, size=size)
    b = np.clip(a * np.exp(rng.uniform(-1, 1, size=size) * eps), 1e-12, 1 - 1e-12)
    premise = np.abs(np.log(a) - np.log(b)) <= eps + 1e-12
    bound = np.abs(np.log((2 * a + 1) / 3) - np.log((2 * b + 1) / 3)) <= 2 * eps + 1e-12
    violations = int(np.sum(premise & ~bound))
    ok = violations == 0
    _report("werner-log-contraction", ok,
            f"{int(premise.sum())} valid triples, {violations} violations")
    assert ok


def _mean_cost(runner, n, trials=10):
    inst = build_experiment_instance(n)
    costs = []
    for trial in range(trials):
        rng = np.random.default_rng((31337, n, trial))
        costs.append(runner(inst, rng).cost)
    return float(np.mean(costs))


def test_cost_trend_reproduction():
    """Adaptive-vs-baseline cost ordering and growth shapes on n = 2..5.

    The second link of the ordering chain (path-level learner cheaper than
    the per-path eliminators) does not hold on this artifact's honest shared
    calibration at these sizes; see README, "Known limitations", for the
    quantified analysis.  The assertion is kept faithful to the stated
    criterion rather than weakened around the implementation.
    """
    bench_cfg = BenchConfig(t0=10)
    base = BaselineConfig(samples_per_arm=20, delta=DELTA, c=DEFAULT_C)
    rad = RadiusConfig(c=DEFAULT_C, delta=DELTA)

    runners = {
        "bequp-link": lambda inst, rng: run_bequp_link(
            inst, Bench(inst, bench_cfg), rad, rng, keep_trace=False),
        "bequp-path": lambda inst, rng: run_bequp_path(
            inst, Bench(inst, bench_cfg), DELTA, DEFAULT_C0, rng, keep_trace=False),
        "succ-elim": lambda inst, rng: succ_elim(
            inst, Bench(inst, bench_cfg), base, rng, keep_trace=False),
        "linkselfie": lambda inst, rng: halving_eliminator(
            inst, Bench(inst, bench_cfg), base, rng, keep_trace=False),
        "uniform-path": lambda inst, rng: uniform_path(
            inst, Bench(inst, BenchConfig(t0=200)), base, rng, keep_trace=False),
    }
    ns = [2, 3, 4, 5]
    means = {name: [_mean_cost(fn, n) for n in ns] for name, fn in runners.items()}
    ks = np.array([4 * n for n in ns], dtype=float)

    problems = []
    for i, n in enumerate(ns):
        if not means["bequp-link"][i] < means["bequp-path"][i]:
            problems.append(f"n={n}: link {means['bequp-link'][i]:.0f} "
                            f">= path {means['bequp-path'][i]:.0f}")
        elim = min(means["succ-elim"][i], means["linkselfie"][i])
        if not means["bequp-path"][i] < elim:
            problems.append(f"n={n}: path {means['bequp-path'][i]:.0f} "
                            f">= eliminators {elim:.0f}")

    up = np.array(means["uniform-path"])
    fit = np.polyfit(ks, up, 1)
    resid = up - np.polyval(fit, ks)
    r2 = 1 - resid.var() / up.var()
    if r2 < 0.99:
        problems.append(f"uniform-path linearity R^2 = {r2:.4f}")

    slope_path = np.polyfit(ks, means["bequp-path"], 1)[0]
    slope_link = np.polyfit(ks, means["bequp-link"], 1)[0]
    if not slope_path > slope_link:
        problems.append(f"slope path {slope_path:.1f} <= slope link {slope_link:.1f}")

    detail = "; ".join(
        f"{name}: {['%.0f' % v for v in vals]}" for name, vals in means.items())
    ok = not problems
    _report("cost-trend", ok, detail + (f" | problems: {problems}" if problems else ""))
    assert ok, problems


def test_twirl_fidelity_physics():
    """Analytic twirl identities plus Monte-Carlo recovery at T0 = 200."""
    analytic_worst = 0.0
    mc_failures = []
    cfg = BenchConfig(t0=200, mode="ptm")
    for kind in NOISE_KINDS:
        for f in (0.90, 0.95, 0.99):
            p = 2 * f - 1
            channel = ptm_of(strength_from_fidelity(kind, f))
            analytic_worst = max(analytic_worst,
                                 abs(effective_depolarizing(channel) - p))
            rng = np.random.default_rng((kind == "bit_flip", int(100 * f),
                                         NOISE_KINDS.index(kind)))
            draws = [pooled_ptm_estimate(channel, cfg, calls=25, rng=rng)
                     for _ in range(6)]
            mean = float(np.mean(draws))
            se = float(np.std(draws, ddof=1) / math.sqrt(len(draws)))
            if abs(mean - p) > 3 * se:
                mc_failures.append((kind, f, mean, p, se))
    ok = analytic_worst <= 1e-9 and not mc_failures
    _report("twirl-physics", ok,
            f"worst analytic {analytic_worst:.2e}, mc failures {mc_failures}")
    assert analytic_worst <= 1e-9
    assert not mc_failures, mc_failures


def test_accounting_invariants():
    """Q = rounds under link feedback, Q = summed path lengths otherwise."""
    cfg = ExperimentConfig(
        algos=("bequp-link", "bequp-path", "uniform-link", "uniform-path",
               "succ-elim", "linkselfie"),
        noise_models=("depolarizing",), n_values=(2, 3), trials=2,
        seed=7, keep_trace=True)
    records = run_matrix(cfg)
    bad = []
    for rec in records:
        audited = sum(e["cost_units"] for e in rec.trace)
        if audited != rec.resource_cost:
            bad.append((rec.algo, rec.n, rec.trial, audited, rec.resource_cost))
        if rec.algo in ("bequp-link", "uniform-link"):
            if rec.resource_cost != rec.rounds:
                bad.append((rec.algo, rec.n, rec.trial, "Q != T"))
        else:
            inst = build_experiment_instance(rec.n)
            lengths = inst.topology.path_lengths
            if rec.algo == "uniform-path":
                expected = 20 * int(lengths.sum())
                if rec.resource_cost != expected:
                    bad.append((rec.algo, rec.n, rec.trial, "uniform-path cost"))
            # every path on this family has three hops
            if rec.resource_cost != 3 * rec.rounds:
                bad.append((rec.algo, rec.n, rec.trial, "Q != sum of lengths"))
    ok = not bad
    _report("accounting", ok, f"{len(records)} traced records, issues: {bad}")
    assert ok, bad
