"""Comparison algorithms sharing the bench interface and cost accounting.

Uniform-Link and Uniform-Path spend a fixed per-arm budget and pick the
empirical best.  SuccElim runs confidence-radius successive elimination over
path arms.  The halving eliminator treats every path as an independent arm
and drops the worse half per phase with a doubling per-arm budget; it stands
in for topology-oblivious elimination schemes and intentionally ignores link
overlap between paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .benchmark import P_CLIP_HI, P_CLIP_LO
from .link_learner import LinkRunResult
from .metrics import MetricAdapters, fidelity_adapters
from .network import Instance, best_path_oracle


@dataclass(frozen=True)
class BaselineConfig:
    """Budgets for the uniform baselines and confidence for the eliminators."""

    samples_per_arm: int = 20
    delta: float = 0.05
    c: float = 0.005
    round_cap: int = 1_000_000

    def __post_init__(self):
        if self.samples_per_arm < 1:
            raise ValueError("samples_per_arm must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


def uniform_link(instance: Instance, bench, cfg: BaselineConfig,
                 rng: np.random.Generator,
                 adapters: MetricAdapters | None = None,
                 keep_trace: bool = True) -> LinkRunResult:
    """Equal per-link budget, then best path under the averaged estimates."""
    adapters = adapters or fidelity_adapters()
    topo = instance.topology
    p_hat = np.zeros(topo.num_links)
    trace = []
    cost = 0
    for ell in range(topo.num_links):
        for i in range(cfg.samples_per_arm):
            res = bench.link(ell, rng)
            p_hat[ell] += res.p_hat
            cost += res.cost_units
            if keep_trace:
                trace.append({"arm": ell, "sample": i, "feedback": res.p_hat,
                              "cost_units": res.cost_units})
    p_hat /= cfg.samples_per_arm
    weights = adapters.link_weight(np.clip(p_hat, P_CLIP_LO, P_CLIP_HI))
    out = best_path_oracle(topo, weights)
    return LinkRunResult(output_path=out, cost=cost, rounds=cost, trace=trace)


def uniform_path(instance: Instance, bench, cfg: BaselineConfig,
                 rng: np.random.Generator,
                 keep_trace: bool = True) -> LinkRunResult:
    """Equal per-path budget, then the empirically best path."""
    topo = instance.topology
    means = np.zeros(topo.num_paths)
    trace = []
    cost = 0
    samples = 0
    for k in range(topo.num_paths):
        for i in range(cfg.samples_per_arm):
            res = bench.path(k, rng)
            means[k] += res.p_hat
            cost += res.cost_units
            samples += 1
            if keep_trace:
                trace.append({"arm": k, "sample": i, "feedback": res.p_hat,
                              "cost_units": res.cost_units})
    means /= cfg.samples_per_arm
    out = int(np.argmax(means))
    return LinkRunResult(output_path=out, cost=cost, rounds=samples, trace=trace)


def _elim_radius(c: float, num_arms: int, r: int, delta: float) -> float:
    return math.sqrt(c * math.log(4.0 * num_arms * r * r / delta) / r)


def succ_elim(instance: Instance, bench, cfg: BaselineConfig,
              rng: np.random.Generator,
              keep_trace: bool = True) -> LinkRunResult:
    """Successive elimination over path arms.

    Each round benchmarks every surviving path once; an arm is dropped when
    its mean trails the best surviving mean by more than twice the round's
    confidence radius.  Stops at a single survivor (or at the round cap).
    """
    topo = instance.topology
    if topo.num_paths < 2:
        raise ValueError("elimination needs at least two candidate paths")
    alive = list(range(topo.num_paths))
    sums = np.zeros(topo.num_paths)
    cost = 0
    samples = 0
    trace = []
    exhausted = False
    r = 0
    while len(alive) > 1:
        r += 1
        if r > cfg.round_cap:
            exhausted = True
            break
        for k in alive:
            res = bench.path(k, rng)
            sums[k] += res.p_hat
            cost += res.cost_units
            samples += 1
        means = sums[alive] / r
        rad = _elim_radius(cfg.c, topo.num_paths, r, cfg.delta)
        best_mean = means.max()
        kept = [k for k, mk in zip(alive, means) if best_mean - mk <= 2.0 * rad]
        if keep_trace:
            trace.append({"round": r, "radius": rad,
                          "eliminated": sorted(set(alive) - set(kept)),
                          "cost_units": sum(int(topo.path_lengths[k]) for k in alive)})
        alive = kept
    means = sums[alive] / max(r, 1)
    out = alive[int(np.argmax(means))]
    return LinkRunResult(output_path=out, cost=cost, rounds=samples, trace=trace,
                         budget_exhausted=exhausted)


def halving_eliminator(instance: Instance, bench, cfg: BaselineConfig,
                       rng: np.random.Generator,
                       keep_trace: bool = True) -> LinkRunResult:
    """Topology-oblivious halving over path arms with phase-doubling budgets.

    Phase f benchmarks every surviving arm 2**(f-1) times (scaled by a
    confidence-derived base count), then keeps the better half by running
    mean.  At most ceil(log2 K) phases.
    """
    topo = instance.topology
    if topo.num_paths < 2:
        raise ValueError("elimination needs at least two candidate paths")
    base = max(1, math.ceil(16.0 * cfg.c * math.log(4.0 * topo.num_paths / cfg.delta)))
    alive = list(range(topo.num_paths))
    sums = np.zeros(topo.num_paths)
    counts = np.zeros(topo.num_paths, dtype=int)
    cost = 0
    samples = 0
    trace = []
    phase = 0
    while len(alive) > 1:
        phase += 1
        pulls = base * 2 ** (phase - 1)
        for k in alive:
            for _ in range(pulls):
                res = bench.path(k, rng)
                sums[k] += res.p_hat
                counts[k] += 1
                cost += res.cost_units
                samples += 1
        means = sums[alive] / counts[alive]
        keep_n = (len(alive) + 1) // 2
        order = np.lexsort((alive, -means))  # best mean first, smallest id on ties
        kept = sorted(int(alive[i]) for i in order[:keep_n])
        if keep_trace:
            phase_cost = pulls * int(topo.path_lengths[alive].sum())
            trace.append({"phase": phase, "pulls": pulls,
                          "eliminated": sorted(set(alive) - set(kept)),
                          "cost_units": phase_cost})
        alive = kept
    return LinkRunResult(output_path=alive[0], cost=cost, rounds=samples,
                         trace=trace)
