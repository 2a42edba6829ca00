"""Adaptive link-level best-path identification.

The learner keeps a running-mean estimate and a pull counter per link.  Each
round it computes the empirical best path, then re-scores with pessimistic
estimates (minus one confidence radius) on that path's links and optimistic
estimates (plus one radius) everywhere else.  If the re-scored best path uses
the same links, no competitor can still overtake and the learner stops;
otherwise it benchmarks the most uncertain link on which the two candidate
paths disagree.  Under link-level feedback the resource cost equals the
number of rounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .benchmark import P_CLIP_HI, P_CLIP_LO
from .metrics import MetricAdapters, fidelity_adapters
from .network import Instance, best_path_oracle


@dataclass(frozen=True)
class RadiusConfig:
    """Confidence-radius constant and target error probability."""

    c: float
    delta: float
    round_cap: int = 1_000_000

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("radius constant must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass
class LinkEstimates:
    """Running per-link means and pull counts at round ``t``."""

    p_hat: np.ndarray
    counts: np.ndarray
    t: int


@dataclass
class LinkRunResult:
    """Outcome of one identification run (any algorithm, any feedback level)."""

    output_path: int
    cost: int
    rounds: int
    trace: list
    budget_exhausted: bool = False


def radius(t: int, n: int, cfg: RadiusConfig, num_links: int) -> float:
    """Confidence radius sqrt(C * ln(2 L t^3 / delta) / N)."""
    if t < 1 or n < 1:
        raise ValueError("round index and pull count must be >= 1")
    return math.sqrt(cfg.c * math.log(2.0 * num_links * t**3 / cfg.delta) / n)


def confidence_estimates(est: LinkEstimates, k_hat: int, cfg: RadiusConfig,
                         instance: Instance) -> np.ndarray:
    """Pessimistic estimates on the incumbent path's links, optimistic elsewhere.

    The radius adjustment is applied first, then the result is clamped into
    the valid parameter range so downstream logs stay finite.
    """
    num_links = instance.topology.num_links
    rads = np.array([radius(est.t, int(n), cfg, num_links) for n in est.counts])
    on_path = instance.topology.incidence[k_hat].astype(bool)
    tilde = np.where(on_path, est.p_hat - rads, est.p_hat + rads)
    return np.clip(tilde, P_CLIP_LO, P_CLIP_HI)


def select_link(k_hat: int, k_tilde: int, est: LinkEstimates, cfg: RadiusConfig,
                instance: Instance) -> int:
    """Most uncertain link in the symmetric difference of the two paths."""
    inc = instance.topology.incidence
    diff = np.flatnonzero(inc[k_hat].astype(bool) ^ inc[k_tilde].astype(bool))
    if diff.size == 0:
        raise ValueError("candidate paths share the same link set")
    # Radius at fixed t decreases in the pull count, so the argmax is the
    # least-pulled link; ties break toward the smallest link id.
    counts = est.counts[diff]
    return int(diff[int(np.argmin(counts))])


def run_bequp_link(instance: Instance, bench, cfg: RadiusConfig,
                   rng: np.random.Generator,
                   adapters: MetricAdapters | None = None,
                   keep_trace: bool = True) -> LinkRunResult:
    """Fixed-confidence link-level identification loop.

    ``bench`` provides per-link estimate samples (see
    :class:`~bequp.benchmark.Bench`).  ``adapters`` selects the path metric;
    the default scores paths by fidelity.  Returns the identified path, the
    total resource cost (equal to the number of bench calls), and a per-round
    trace.  A hard round cap guards misconfigured runs; hitting it returns
    the current best path with ``budget_exhausted`` set.
    """
    adapters = adapters or fidelity_adapters()
    topo = instance.topology
    if topo.num_paths < 2:
        raise ValueError("identification needs at least two candidate paths")
    num_links = topo.num_links

    trace: list = []
    p_hat = np.empty(num_links)
    for ell in range(num_links):
        res = bench.link(ell, rng)
        p_hat[ell] = res.p_hat
        if keep_trace:
            trace.append({"t": ell + 1, "k_hat": None, "k_tilde": None,
                          "chosen_link": ell, "feedback": res.p_hat,
                          "N_after": 1, "cost_units": res.cost_units})
    counts = np.ones(num_links, dtype=int)
    est = LinkEstimates(p_hat=p_hat, counts=counts, t=num_links)

    budget_exhausted = False
    while True:
        clipped = np.clip(est.p_hat, P_CLIP_LO, P_CLIP_HI)
        k_hat = best_path_oracle(topo, adapters.link_weight(clipped))
        tilde = confidence_estimates(est, k_hat, cfg, instance)
        k_tilde = best_path_oracle(topo, adapters.link_weight(tilde))
        if np.array_equal(topo.incidence[k_hat], topo.incidence[k_tilde]):
            break
        if est.t - num_links >= cfg.round_cap:
            budget_exhausted = True
            break
        ell = select_link(k_hat, k_tilde, est, cfg, instance)
        res = bench.link(ell, rng)
        est.counts[ell] += 1
        est.p_hat[ell] += (res.p_hat - est.p_hat[ell]) / est.counts[ell]
        est.t += 1
        if keep_trace:
            trace.append({"t": est.t, "k_hat": k_hat, "k_tilde": k_tilde,
                          "chosen_link": ell, "feedback": res.p_hat,
                          "N_after": int(est.counts[ell]),
                          "cost_units": res.cost_units})

    return LinkRunResult(output_path=k_hat, cost=est.t, rounds=est.t,
                         trace=trace, budget_exhausted=budget_exhausted)
