"""Path-level best-path identification via batched regression and pruning.

Path-level feedback only reveals whole-path decay estimates, so per-link
log-parameters are recovered by linear regression: each sampled path k
contributes the equation x(k) . log_p = log(Y).  Sampling follows a
D/G-optimal design over the current candidate set, computed with Frank-Wolfe
iterations; all linear algebra is pseudo-inverse based and therefore valid on
rank-deficient incidence matrices (estimates live in the sampled row span,
components orthogonal to it are zeroed).

The outer loop halves a candidate set against the thresholds L / 2**h while
an inner loop prunes paths whose estimated score falls a shrinking margin
eps = 2**-s below the incumbent.  Sampling always draws from the candidate
set frozen at the start of the outer iteration, while pruning acts on the
current set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .metrics import MetricAdapters, fidelity_adapters
from .network import Instance, Topology, best_path_oracle

_G_SLACK = 0.05
_FW_MAX_ITERS = 10_000
_DESIGN_CACHE: dict = {}


@dataclass(frozen=True)
class DesignWeights:
    """Sampling distribution over a path subset with its G-criterion value."""

    support: tuple
    probabilities: np.ndarray
    g_value: float
    rank: int


@dataclass(frozen=True)
class LinkLogEstimate:
    """Regressed per-link log parameters (valid on the sampled row span)."""

    log_p_hat: np.ndarray
    samples_used: int
    cost_units: int


def optimal_design(topology: Topology, subset) -> DesignWeights:
    """Frank-Wolfe D-optimal design over ``subset`` with a G-criterion stop.

    Iterates until the worst-case normalized prediction variance
    max_k x(k) A(lambda)^+ x(k) is within 5% of the incidence rank of the
    subset (its optimum), starting from uniform weights.  Results are cached
    per (topology, subset) since the design is data-independent.
    """
    support = tuple(sorted(int(k) for k in subset))
    if not support:
        raise ValueError("design subset must be non-empty")
    key = (topology.incidence.tobytes(), topology.incidence.shape, support)
    hit = _DESIGN_CACHE.get(key)
    if hit is not None:
        return hit

    X = topology.incidence[list(support)].astype(float)
    n = X.shape[0]
    if n == 1:
        design = DesignWeights(support, np.array([1.0]), 1.0, 1)
        _DESIGN_CACHE[key] = design
        return design

    rank = int(np.linalg.matrix_rank(X))
    lam = np.full(n, 1.0 / n)
    g = np.inf
    for _ in range(_FW_MAX_ITERS):
        A = X.T @ (lam[:, None] * X)
        Ainv = np.linalg.pinv(A, hermitian=True, rcond=1e-12)
        gvals = np.einsum("ij,jl,il->i", X, Ainv, X)
        imax = int(np.argmax(gvals))
        g = float(gvals[imax])
        if g <= (1.0 + _G_SLACK) * rank:
            break
        # Fedorov-Wynn step toward the worst-predicted vertex.
        gamma = (g / rank - 1.0) / (g - 1.0)
        gamma = min(max(gamma, 1e-9), 1.0 - 1e-9)
        lam *= 1.0 - gamma
        lam[imax] += gamma
    lam = np.maximum(lam, 0.0)
    lam /= lam.sum()
    design = DesignWeights(support, lam, g, rank)
    _DESIGN_CACHE[key] = design
    return design


def link_est(instance: Instance, sample_set, n_samples: int, bench,
             rng: np.random.Generator,
             design: DesignWeights | None = None) -> LinkLogEstimate:
    """Estimate per-link log parameters from ``n_samples`` path-level queries.

    Draws paths i.i.d. from the optimal design over ``sample_set``, queries
    the path-level bench once per draw, and solves the least-squares system
    sum_n x(k_n) x(k_n)^T theta = sum_n log(Y_n) x(k_n) by pseudo-inversion.
    Estimates at the bench clip floor enter the regression as-is (the clamp
    keeps their logs finite).  Cost is the summed length of the sampled paths.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    topo = instance.topology
    design = design or optimal_design(topo, sample_set)
    ids = np.asarray(design.support)
    draws = rng.choice(ids, size=n_samples, p=design.probabilities)
    y_hat, _failed, costs = bench.path_batch(draws, rng)

    X = topo.incidence[draws].astype(float)
    gram = X.T @ X
    b = X.T @ np.log(y_hat)
    theta = np.linalg.pinv(gram, hermitian=True, rcond=1e-10) @ b
    return LinkLogEstimate(log_p_hat=theta, samples_used=n_samples,
                           cost_units=int(costs.sum()))


def prune(topology: Topology, subset, link_scores, eps: float) -> list:
    """Drop paths whose estimated score trails the incumbent by ``eps`` or more.

    The incumbent (argmax of the summed link scores, smallest id on ties) is
    always retained.
    """
    subset = sorted(int(k) for k in subset)
    if not subset:
        raise ValueError("cannot prune an empty path set")
    link_scores = np.asarray(link_scores, dtype=float)
    scores = topology.incidence[subset].astype(float) @ link_scores
    best_score = scores[int(np.argmax(scores))]
    return [k for k, sc in zip(subset, scores) if best_score - sc < eps]


def schedule_params(h: int, s: int, delta: float, num_links: int,
                    sample_set_size: int, c0: float):
    """Per-iteration confidence split, accuracy target, and sample count.

    delta_hs = (36 / pi^4) * delta / ((h+1)^2 s^2), eps_hs = 2**-s, and the
    sample count follows the quarter-accuracy regression budget
    ceil(c0 * (2 + (6 + eps/4) L) / (eps/4)^2 * ln(5 |S| / delta_hs)).
    """
    if h < 0 or s < 1:
        raise ValueError("need h >= 0 and s >= 1")
    delta_hs = (36.0 / math.pi**4) * delta / ((h + 1) ** 2 * s**2)
    eps_hs = 2.0 ** (-s)
    quarter = eps_hs / 4.0
    n = math.ceil(
        c0 * (2.0 + (6.0 + quarter) * num_links) / quarter**2
        * math.log(5.0 * sample_set_size / delta_hs)
    )
    return delta_hs, eps_hs, max(1, n)


def lemma_sample_size(num_links: int, eps: float, delta: float, c0: float) -> int:
    """Full-accuracy regression budget c0 (4L + (6+eps) L^2) / eps^2 ln(5L/delta)."""
    n = math.ceil(
        c0 * (4.0 * num_links + (6.0 + eps) * num_links**2) / eps**2
        * math.log(5.0 * num_links / delta)
    )
    return max(1, n)


def run_bequp_path(instance: Instance, bench, delta: float, c0: float,
                   rng: np.random.Generator,
                   adapters: MetricAdapters | None = None,
                   sample_cap: int = 1_000_000,
                   keep_trace: bool = True):
    """Halving-and-pruning path-level identification.

    Returns a :class:`~bequp.link_learner.LinkRunResult` whose ``rounds``
    counts path-level bench queries, so the resource cost equals the summed
    lengths of all sampled paths.  The halving threshold is floored at one
    candidate and the loop exits as soon as a single path survives; a cap on
    total samples guards misconfigured runs.
    """
    from .link_learner import LinkRunResult  # local import avoids a cycle

    adapters = adapters or fidelity_adapters()
    topo = instance.topology
    if topo.num_paths < 2:
        raise ValueError("identification needs at least two candidate paths")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    num_links = topo.num_links

    candidates = list(range(topo.num_paths))
    cost = 0
    samples_total = 0
    trace: list = []
    exhausted = False
    last_scores = np.zeros(num_links)

    for h in range(math.ceil(math.log2(num_links)) + 1):
        frozen = tuple(candidates)
        design = optimal_design(topo, frozen)
        threshold = max(1, num_links // 2**h)
        s = 1
        while len(candidates) > threshold:
            delta_hs, eps_hs, n = schedule_params(
                h, s, delta, num_links, len(frozen), c0)
            if samples_total + n > sample_cap:
                exhausted = True
                break
            est = link_est(instance, frozen, n, bench, rng, design=design)
            cost += est.cost_units
            samples_total += n
            last_scores = adapters.score_from_log_p(est.log_p_hat)
            k_best = best_path_oracle(topo, last_scores, subset=candidates)
            kept = prune(topo, candidates, last_scores,
                         eps_hs * adapters.prune_widening)
            if keep_trace:
                trace.append({
                    "h": h, "s": s, "S_size": len(candidates),
                    "delta_hs": delta_hs, "eps_hs": eps_hs, "N": n,
                    "k_best": k_best,
                    "pruned": sorted(set(candidates) - set(kept)),
                    "cost_units": est.cost_units,
                })
            candidates = kept
            s += 1
        if exhausted or len(candidates) == 1:
            break

    if len(candidates) == 1:
        output = candidates[0]
    else:
        output = best_path_oracle(topo, last_scores, subset=candidates)
    return LinkRunResult(output_path=output, cost=cost, rounds=samples_total,
                         trace=trace, budget_exhausted=exhausted)
