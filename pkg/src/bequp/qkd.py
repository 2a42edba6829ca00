"""Secret-key-fraction metric for key-distribution path selection.

A link's Werner parameter w = (2p + 1) / 3 is multiplicative along a path,
and the secret key fraction of running BB84 over a path is
u = 1 - 2 h((1 - w_path) / 2) with h the binary entropy.  Since u is a
monotone function of w_path, ranking paths by U(k) = sum of log w over the
path's links ranks them by secret key fraction; U is what the adapted
learners maximize.

Because the per-link log-Werner transform is a contraction of at most factor
two on log-p differences (see :func:`werner_log_gap_within_bound`), path-level
estimation errors at accuracy eps in log-p space stay within 2 * eps in
log-Werner space; the path-level learner widens its prune threshold
accordingly.
"""

from __future__ import annotations

import math

import numpy as np

from .metrics import MetricAdapters
from .network import Instance, all_transformed_fidelities


def werner_from_p(p):
    """Werner parameter of a link with depolarizing parameter p: (2p + 1) / 3."""
    p = np.asarray(p, dtype=float)
    if (p <= 0).any() or (p > 1).any():
        raise ValueError("depolarizing parameter must lie in (0, 1]")
    out = (2.0 * p + 1.0) / 3.0
    return float(out) if out.ndim == 0 else out


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with h(0) = h(1) = 0 by continuity."""
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def skf(w_path: float) -> float:
    """Secret key fraction 1 - 2 h((1 - w) / 2) of a path Werner parameter."""
    if not 0.0 < w_path <= 1.0:
        raise ValueError("path Werner parameter must lie in (0, 1]")
    return 1.0 - 2.0 * binary_entropy((1.0 - w_path) / 2.0)


def transformed_skf(instance: Instance, k: int) -> float:
    """U(k) = sum of log((2 p + 1) / 3) over the links of path ``k``."""
    row = instance.topology.incidence[k].astype(float)
    return float(row @ np.log(werner_from_p(instance.link_p)))


def all_transformed_skf(instance: Instance) -> np.ndarray:
    return instance.topology.incidence.astype(float) @ np.log(werner_from_p(instance.link_p))


def werner_log_gap_within_bound(a: float, b: float, eps: float) -> bool:
    """Check the two-fold widening bound on log-Werner differences.

    For 0 < a, b < 1 with |log a - log b| <= eps, the difference of the
    log-Werner transforms obeys |log((2a+1)/3) - log((2b+1)/3)| <= 2 eps.
    Returns the verified outcome; raises if the premise does not hold.
    """
    if abs(math.log(a) - math.log(b)) > eps:
        raise ValueError("premise |log a - log b| <= eps violated")
    lhs = abs(math.log((2.0 * a + 1.0) / 3.0) - math.log((2.0 * b + 1.0) / 3.0))
    return lhs <= 2.0 * eps


def skf_metric_adapters() -> MetricAdapters:
    """Adapters turning either learner into a best-secret-key-fraction finder.

    Provides the log-Werner link weights for best-path selection, the
    log-p -> log-Werner post-transform for regression outputs, and the
    factor-two prune widening.
    """
    return MetricAdapters(
        name="skf",
        link_weight=lambda p: np.log((2.0 * np.asarray(p, dtype=float) + 1.0) / 3.0),
        score_from_log_p=lambda log_p: np.log(
            (2.0 * np.exp(np.asarray(log_p, dtype=float)) + 1.0) / 3.0
        ),
        prune_widening=2.0,
    )


def best_skf_path_bruteforce(instance: Instance) -> int:
    """Enumerated argmax of the secret key fraction itself (test oracle)."""
    inc = instance.topology.incidence.astype(bool)
    w = werner_from_p(instance.link_p)
    values = [skf(float(np.prod(w[row]))) for row in inc]
    return int(np.argmax(values))
