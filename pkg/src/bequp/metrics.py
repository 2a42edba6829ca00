"""Path-scoring metrics shared by both learners.

A metric supplies (i) the per-link weight transform fed to best-path
selection from depolarizing-parameter estimates, (ii) the transform applied
to regression outputs (which live in log-p space), and (iii) the widening
factor for pruning thresholds.  The fidelity metric scores a path by the sum
of log p over its links; alternative metrics plug in a different monotone
per-link transform.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class MetricAdapters:
    name: str
    #: p estimates -> per-link weights for best-path selection
    link_weight: Callable[[np.ndarray], np.ndarray]
    #: log-p estimates -> per-link scores summed into path values
    score_from_log_p: Callable[[np.ndarray], np.ndarray]
    #: multiplier on prune thresholds (score errors may exceed log-p errors)
    prune_widening: float


def fidelity_adapters() -> MetricAdapters:
    return MetricAdapters(
        name="fidelity",
        link_weight=np.log,
        score_from_log_p=lambda log_p: np.asarray(log_p, dtype=float),
        prune_widening=1.0,
    )
