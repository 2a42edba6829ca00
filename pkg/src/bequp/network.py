"""Two-terminal network model: links, enumerated paths, and exact path scores.

A network instance is a set of L links, a set of K enumerated paths given as
0/1 incidence rows over the links, and one depolarizing parameter per link.
A path's depolarizing parameter is the product of its links' parameters, so
its log-score F(k) = sum of log p over the path's links orders paths exactly
like path fidelity does.  Everything here is analytic (no simulation) and is
used both by the learners and as ground truth in tests.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

# Paths whose F-scores tie within this absolute tolerance are degenerate.
UNIQUENESS_TOL = 1e-12


class DegenerateInstanceError(ValueError):
    """No unique best path exists (two paths tie, or there is no competitor)."""


@dataclass(eq=False)
class Topology:
    """Link/path structure between a fixed source-destination node pair.

    ``incidence`` is a (K, L) 0/1 matrix; row k flags the links used by path
    k.  Rows must be distinct and non-empty.  The matrix rank is recorded but
    full rank is NOT required: series-of-parallel-segment networks are
    naturally rank deficient, and the regression-based estimators work inside
    the row span.
    """

    incidence: np.ndarray
    segments: tuple[int, ...] | None = None

    def __post_init__(self):
        inc = np.asarray(self.incidence)
        if inc.ndim != 2 or inc.size == 0:
            raise ValueError("incidence must be a non-empty 2-D 0/1 matrix")
        if not np.isin(inc, (0, 1)).all():
            raise ValueError("incidence entries must be 0 or 1")
        if (inc.sum(axis=1) == 0).any():
            raise ValueError("every path must use at least one link")
        rows = {tuple(r) for r in inc.tolist()}
        if len(rows) != inc.shape[0]:
            raise ValueError("paths must have distinct link sets")
        self.incidence = inc.astype(np.uint8)
        self.incidence.setflags(write=False)

    @property
    def num_links(self) -> int:
        return self.incidence.shape[1]

    @property
    def num_paths(self) -> int:
        return self.incidence.shape[0]

    @property
    def path_lengths(self) -> np.ndarray:
        return self.incidence.sum(axis=1).astype(int)

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.incidence.astype(float)))

    def links_of(self, k: int) -> tuple[int, ...]:
        """Link ids used by path ``k``, ascending."""
        return tuple(int(i) for i in np.flatnonzero(self.incidence[k]))


@dataclass(eq=False)
class Instance:
    """A topology plus ground-truth per-link depolarizing parameters."""

    topology: Topology
    link_p: np.ndarray
    label: str | None = None

    def __post_init__(self):
        p = np.asarray(self.link_p, dtype=float)
        if p.shape != (self.topology.num_links,):
            raise ValueError("link_p must have one entry per link")
        if (p <= 0).any() or (p > 1).any():
            raise ValueError("link depolarizing parameters must lie in (0, 1]")
        self.link_p = p
        self.link_p.setflags(write=False)

    def to_json(self) -> str:
        doc: dict = {"link_p": self.link_p.tolist()}
        if self.topology.segments is not None:
            doc["segments"] = list(self.topology.segments)
        else:
            doc["incidence"] = self.topology.incidence.astype(int).tolist()
        if self.label:
            doc["label"] = self.label
        return json.dumps(doc)

    @staticmethod
    def from_json(text: str) -> "Instance":
        doc = json.loads(text)
        if "segments" in doc:
            topo = build_segmented_topology(doc["segments"])
        else:
            topo = Topology(np.asarray(doc["incidence"]))
        return Instance(topo, np.asarray(doc["link_p"], dtype=float),
                        label=doc.get("label"))


@dataclass(eq=False)
class GapReport:
    """Separations between the best path and its competitors.

    ``path_gaps[k]`` is F(best) - F(k) for k != best and the minimum such gap
    for the best path itself.  ``link_gaps[l]`` compares the best path against
    the best competitor through (or avoiding) link l; links used by every path
    or by no path have no competitor and get +inf.
    """

    link_gaps: np.ndarray
    path_gaps: np.ndarray
    best_path: int


def build_segmented_topology(parallel_counts) -> Topology:
    """Series of parallel segments: one link group per hop, one pick per hop.

    ``parallel_counts[i]`` is the number of parallel links in segment i.
    Paths are all combinations choosing one link per segment, ordered
    lexicographically by per-segment link index, so L = sum(counts) and
    K = prod(counts).
    """
    counts = [int(c) for c in parallel_counts]
    if not counts or any(c < 1 for c in counts):
        raise ValueError("parallel_counts must be a non-empty list of positive ints")
    offsets = np.concatenate(([0], np.cumsum(counts[:-1]))).astype(int)
    total = int(sum(counts))
    rows = []
    for combo in itertools.product(*(range(c) for c in counts)):
        row = np.zeros(total, dtype=np.uint8)
        for seg, pick in enumerate(combo):
            row[offsets[seg] + pick] = 1
        rows.append(row)
    return Topology(np.array(rows), segments=tuple(counts))


def path_depolarizing(instance: Instance, k: int) -> float:
    """Product of the link depolarizing parameters along path ``k``."""
    mask = instance.topology.incidence[k].astype(bool)
    return float(np.prod(instance.link_p[mask]))


def transformed_fidelity(instance: Instance, k: int) -> float:
    """F(k) = sum of log p over the links of path ``k`` (natural log)."""
    if (instance.link_p <= 0).any():
        raise ValueError("log score requires strictly positive link parameters")
    return float(instance.topology.incidence[k].astype(float) @ np.log(instance.link_p))


def all_transformed_fidelities(instance: Instance) -> np.ndarray:
    """F(k) for every path, as one matrix-vector product."""
    return instance.topology.incidence.astype(float) @ np.log(instance.link_p)


def fidelity_from_p(p: float) -> float:
    """Average channel fidelity of a depolarizing-form channel, f = (1+p)/2."""
    if not 0 < p <= 1:
        raise ValueError(f"depolarizing parameter {p} outside (0, 1]")
    return (1.0 + p) / 2.0


def p_from_fidelity(f: float) -> float:
    """Inverse of :func:`fidelity_from_p`; requires f in (1/2, 1]."""
    if not 0.5 < f <= 1:
        raise ValueError(f"fidelity {f} outside (1/2, 1]")
    return 2.0 * f - 1.0


def best_path_oracle(topology: Topology, weights, subset=None) -> int:
    """Path in ``subset`` maximizing x(k) . weights, smallest id on ties.

    With ``weights = log p`` this is exact best-path selection; on the full
    path set of a segmented topology it coincides with a shortest-path
    computation under edge lengths ``-weights``.
    """
    weights = np.asarray(weights, dtype=float)
    if subset is None:
        ids = np.arange(topology.num_paths)
    else:
        ids = np.asarray(sorted(int(k) for k in subset))
        if ids.size == 0:
            raise ValueError("subset of candidate paths must be non-empty")
    scores = topology.incidence[ids].astype(float) @ weights
    return int(ids[int(np.argmax(scores))])


def compute_gaps(instance: Instance) -> GapReport:
    """Brute-force link and path separations over the enumerated path set."""
    topo = instance.topology
    if topo.num_paths < 2:
        raise DegenerateInstanceError("gap computation needs at least two paths")
    F = all_transformed_fidelities(instance)
    order = np.argsort(-F, kind="stable")
    best = int(order[0])
    runner = int(order[1])
    if abs(F[best] - F[runner]) < UNIQUENESS_TOL:
        raise DegenerateInstanceError(
            f"degenerate instance: paths {best} and {runner} tie on F"
        )

    path_gaps = F[best] - F
    path_gaps[best] = F[best] - F[runner]

    inc = topo.incidence.astype(bool)
    link_gaps = np.full(topo.num_links, np.inf)
    for ell in range(topo.num_links):
        if inc[best, ell]:
            rivals = F[~inc[:, ell]]
        else:
            rivals = F[inc[:, ell]]
        if rivals.size:
            link_gaps[ell] = F[best] - rivals.max()
    return GapReport(link_gaps=link_gaps, path_gaps=path_gaps, best_path=best)
