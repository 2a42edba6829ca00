import numpy as np
import pytest

from bequp.network import Instance, build_segmented_topology


@pytest.fixture
def diamond():
    """Two parallel links, p = (0.9, 0.8); gap ln(0.9/0.8)."""
    return Instance(build_segmented_topology([2]), np.array([0.9, 0.8]))


@pytest.fixture
def three_segment():
    return Instance(build_segmented_topology([2, 2, 3]),
                    np.array([0.98, 0.8, 0.98, 0.8, 0.98, 0.9, 0.7]))


def random_instance(rng, max_count=3, p_low=0.7, p_high=0.99, min_gap=0.08):
    """Random multi-segment instance with a clearly unique best path."""
    while True:
        counts = [int(rng.integers(2, max_count + 1))
                  for _ in range(int(rng.integers(2, 4)))]
        topo = build_segmented_topology(counts)
        p = rng.uniform(p_low, p_high, size=topo.num_links)
        inst = Instance(topo, p)
        scores = np.sort(topo.incidence.astype(float) @ np.log(p))
        if scores[-1] - scores[-2] > min_gap:
            return inst
