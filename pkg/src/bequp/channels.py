"""Exact single-qubit channel algebra in the Pauli transfer representation.

A channel acts on the Pauli coefficient vector s = (1, r_x, r_y, r_z) of a
qubit state as s' = R s with R a real 4x4 matrix whose first row is
(1, 0, 0, 0) for trace preservation.  This is sufficient physics for the
whole artifact: the benchmarked quantity of any channel is the depolarizing
parameter of its Clifford twirl, p = tr(R[1:, 1:]) / 3, and the average
channel fidelity is (1 + p) / 2.

Clifford gates are ideal (noiseless) orthogonal PTMs; the 24-element group is
generated programmatically from the H and S gates to avoid transcription
errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

NOISE_KINDS = ("depolarizing", "dephasing", "amplitude_damping", "bit_flip")


@dataclass(frozen=True)
class NoiseModel:
    """One of the four built-in noise families with its strength parameter.

    ``strength`` is the error probability q for depolarizing / dephasing /
    bit_flip and the damping probability gamma for amplitude_damping.
    """

    kind: str
    strength: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.strength <= 1.0:
            raise ValueError(f"noise strength {self.strength} outside [0, 1]")


def identity_ptm() -> np.ndarray:
    return np.eye(4)


def ptm_of(model: NoiseModel) -> np.ndarray:
    """Pauli transfer matrix of a built-in noise model."""
    q = model.strength
    R = np.eye(4)
    if model.kind == "depolarizing":
        R[1, 1] = R[2, 2] = R[3, 3] = 1.0 - q
    elif model.kind == "dephasing":
        R[1, 1] = R[2, 2] = 1.0 - 2.0 * q
    elif model.kind == "bit_flip":
        R[2, 2] = R[3, 3] = 1.0 - 2.0 * q
    else:  # amplitude damping
        s = math.sqrt(1.0 - q)
        R[1, 1] = R[2, 2] = s
        R[3, 3] = 1.0 - q
        R[3, 0] = q
    return R


def compose(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Channel applying ``a`` first, then ``b`` (matrix product b @ a)."""
    return b @ a


def compose_chain(ptms) -> np.ndarray:
    """Sequential composition of a list of channels, first entry first."""
    out = np.eye(4)
    for R in ptms:
        out = R @ out
    return out


def effective_depolarizing(ptm: np.ndarray) -> float:
    """Depolarizing parameter of the Clifford twirl of ``ptm``.

    p = tr(unital 3x3 block) / 3; the twirled channel has the same average
    fidelity as the original, f = (1 + p) / 2.
    """
    return float(np.trace(ptm[1:, 1:]) / 3.0)


def strength_from_fidelity(kind: str, f: float) -> NoiseModel:
    """Noise model of the given family whose average fidelity is ``f``.

    Closed forms, each inverting effective_depolarizing(ptm_of(.)) = 2f - 1:
    depolarizing q = 2(1-f); dephasing and bit_flip q = 3(1-f)/2; amplitude
    damping gamma = 1 - s^2 with s = sqrt(6f - 2) - 1.
    """
    if kind not in NOISE_KINDS:
        raise ValueError(f"unknown noise kind {kind!r}")
    if kind == "depolarizing":
        if not 0.5 <= f <= 1.0:
            raise ValueError(f"fidelity {f} unreachable for depolarizing noise")
        return NoiseModel(kind, 2.0 * (1.0 - f))
    if kind in ("dephasing", "bit_flip"):
        if not 1.0 / 3.0 <= f <= 1.0:
            raise ValueError(f"fidelity {f} unreachable for {kind} noise")
        return NoiseModel(kind, 3.0 * (1.0 - f) / 2.0)
    if not 0.5 <= f <= 1.0:
        raise ValueError(f"fidelity {f} unreachable for amplitude damping")
    s = math.sqrt(6.0 * f - 2.0) - 1.0
    return NoiseModel(kind, min(1.0, max(0.0, 1.0 - s * s)))


_H = np.array([
    [1, 0, 0, 0],
    [0, 0, 0, 1],
    [0, 0, -1, 0],
    [0, 1, 0, 0],
], dtype=float)

_S = np.array([
    [1, 0, 0, 0],
    [0, 0, -1, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
], dtype=float)


@dataclass(frozen=True)
class CliffordTable:
    """The 24 single-qubit Clifford PTMs with an inverse-index lookup."""

    ptms: np.ndarray          # (24, 4, 4), entries in {-1, 0, 1}
    inverse_index: np.ndarray  # inverse_index[i] composes with i to identity

    def __len__(self) -> int:
        return self.ptms.shape[0]


def _key(R: np.ndarray) -> bytes:
    return np.rint(R).astype(np.int8).tobytes()


@lru_cache(maxsize=1)
def clifford_table() -> CliffordTable:
    """Generate the Clifford group by closing {H, S} under composition."""
    seen = {_key(np.eye(4)): np.eye(4)}
    frontier = [np.eye(4)]
    while frontier:
        nxt = []
        for R in frontier:
            for G in (_H, _S):
                P = G @ R
                k = _key(P)
                if k not in seen:
                    seen[k] = np.rint(P)
                    nxt.append(P)
        frontier = nxt
    ptms = np.array(sorted(seen.values(), key=_key), dtype=float)
    if ptms.shape[0] != 24:
        raise RuntimeError(f"Clifford closure produced {ptms.shape[0]} elements")
    # PTMs of unitaries are orthogonal, so the inverse is the transpose.
    index = {_key(P): i for i, P in enumerate(ptms)}
    inverse_index = np.array([index[_key(P.T)] for P in ptms])
    return CliffordTable(ptms=ptms, inverse_index=inverse_index)


def haar_state_blochs(n: int, rng: np.random.Generator) -> np.ndarray:
    """Bloch vectors of ``n`` Haar-random pure qubit states, shape (n, 3)."""
    z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    a, b = z[:, 0], z[:, 1]
    return np.stack([
        2.0 * (np.conj(a) * b).real,
        2.0 * (np.conj(a) * b).imag,
        np.abs(a) ** 2 - np.abs(b) ** 2,
    ], axis=1)


def average_fidelity_monte_carlo(ptm: np.ndarray, n: int,
                                 rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of state fidelity over Haar inputs.

    For a pure input with Bloch vector r, the output overlap is
    (1 + r . (B r + c)) / 2 with B the unital block and c the translation.
    """
    r = haar_state_blochs(n, rng)
    B = ptm[1:, 1:]
    c = ptm[1:, 0]
    fid = (1.0 + np.einsum("ni,ni->n", r, r @ B.T + c)) / 2.0
    return float(fid.mean()), float(fid.std(ddof=1) / math.sqrt(n))
