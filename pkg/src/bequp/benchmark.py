"""Bounce-sequence benchmarking of a link or path channel.

One benchmarking call prepares a known state, bounces it m times across the
target channel with fresh random Clifford gates at both ends, undoes the
accumulated Clifford word exactly, and measures.  Averaging T0 such shots per
bounce count m estimates the decay curve b_m = A * p**(2*m); a weighted
log-domain line fit then yields one estimate p_hat of the target's
depolarizing parameter.

Two simulation backends are provided.  ``ptm`` mode runs the full protocol on
Pauli transfer matrices (ideal preparation, gates, and measurement, so A = 1).
``surrogate`` mode draws the per-shot outcomes directly from the decay model,
which is distributionally what the twirled protocol produces and is orders of
magnitude faster.  A third, noise-free variant (:class:`ExactBench`) returns
the true parameters and is used as oracle feedback in tests.

Resource accounting is per call: one unit for a link target, one unit per
constituent link for a path target, independent of T0 and the bounce set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import (
    NoiseModel,
    clifford_table,
    compose_chain,
    ptm_of,
    strength_from_fidelity,
)
from .network import Instance, path_depolarizing

# Estimates are clamped into this range so downstream logs stay finite.
P_CLIP_LO = 0.01
P_CLIP_HI = 0.9999
A_CLIP_HI = 1.2
_WEIGHT_FLOOR = 1e-2


class InsufficientSignalError(RuntimeError):
    """Fewer than two bounce counts produced a usable survival mean."""


@dataclass(frozen=True)
class BenchConfig:
    """Benchmarking knobs: bounce set, shots per bounce, SPAM constant, mode."""

    bounces: tuple[int, ...] = tuple(range(1, 11))
    t0: int = 10
    spam_constant: float = 1.0
    mode: str = "surrogate"

    def __post_init__(self):
        b = tuple(int(m) for m in self.bounces)
        if not b or any(m < 1 for m in b) or list(b) != sorted(set(b)):
            raise ValueError("bounce set must be non-empty, positive, strictly increasing")
        object.__setattr__(self, "bounces", b)
        if self.t0 < 1:
            raise ValueError("t0 must be a positive integer")
        if not 0.0 < self.spam_constant <= 1.0:
            raise ValueError("spam constant must lie in (0, 1]")
        if self.mode not in ("surrogate", "ptm"):
            raise ValueError(f"unknown bench mode {self.mode!r}")


@dataclass(frozen=True)
class BenchResult:
    """One estimate sample plus its raw decay means and resource cost."""

    p_hat: float
    a_hat: float
    raw_means: dict
    cost_units: int
    fit_failed: bool = False


def surrogate_outcome(p: float, m: int, a: float, rng: np.random.Generator) -> int:
    """One Bernoulli outcome with success probability a * p**(2*m)."""
    if not 0.0 <= p <= 1.0 or m < 1:
        raise ValueError("need 0 <= p <= 1 and m >= 1")
    return int(rng.random() < a * p ** (2 * m))


def _ptm_survival_bits(channel: np.ndarray, m: int, shots: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Simulate ``shots`` independent m-bounce sequences; return 0/1 outcomes.

    Each bounce applies: random Clifford at the source, the channel, a random
    Clifford at the destination, and the channel again (the return leg).  The
    exact inverse of the accumulated Clifford word is applied before
    measuring in the preparation basis.
    """
    table = clifford_table().ptms
    s = np.tile(np.array([1.0, 0.0, 0.0, 1.0]), (shots, 1))
    word = np.tile(np.eye(4), (shots, 1, 1))
    for _ in range(m):
        for _side in range(2):
            cliff = table[rng.integers(0, len(table), size=shots)]
            s = np.einsum("nij,nj->ni", cliff, s)
            word = np.einsum("nij,njk->nik", cliff, word)
            s = s @ channel.T
    # Clifford PTMs are orthogonal, so the word inverse is its transpose.
    s = np.einsum("nji,nj->ni", word, s)
    survival = (1.0 + s[:, 3]) / 2.0
    return (rng.random(shots) < survival).astype(np.int8)


def ptm_bounce_outcome(channel: np.ndarray, m: int, rng: np.random.Generator) -> int:
    """Single-shot bounce sequence over a channel PTM."""
    if m < 1:
        raise ValueError("bounce count must be >= 1")
    return int(_ptm_survival_bits(channel, m, 1, rng)[0])


def fit_exponential(raw_means: dict, t0: int, weights: dict | None = None) -> tuple[float, float]:
    """Weighted log-domain line fit of b_m = A * p**(2*m).

    Uses bounce counts whose mean lies above the resolvable floor 1/(2*t0),
    with inverse-variance-style weights t0 * b * (1 - b) floored away from
    zero.  Callers may override the per-point weights (the bench passes
    weights evaluated on a predicted curve; see :func:`_gate_rows`).
    Returns (a_hat, p_hat), clamped to keep downstream logs finite.

    Raises :class:`InsufficientSignalError` with fewer than two usable
    points; callers substitute the clip floor.
    """
    floor = 1.0 / (2.0 * t0)
    ms, bs, ws = [], [], []
    for m in sorted(raw_means):
        b = raw_means[m]
        if b > floor:
            ms.append(float(m))
            bs.append(min(float(b), 1.0))
            if weights is not None:
                ws.append(float(weights[m]))
    if len(ms) < 2:
        raise InsufficientSignalError(
            f"only {len(ms)} usable bounce counts above floor {floor:g}"
        )
    x = np.array(ms)
    b = np.array(bs)
    y = np.log(b)
    w = np.array(ws) if weights is not None else t0 * b * (1.0 - b)
    w = np.maximum(w, _WEIGHT_FLOOR)
    xbar = np.average(x, weights=w)
    ybar = np.average(y, weights=w)
    sxx = np.sum(w * (x - xbar) ** 2)
    slope = float(np.sum(w * (x - xbar) * (y - ybar)) / sxx)
    intercept = float(ybar - slope * xbar)
    p_hat = float(np.clip(np.exp(slope / 2.0), P_CLIP_LO, P_CLIP_HI))
    a_hat = float(min(np.exp(intercept), A_CLIP_HI))
    return a_hat, p_hat


_STRICT_Z = 4.0
_KEEP_Z = 2.0


def _gate_rows(b: np.ndarray, sigma: np.ndarray, bounces: np.ndarray,
               t0: int) -> tuple[np.ndarray, np.ndarray]:
    """Noise-aware usability gate plus log-bias correction, vectorized by row.

    Empirical decay means are only informative while the decay clears their
    sampling noise; deeper points pass the raw fit floor just often enough
    (and only when fluctuated high) to tilt the fitted slope.  Each point is
    therefore gated by the decay predicted from the OTHER clearly resolved
    points (at least 4 sigma above zero), so inclusion never conditions on a
    point's own fluctuation.  Kept points get the second-order correction
    for the log of a noisy mean, b * exp(var / (2 b^2)).  Rows without two
    resolved points fall back to the plain floor rule, usable but biased.

    Returns (means, weights): dropped points are zeroed, which the floor
    test in the fit then excludes, and weights follow the usual
    t0 * b * (1 - b) form but evaluated on the leave-one-out prediction, so
    a point's weight cannot co-fluctuate with its value (that correlation
    otherwise tilts the weighted fit).
    """
    floor = 1.0 / (2.0 * t0)
    x = np.broadcast_to(bounces.astype(float), b.shape)
    strict = (b >= _STRICT_Z * sigma) & (b > floor)
    # Coarse rows (few shots, fast decay) rarely resolve two points at the
    # full bar; retry at a lower bar before giving up on prediction gating.
    relaxed = (b >= 0.6 * _STRICT_Z * sigma) & (b > floor)
    short = strict.sum(axis=1) < 2
    strict = np.where(short[:, None], relaxed, strict)
    y = np.where(strict, np.log(np.where(strict, b, 1.0)), 0.0)

    n_s = strict.sum(axis=1)
    sx = (strict * x).sum(axis=1)
    sy = (strict * y).sum(axis=1)
    sxx = (strict * x * x).sum(axis=1)
    sxy = (strict * x * y).sum(axis=1)

    # Leave-one-out line-fit sums: subtract each point's own contribution
    # where it belongs to the strict set.
    n_l = n_s[:, None] - strict
    sx_l = sx[:, None] - strict * x
    sy_l = sy[:, None] - strict * y
    sxx_l = sxx[:, None] - strict * x * x
    sxy_l = sxy[:, None] - strict * x * y
    det = n_l * sxx_l - sx_l * sx_l
    fit_ok = (n_l >= 2) & (det > 1e-12)
    det_safe = np.where(fit_ok, det, 1.0)
    slope = (n_l * sxy_l - sx_l * sy_l) / det_safe
    intercept = (sy_l - slope * sx_l) / np.where(n_l > 0, n_l, 1.0)
    with np.errstate(over="ignore"):
        predicted = np.exp(np.clip(intercept + slope * x, -50.0, 50.0))

    keep = np.where(fit_ok, (predicted >= _KEEP_Z * sigma) & (b > floor), strict)
    keep = np.where((n_s >= 2)[:, None], keep, b > floor)
    keep = np.where((keep.sum(axis=1) >= 2)[:, None], keep, b > floor)

    safe = np.where(keep & (b > 0), b, 1.0)
    # The delta-method exponent is only trustworthy up to sigma/b = 1/2;
    # cap it there so downward fluctuations cannot blow the correction up.
    corrected = safe * np.exp(np.minimum(sigma**2 / (2.0 * safe * safe), 0.125))
    means = np.where(keep & (b > 0), corrected, 0.0)

    wbase = np.where(fit_ok, np.clip(predicted, floor, 1.0 - floor), np.minimum(b, 1.0))
    weights = t0 * wbase * (1.0 - wbase)
    return means, weights


def _scalar_gate_fit(b, sigma, bounces, t0: int):
    """Pure-python twin of :func:`_gate_rows` + the weighted fit for one row.

    Kept in lockstep with the vectorized path (see the equivalence test);
    exists because adaptive learners issue one estimate at a time and the
    array overhead dominates at that size.  Returns
    (a_hat, p_hat, fit_failed, means) with ``means`` the gated decay values.
    """
    floor = 1.0 / (2.0 * t0)
    n = len(b)
    strict = [b[j] >= _STRICT_Z * sigma[j] and b[j] > floor for j in range(n)]
    if sum(strict) < 2:
        strict = [b[j] >= 0.6 * _STRICT_Z * sigma[j] and b[j] > floor
                  for j in range(n)]
    y = [math.log(b[j]) if strict[j] else 0.0 for j in range(n)]
    n_s = sum(strict)
    sx = sum(x for x, s in zip(bounces, strict) if s)
    sy = sum(v for v, s in zip(y, strict) if s)
    sxx = sum(x * x for x, s in zip(bounces, strict) if s)
    sxy = sum(x * v for x, v, s in zip(bounces, y, strict) if s)

    keep = [False] * n
    wbase = [0.0] * n
    for j in range(n):
        if strict[j]:
            n_l, sx_l, sy_l = n_s - 1, sx - bounces[j], sy - y[j]
            sxx_l, sxy_l = sxx - bounces[j] ** 2, sxy - bounces[j] * y[j]
        else:
            n_l, sx_l, sy_l, sxx_l, sxy_l = n_s, sx, sy, sxx, sxy
        det = n_l * sxx_l - sx_l * sx_l
        if n_l >= 2 and det > 1e-12:
            slope = (n_l * sxy_l - sx_l * sy_l) / det
            intercept = (sy_l - slope * sx_l) / n_l
            pred = math.exp(min(max(intercept + slope * bounces[j], -50.0), 50.0))
            keep[j] = pred >= _KEEP_Z * sigma[j] and b[j] > floor
            wbase[j] = min(max(pred, floor), 1.0 - floor)
        else:
            keep[j] = strict[j]
            wbase[j] = min(b[j], 1.0)
    if n_s < 2 or sum(keep) < 2:
        keep = [v > floor for v in b]
    means = [
        b[j] * math.exp(min(sigma[j] ** 2 / (2.0 * b[j] * b[j]), 0.125))
        if keep[j] and b[j] > 0 else 0.0
        for j in range(n)
    ]

    xs, ys, ws = [], [], []
    for j in range(n):
        if means[j] > floor:
            xs.append(bounces[j])
            ys.append(math.log(min(means[j], 1.0)))
            ws.append(max(t0 * wbase[j] * (1.0 - wbase[j]), _WEIGHT_FLOOR))
    if len(xs) < 2:
        return 1.0, P_CLIP_LO, True, means
    wsum = sum(ws)
    xbar = sum(w * x for w, x in zip(ws, xs)) / wsum
    ybar = sum(w * v for w, v in zip(ws, ys)) / wsum
    sxx_f = sum(w * (x - xbar) ** 2 for w, x in zip(ws, xs))
    slope = sum(w * (x - xbar) * (v - ybar)
                for w, x, v in zip(ws, xs, ys)) / sxx_f
    intercept = ybar - slope * xbar
    p_hat = min(max(math.exp(slope / 2.0), P_CLIP_LO), P_CLIP_HI)
    a_hat = min(math.exp(intercept), A_CLIP_HI)
    return a_hat, p_hat, False, means


def _fit_rows(means: np.ndarray, bounces: np.ndarray, t0: int,
              weights: np.ndarray | None = None):
    """Vectorized :func:`fit_exponential` over rows of an (n, M) mean matrix.

    Rows with fewer than two usable points get p_hat = clip floor and are
    flagged instead of raising.
    """
    floor = 1.0 / (2.0 * t0)
    b = np.minimum(means, 1.0)
    usable = b > floor
    n_usable = usable.sum(axis=1)
    ok = n_usable >= 2

    raw_w = t0 * b * (1.0 - b) if weights is None else weights
    w = np.where(usable, np.maximum(raw_w, _WEIGHT_FLOOR), 0.0)
    y = np.where(usable, np.log(np.where(usable, b, 1.0)), 0.0)
    x = np.broadcast_to(bounces.astype(float), b.shape)
    wsum = w.sum(axis=1)
    wsum_safe = np.where(wsum > 0, wsum, 1.0)
    xbar = (w * x).sum(axis=1) / wsum_safe
    ybar = (w * y).sum(axis=1) / wsum_safe
    dx = x - xbar[:, None]
    sxx = (w * dx * dx).sum(axis=1)
    sxx_safe = np.where(sxx > 0, sxx, 1.0)
    slope = (w * dx * (y - ybar[:, None])).sum(axis=1) / sxx_safe
    intercept = ybar - slope * xbar
    p_hat = np.clip(np.exp(slope / 2.0), P_CLIP_LO, P_CLIP_HI)
    a_hat = np.minimum(np.exp(intercept), A_CLIP_HI)
    p_hat = np.where(ok, p_hat, P_CLIP_LO)
    a_hat = np.where(ok, a_hat, 1.0)
    return a_hat, p_hat, ~ok


def pooled_ptm_estimate(channel: np.ndarray, config: BenchConfig, calls: int,
                        rng: np.random.Generator) -> float:
    """Decay-parameter estimate from the curve pooled over ``calls`` runs.

    Physics-validation estimator: per-call fits at realistic shot counts
    carry small nonlinear biases, so recovery checks pool the raw survival
    statistics of many protocol runs into one well-resolved curve before
    fitting.
    """
    if config.mode != "ptm":
        raise ValueError("pooled estimation is a ptm-mode tool")
    shots = calls * config.t0
    b = np.zeros(len(config.bounces))
    sigma = np.zeros(len(config.bounces))
    for j, m in enumerate(config.bounces):
        bits = np.concatenate([
            _ptm_survival_bits(channel, m, config.t0, rng)
            for _ in range(calls)
        ])
        s_bar = bits.mean()
        b[j] = 2.0 * s_bar - 1.0
        sigma[j] = 2.0 * math.sqrt(max(s_bar * (1.0 - s_bar), 0.0) / shots)
    _, p_hat, failed, _ = _scalar_gate_fit(
        b.tolist(), sigma.tolist(), [float(m) for m in config.bounces], shots)
    if failed:
        raise InsufficientSignalError("pooled curve below the fit floor")
    return p_hat


class Bench:
    """Benchmarking bound to one instance, noise assignment, and config.

    In ``ptm`` mode each link carries the physical channel of ``noise_kind``
    matched to the link fidelity (1 + p) / 2; path targets compose their
    links' channels in hop order.  In ``surrogate`` mode outcomes are drawn
    from the decay model with the target's exact depolarizing parameter.
    """

    def __init__(self, instance: Instance, config: BenchConfig,
                 noise_kind: str | None = None):
        self.instance = instance
        self.config = config
        self.noise_kind = noise_kind
        if config.mode == "ptm":
            if noise_kind is None:
                raise ValueError("ptm mode requires a noise kind")
            self._link_channels = [
                ptm_of(strength_from_fidelity(noise_kind, (1.0 + p) / 2.0))
                for p in instance.link_p
            ]
            self._path_channels: dict[int, np.ndarray] = {}

    def _path_channel(self, k: int) -> np.ndarray:
        if k not in self._path_channels:
            links = self.instance.topology.links_of(k)
            self._path_channels[k] = compose_chain(self._link_channels[i] for i in links)
        return self._path_channels[k]

    def _surrogate_means(self, p: float, count: int, rng) -> np.ndarray:
        cfg = self.config
        bounces = np.array(cfg.bounces, dtype=float)
        probs = cfg.spam_constant * p ** (2.0 * bounces)
        draws = rng.binomial(cfg.t0, np.broadcast_to(probs, (count, len(probs))))
        b = draws / cfg.t0
        sigma = np.sqrt(b * (1.0 - b) / cfg.t0)
        return _gate_rows(b, sigma, bounces, cfg.t0)

    def _ptm_means(self, channel: np.ndarray, rng) -> np.ndarray:
        """Decay means from simulated shots, preprocessed for the log fit.

        The survival frequency estimates (1 + b_m) / 2, so the implied decay
        means carry noise ~ 2 sqrt(s(1-s)/T0) regardless of depth, twice the
        surrogate's at the same shot count; the caller's usability gate
        handles the depths where that noise swamps the decay.  Returns the
        raw (decay mean, noise scale) pair per bounce count.
        """
        cfg = self.config
        n = len(cfg.bounces)
        b_hat = np.zeros(n)
        sigma = np.zeros(n)
        for j, m in enumerate(cfg.bounces):
            bits = _ptm_survival_bits(channel, m, cfg.t0, rng)
            s_bar = bits.mean()
            b_hat[j] = 2.0 * s_bar - 1.0
            sigma[j] = 2.0 * math.sqrt(max(s_bar * (1.0 - s_bar), 0.0) / cfg.t0)
        return b_hat, sigma

    def _scalar_result(self, b, sigma, cost: int) -> BenchResult:
        cfg = self.config
        a_hat, p_hat, failed, means = _scalar_gate_fit(
            list(b), list(sigma), [float(m) for m in cfg.bounces], cfg.t0)
        raw = {m: float(v) for m, v in zip(cfg.bounces, means)}
        return BenchResult(p_hat, a_hat, raw, cost, fit_failed=failed)

    def _single(self, target_p: float | None, channel, cost: int,
                rng: np.random.Generator) -> BenchResult:
        cfg = self.config
        if cfg.mode == "ptm":
            b, sigma = self._ptm_means(channel, rng)
        else:
            probs = cfg.spam_constant * np.power(
                target_p, 2.0 * np.array(cfg.bounces, dtype=float))
            b = rng.binomial(cfg.t0, probs) / cfg.t0
            sigma = np.sqrt(b * (1.0 - b) / cfg.t0)
        return self._scalar_result(b, sigma, cost)

    def link(self, ell: int, rng: np.random.Generator) -> BenchResult:
        """One estimate sample for link ``ell``; costs one resource unit."""
        channel = self._link_channels[ell] if self.config.mode == "ptm" else None
        return self._single(float(self.instance.link_p[ell]), channel, 1, rng)

    def path(self, k: int, rng: np.random.Generator) -> BenchResult:
        """One estimate sample for path ``k``; costs one unit per link."""
        cost = int(self.instance.topology.path_lengths[k])
        channel = self._path_channel(k) if self.config.mode == "ptm" else None
        return self._single(path_depolarizing(self.instance, k), channel, cost, rng)

    def path_batch(self, path_ids: np.ndarray, rng: np.random.Generator):
        """Estimates for a sequence of path targets (one sample each).

        Semantically identical to calling :meth:`path` per entry; surrogate
        draws and fits are vectorized per distinct path.  Returns
        (p_hats, fit_failed, costs) aligned with ``path_ids``.
        """
        path_ids = np.asarray(path_ids, dtype=int)
        n = path_ids.size
        p_hats = np.empty(n)
        failed = np.zeros(n, dtype=bool)
        costs = self.instance.topology.path_lengths[path_ids].astype(int)
        bounces = np.array(self.config.bounces, dtype=float)
        for k in np.unique(path_ids):
            sel = np.flatnonzero(path_ids == k)
            if self.config.mode == "ptm":
                for i in sel:
                    res = self.path(int(k), rng)
                    p_hats[i] = res.p_hat
                    failed[i] = res.fit_failed
            else:
                means, weights = self._surrogate_means(
                    path_depolarizing(self.instance, int(k)), sel.size, rng)
                _, ps, bad = _fit_rows(means, bounces, self.config.t0, weights)
                p_hats[sel] = ps
                failed[sel] = bad
        return p_hats, failed, costs


class ExactBench:
    """Noise-free feedback: returns the true depolarizing parameters.

    Keeps the full bench interface (including per-call costs) so learners and
    baselines can run unchanged in oracle sanity checks.
    """

    def __init__(self, instance: Instance, config: BenchConfig | None = None):
        self.instance = instance
        self.config = config or BenchConfig()

    def _result(self, p: float, cost: int) -> BenchResult:
        raw = {m: p ** (2 * m) for m in self.config.bounces}
        return BenchResult(p, 1.0, raw, cost)

    def link(self, ell: int, rng=None) -> BenchResult:
        return self._result(float(self.instance.link_p[ell]), 1)

    def path(self, k: int, rng=None) -> BenchResult:
        return self._result(path_depolarizing(self.instance, k),
                            int(self.instance.topology.path_lengths[k]))

    def path_batch(self, path_ids, rng=None):
        path_ids = np.asarray(path_ids, dtype=int)
        p_hats = np.array([path_depolarizing(self.instance, int(k)) for k in path_ids])
        costs = self.instance.topology.path_lengths[path_ids].astype(int)
        return p_hats, np.zeros(path_ids.size, dtype=bool), costs
