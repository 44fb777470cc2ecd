"""Fusing N observation maps: mean thresholding and the maximum-likelihood rule."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, EmptyInput, IncompleteObservation, ParameterError
from .grid import UNKNOWN, FusedMap, ObservationMap

# relative slack for treating a log-likelihood difference as a tie (ties fuse to 1)
_TIE_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class MeanMap:
    counts: np.ndarray
    n: int

    @property
    def values(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def shape(self):
        return self.counts.shape

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[1]


def _stack(observations) -> np.ndarray:
    observations = list(observations)
    if not observations:
        raise EmptyInput("no observation maps given")
    shape = observations[0].shape
    for i, obs in enumerate(observations):
        if obs.shape != shape:
            raise DimensionError(f"observation {i} has shape {obs.shape}, expected {shape}")
        if (obs.cells == UNKNOWN).any():
            raise IncompleteObservation(f"observation {i} still contains unknown cells")
    return np.stack([obs.cells for obs in observations])


def mean_map(observations) -> MeanMap:
    stack = _stack(observations)
    counts = (stack == 1).sum(axis=0).astype(np.int64)
    counts.flags.writeable = False
    return MeanMap(counts, stack.shape[0])


def fuse_threshold(mean: MeanMap, c: float) -> FusedMap:
    """1 where the mean observation is at least ``c``."""
    if not 0.0 < c < 1.0:
        raise ParameterError(f"threshold must lie in (0, 1), got {c}")
    return FusedMap((mean.values >= c).astype(np.int8))


def ml_decision(k, n: int, p: float, q) -> np.ndarray:
    """True where obstacle likelihood p^k (1-p)^(n-k) >= free likelihood q^(n-k) (1-q)^k.

    ``k`` and ``q`` broadcast, so a per-cell q map is accepted.
    """
    k = np.asarray(k, dtype=float)
    q = np.asarray(q, dtype=float)
    if not 0.0 < p < 1.0 or np.any((q <= 0.0) | (q >= 1.0)):
        raise ParameterError(f"p and q must lie in (0, 1), got p={p}, q={q}")
    log_p, log_np = math.log(p), math.log1p(-p)
    log_q, log_nq = np.log(q), np.log1p(-q)
    obstacle = k * log_p + (n - k) * log_np
    free = (n - k) * log_q + k * log_nq
    scale = np.maximum(np.maximum(np.abs(obstacle), np.abs(free)), 1.0)
    return obstacle - free >= -_TIE_RTOL * scale


def fuse_max_likelihood(observations, p: float, q) -> FusedMap:
    """Per-cell likelihood-ratio decision; ``q`` may be a scalar or a per-cell array."""
    mean = mean_map(observations)
    return FusedMap(ml_decision(mean.counts, mean.n, p, q).astype(np.int8))


def ml_count_threshold(p: float, q: float, n: int) -> int:
    """Smallest count k in [0, n+1] the ML rule fuses to 1 (n+1 means never).

    For p + q > 1 the log-likelihood difference increases with k, so the rule
    is exactly "count >= k*".
    """
    if p + q <= 1.0:
        raise ParameterError(f"ML rule is a count threshold only when p+q > 1 (got p={p}, q={q})")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    hits = np.flatnonzero(ml_decision(np.arange(n + 1), n, p, q))
    return int(hits[0]) if hits.size else n + 1


def count_histogram(mean: MeanMap) -> dict[int, int]:
    values, freq = np.unique(mean.counts, return_counts=True)
    return {int(v): int(f) for v, f in zip(values, freq)}
