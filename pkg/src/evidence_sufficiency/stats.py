"""Distribution-shift statistics: quantile binning, PSI, two-sample KS,
mean binary entropy and mean confidence.

Conventions
-----------
* Quantiles use linear interpolation between order statistics (numpy's
  default ``"linear"`` method, Hyndman & Fan type 7).
* A value ``x`` falls in bin ``k`` where ``k`` is the number of edges
  ``<= x``; bins are ``(-inf, e1), [e1, e2), ..., [e_last, +inf)``.
* Entropy is in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import xlogy

DEFAULT_EPSILON = 1e-4


@dataclass(frozen=True)
class BinningSpec:
    edges: tuple[float, ...]
    smoothing_epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise ValueError("bin edges must be strictly increasing")
        if not self.smoothing_epsilon > 0:
            raise ValueError("smoothing_epsilon must be > 0")

    @property
    def n_bins(self) -> int:
        return len(self.edges) + 1

    def counts(self, sample: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(np.asarray(self.edges, dtype=float), sample, side="right")
        return np.bincount(idx, minlength=self.n_bins)


def column_counts(matrix: np.ndarray, bins: Sequence[BinningSpec]) -> list[np.ndarray]:
    """Per-column bin counts of a 2-D sample, equal to ``bins[j].counts(matrix[:, j])``."""
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or len(bins) != x.shape[1]:
        raise ValueError(f"{len(bins)} binnings for a sample of shape {x.shape}")
    columns = np.ascontiguousarray(x.T)
    return [b.counts(col) for b, col in zip(bins, columns)]


def _sample(values, name: str = "sample") -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    return arr


def quantile_bins(reference, n_bins: int = 10, smoothing_epsilon: float = DEFAULT_EPSILON) -> BinningSpec:
    """Edges at the reference quantiles ``k / n_bins``, ``k = 1..n_bins-1``.

    Tied quantiles collapse into one edge, and edges at or below the
    reference minimum (which would leave the lowest bin empty) are dropped,
    so heavily tied references yield fewer bins and a constant reference
    yields a single bin.
    """
    ref = _sample(reference, "reference")
    if n_bins < 2:
        raise ValueError("n_bins must be >= 2")
    qs = np.quantile(ref, np.arange(1, n_bins) / n_bins)
    edges = np.unique(qs)
    edges = edges[edges > ref.min()]
    return BinningSpec(tuple(float(e) for e in edges), smoothing_epsilon)


def smoothed_proportions(counts: np.ndarray, epsilon: float) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    return (counts + epsilon) / (counts.sum() + epsilon * counts.size)


def psi_from_proportions(p: np.ndarray, q: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(max(0.0, np.sum((q - p) * np.log(q / p))))


def psi(reference, current, bins: BinningSpec) -> float:
    """Population Stability Index of ``current`` against ``reference``.

    Bin proportions are additively smoothed, ``(count + eps) / (N + eps * B)``,
    so empty bins give a finite result.
    """
    ref = _sample(reference, "reference")
    cur = _sample(current, "current")
    eps = bins.smoothing_epsilon
    p = smoothed_proportions(bins.counts(ref), eps)
    q = smoothed_proportions(bins.counts(cur), eps)
    return psi_from_proportions(p, q)


def ks_statistic(reference, current) -> float:
    """Exact two-sample Kolmogorov-Smirnov statistic ``sup |F_ref - F_cur|``.

    Both ECDFs are evaluated at every point of the merged support, where the
    supremum of two right-continuous step functions is attained.
    """
    a = np.sort(_sample(reference, "reference"))
    b = np.sort(_sample(current, "current"))
    support = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, support, side="right") / a.size
    cdf_b = np.searchsorted(b, support, side="right") / b.size
    return float(np.max(np.abs(cdf_a - cdf_b)))


def _probabilities(scores) -> np.ndarray:
    p = _sample(scores, "scores")
    if np.any(~np.isfinite(p)) or np.any((p < 0.0) | (p > 1.0)):
        raise ValueError("scores must lie in [0, 1]")
    return p


def binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    # xlogy(0, 0) = 0: the continuous extension at p in {0, 1}.
    return -(xlogy(p, p) + xlogy(1.0 - p, 1.0 - p))


def mean_entropy(scores) -> float:
    return float(np.mean(binary_entropy(_probabilities(scores))))


def mean_confidence(scores) -> float:
    p = _probabilities(scores)
    return float(np.mean(np.maximum(p, 1.0 - p)))
