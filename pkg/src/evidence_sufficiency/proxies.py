"""Label-free proxy monitors for score distribution, feature drift and
uncertainty.

Each monitor compares a current window to the reference window and maps the
raw divergence to a health signal in ``[0, 1]`` with
``max(0, 1 - raw / cap)``. Nothing in this module reads event labels.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .config import (
    FEATURE_DRIFT,
    SCORE_DISTRIBUTION,
    UNCERTAINTY,
    CalibrationSettings,
    Config,
    NormalizationCaps,
    StatsSettings,
)
from .events import MonitoringWindow
from .stats import (
    BinningSpec,
    column_counts,
    mean_confidence,
    mean_entropy,
    psi,
    psi_from_proportions,
    quantile_bins,
    smoothed_proportions,
)

logger = logging.getLogger(__name__)

EXTERNAL = "external"


@dataclass(frozen=True)
class ProxyReading:
    """One proxy category's reading for one window.

    ``raw`` is the divergence (a float, or an ``(entropy, confidence)`` pair
    for uncertainty); it is ``None`` for externally supplied signals.
    """

    category_id: str
    health: float
    window_index: int = -1
    raw: float | tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.health <= 1.0:
            raise ValueError(f"{self.category_id}: health {self.health} outside [0, 1]")


def health_from_divergence(raw: float, cap: float) -> float:
    if raw < 0:
        raise ValueError(f"divergence must be >= 0, got {raw}")
    if not cap > 0:
        raise ValueError(f"cap must be > 0, got {cap}")
    return max(0.0, 1.0 - raw / cap)


def score_distribution_health(
    ref_scores, cur_scores, caps: NormalizationCaps, bins: BinningSpec, window_index: int = -1
) -> ProxyReading:
    raw = psi(ref_scores, cur_scores, bins)
    return ProxyReading(SCORE_DISTRIBUTION, health_from_divergence(raw, caps.psi_cap), window_index, raw)


def feature_psi(
    ref_features: np.ndarray,
    cur_features: np.ndarray,
    bins: Sequence[BinningSpec],
    aggregate: str = "mean",
    *,
    ref_counts: Sequence[np.ndarray] | None = None,
) -> float:
    """Per-feature PSI combined by ``aggregate`` (``"mean"`` or ``"max"``).

    ``ref_counts`` may carry precomputed reference bin counts.
    """
    ref = np.asarray(ref_features, dtype=float)
    cur = np.asarray(cur_features, dtype=float)
    if ref.ndim != 2 or cur.ndim != 2:
        raise ValueError("feature matrices must be 2-D")
    if ref.shape[0] == 0 or cur.shape[0] == 0:
        raise ValueError("feature windows must be nonempty")
    if ref.shape[1] != cur.shape[1] or len(bins) != ref.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: reference {ref.shape[1]}, "
            f"current {cur.shape[1]}, bins {len(bins)}"
        )
    if ref_counts is None:
        ref_counts = column_counts(ref, bins)
    cur_counts = column_counts(cur, bins)
    values = [
        psi_from_proportions(
            smoothed_proportions(rc, b.smoothing_epsilon), smoothed_proportions(cc, b.smoothing_epsilon)
        )
        for rc, cc, b in zip(ref_counts, cur_counts, bins)
    ]
    if aggregate == "mean":
        return float(np.mean(values))
    if aggregate == "max":
        return float(np.max(values))
    raise ValueError(f"unknown feature aggregate {aggregate!r}")


def feature_drift_health(
    ref_features,
    cur_features,
    caps: NormalizationCaps,
    bins: Sequence[BinningSpec],
    aggregate: str = "mean",
    window_index: int = -1,
    *,
    ref_counts: Sequence[np.ndarray] | None = None,
) -> ProxyReading:
    raw = feature_psi(ref_features, cur_features, bins, aggregate, ref_counts=ref_counts)
    return ProxyReading(FEATURE_DRIFT, health_from_divergence(raw, caps.fpsi_cap), window_index, raw)


def uncertainty_divergence(ref_scores, cur_scores) -> tuple[float, float]:
    ent = abs(mean_entropy(cur_scores) - mean_entropy(ref_scores))
    conf = abs(mean_confidence(cur_scores) - mean_confidence(ref_scores))
    return ent, conf


def uncertainty_health(
    ref_scores, cur_scores, caps: NormalizationCaps, window_index: int = -1
) -> ProxyReading:
    """Equal-weight mean of the entropy-shift and confidence-shift healths."""
    ent, conf = uncertainty_divergence(ref_scores, cur_scores)
    health = 0.5 * (health_from_divergence(ent, caps.ent_cap) + health_from_divergence(conf, caps.conf_cap))
    return ProxyReading(UNCERTAINTY, health, window_index, (ent, conf))


def feature_bins(ref_features: np.ndarray, settings: StatsSettings) -> tuple[BinningSpec, ...]:
    ref = np.asarray(ref_features, dtype=float)
    return tuple(
        quantile_bins(ref[:, j], settings.n_bins, settings.smoothing_epsilon) for j in range(ref.shape[1])
    )


def split_by_time(window: MonitoringWindow, count: int) -> list[np.ndarray]:
    """Index arrays of ``count`` equal-duration slices of ``window``."""
    edges = np.linspace(window.start_t, window.end_t, count + 1)
    slot = np.clip(np.searchsorted(edges, window.times, side="right") - 1, 0, count - 1)
    return [np.flatnonzero(slot == k) for k in range(count)]


def calibrate_caps(
    reference_window: MonitoringWindow,
    scores=None,
    sub_window_count: int = 4,
    multiplier: float = 3.0,
    *,
    stats: StatsSettings | None = None,
    min_cap: float = 1e-3,
    min_events: int = 30,
) -> NormalizationCaps:
    """Derive caps from the reference window alone.

    The window is cut into ``sub_window_count`` equal-duration slices. Each
    slice is compared with the rest of the window using the same statistics
    the monitors use, and each cap is ``multiplier`` times the largest value
    seen, floored at ``min_cap``.
    """
    if sub_window_count < 2:
        raise ValueError("sub_window_count must be >= 2")
    if not multiplier > 0:
        raise ValueError("multiplier must be > 0")
    stats = stats or StatsSettings()
    scores = reference_window.scores if scores is None else np.asarray(scores, dtype=float)
    features = reference_window.features
    if len(scores) != len(reference_window):
        raise ValueError("one score per reference event required")

    parts = split_by_time(reference_window, sub_window_count)
    for k, idx in enumerate(parts):
        if idx.size < min_events:
            raise ValueError(
                f"reference sub-window {k} has {idx.size} events, need >= {min_events}"
            )

    score_bins = quantile_bins(scores, stats.n_bins, stats.smoothing_epsilon)
    fbins = feature_bins(features, stats)
    worst = np.zeros(4)
    for idx in parts:
        rest = np.setdiff1d(np.arange(len(scores)), idx, assume_unique=True)
        ent, conf = uncertainty_divergence(scores[rest], scores[idx])
        observed = (
            psi(scores[rest], scores[idx], score_bins),
            feature_psi(features[rest], features[idx], fbins, stats.feature_aggregate),
            ent,
            conf,
        )
        worst = np.maximum(worst, observed)
    caps = np.maximum(multiplier * worst, min_cap)
    logger.debug("calibrated caps %s from %d sub-windows", caps, sub_window_count)
    return NormalizationCaps(*(float(c) for c in caps))


@dataclass(frozen=True, eq=False)
class ReferenceProfile:
    """Everything the monitors need from the reference window."""

    scores: np.ndarray
    features: np.ndarray
    score_bins: BinningSpec
    feature_bins: tuple[BinningSpec, ...]
    caps: NormalizationCaps
    feature_aggregate: str = "mean"

    @classmethod
    def from_window(
        cls,
        window: MonitoringWindow,
        config: Config,
        scores=None,
    ) -> "ReferenceProfile":
        scores = window.scores if scores is None else np.asarray(scores, dtype=float)
        features = window.features
        cal: CalibrationSettings = config.calibration
        if cal.mode == "calibrated":
            caps = calibrate_caps(
                window,
                scores,
                cal.sub_windows,
                cal.multiplier,
                stats=config.stats,
                min_cap=cal.min_cap,
                min_events=cal.min_events,
            )
        else:
            caps = config.caps
        return cls(
            scores=scores,
            features=features,
            score_bins=quantile_bins(scores, config.stats.n_bins, config.stats.smoothing_epsilon),
            feature_bins=feature_bins(features, config.stats),
            caps=caps,
            feature_aggregate=config.stats.feature_aggregate,
        )

    @cached_property
    def feature_counts(self) -> list[np.ndarray]:
        return column_counts(self.features, self.feature_bins)

    def readings(self, window: MonitoringWindow, scores=None) -> list[ProxyReading]:
        """Built-in proxy readings for ``window`` (uses scores and features only)."""
        cur_scores = window.scores if scores is None else np.asarray(scores, dtype=float)
        return [
            score_distribution_health(self.scores, cur_scores, self.caps, self.score_bins, window.index),
            feature_drift_health(
                self.features, window.features, self.caps, self.feature_bins,
                self.feature_aggregate, window.index, ref_counts=self.feature_counts,
            ),
            uncertainty_health(self.scores, cur_scores, self.caps, window.index),
        ]
