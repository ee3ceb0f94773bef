"""Evidence sufficiency scoring.

Completeness and freshness come straight from label metadata. Reliability
and representativeness come either from proxy health signals combined through
the coverage matrix (proxy mode) or from matured labels (actual mode). The
composite is

    S = A * (w_c*C + w_f*F + w_r*R + w_p*P),
    A = min(1, C/tau_c) * min(1, R/tau_r).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .config import (
    ESTIMATED_DIMENSIONS,
    REPRESENTATIVENESS,
    RELIABILITY,
    Config,
    CoverageMatrix,
    DimensionWeights,
    StatusThresholds,
)
from .events import EventTable, MonitoringWindow, PredictionEvent
from .proxies import ProxyReading, ReferenceProfile
from .scorer import f1_score
from .stats import ks_statistic

logger = logging.getLogger(__name__)

SUFFICIENT = "sufficient"
DEGRADED = "degraded"
INSUFFICIENT = "insufficient"


class NoConfirmedLabels(ValueError):
    """No label has arrived yet, so label staleness is undefined."""


@dataclass(frozen=True)
class DimensionScores:
    completeness: float
    freshness: float
    reliability: float
    representativeness: float
    impaired: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        for name in ("completeness", "freshness", "reliability", "representativeness"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        extra = set(self.impaired) - set(ESTIMATED_DIMENSIONS)
        if extra:
            raise ValueError(f"only estimated dimensions can be impaired, got {sorted(extra)}")
        object.__setattr__(self, "impaired", frozenset(self.impaired))


@dataclass(frozen=True)
class SufficiencyAssessment:
    window_index: int
    dims: DimensionScores
    gate: float
    score: float
    status: str
    monitoring_impaired: bool
    mode: str = "proxy"
    readings: tuple[ProxyReading, ...] = ()
    warnings: tuple[str, ...] = ()


def completeness(window: MonitoringWindow, as_of_t: float) -> float:
    """Fraction of the window's events whose label has arrived by ``as_of_t``."""
    if not len(window):
        raise ValueError(f"window {window.index} is empty")
    return float(np.count_nonzero(window.arrivals <= as_of_t)) / len(window)


def freshness(delta_t: float, lam: float) -> float:
    if delta_t < 0 or lam < 0:
        raise ValueError("delta_t and lambda must be >= 0")
    return math.exp(-lam * delta_t)


def label_staleness(
    events: MonitoringWindow | EventTable | Iterable[PredictionEvent], as_of_t: float
) -> float:
    """Days between ``as_of_t`` and the median event time of the latest label batch.

    The batch is every label confirmed by ``as_of_t`` whose arrival falls on
    the same (integer) day as the most recent arrival.
    """
    table = events.events if isinstance(events, MonitoringWindow) else EventTable.from_events(events)
    arrival = table.label_arrival_t
    confirmed = arrival <= as_of_t
    if not np.any(confirmed):
        raise NoConfirmedLabels(f"no labels confirmed by t={as_of_t}")
    days = np.floor(arrival[confirmed])
    cohort = table.t[confirmed][days == days.max()]
    return max(0.0, as_of_t - float(np.median(cohort)))


def aggregate_dimension(
    signals: Sequence[tuple[float, float]], last_valid: float | None = None
) -> tuple[float, bool]:
    """Coverage-weighted mean of ``(health, weight)`` pairs.

    Returns ``(value, impaired)``. When no signal carries weight the last
    valid value is carried forward (0 if there is none) and ``impaired`` is
    true.
    """
    num = 0.0
    den = 0.0
    for health, weight in signals:
        if not 0.0 <= health <= 1.0:
            raise ValueError(f"health {health} outside [0, 1]")
        if weight < 0:
            raise ValueError(f"coverage weight {weight} is negative")
        num += weight * health
        den += weight
    if den > 0:
        return min(1.0, max(0.0, num / den)), False
    return (0.0 if last_valid is None else last_valid), True


def readiness_gate(c: float, r: float, tau_c: float, tau_r: float) -> float:
    if not (tau_c > 0 and tau_r > 0):
        raise ValueError("gate thresholds must be > 0")
    return min(1.0, c / tau_c) * min(1.0, r / tau_r)


def classify_status(score: float, thresholds: StatusThresholds = StatusThresholds()) -> str:
    if score >= thresholds.sufficient_min:
        return SUFFICIENT
    if score >= thresholds.degraded_min:
        return DEGRADED
    return INSUFFICIENT


def weighted_sum(dims: DimensionScores, weights: DimensionWeights) -> float:
    return (
        weights.w_c * dims.completeness
        + weights.w_f * dims.freshness
        + weights.w_r * dims.reliability
        + weights.w_p * dims.representativeness
    )


def composite_sufficiency(
    dims: DimensionScores,
    gate: float,
    weights: DimensionWeights = DimensionWeights(),
    thresholds: StatusThresholds = StatusThresholds(),
    *,
    window_index: int = -1,
    mode: str = "proxy",
    readings: Sequence[ProxyReading] = (),
    warnings: Sequence[str] = (),
) -> SufficiencyAssessment:
    if not 0.0 <= gate <= 1.0:
        raise ValueError(f"gate {gate} outside [0, 1]")
    score = gate * weighted_sum(dims, weights)
    return SufficiencyAssessment(
        window_index=window_index,
        dims=dims,
        gate=gate,
        score=score,
        status=classify_status(score, thresholds),
        monitoring_impaired=bool(dims.impaired),
        mode=mode,
        readings=tuple(readings),
        warnings=tuple(warnings),
    )


def observed_metadata(
    window: MonitoringWindow,
    as_of_t: float,
    lam: float,
    history: EventTable | Iterable[PredictionEvent] | None = None,
) -> tuple[float, float, list[str]]:
    """Completeness and freshness of ``window`` as of ``as_of_t``.

    Staleness is measured over ``history`` (all events seen so far), which
    defaults to the window itself. With no confirmed labels anywhere the
    freshness is 0 and a warning is returned.
    """
    c = completeness(window, as_of_t)
    warnings = []
    try:
        f = freshness(label_staleness(window.events if history is None else history, as_of_t), lam)
    except NoConfirmedLabels:
        logger.warning("window %d: no confirmed labels by t=%s, freshness set to 0", window.index, as_of_t)
        warnings.append("no_confirmed_labels")
        f = 0.0
    return c, f, warnings


def estimate_dimensions(
    readings: Sequence[ProxyReading],
    coverage: CoverageMatrix,
    last_valid: Mapping[str, float] | None = None,
) -> dict[str, tuple[float, bool]]:
    last_valid = last_valid or {}
    out = {}
    for dim in ESTIMATED_DIMENSIONS:
        signals = [
            (r.health, coverage.weight(r.category_id, dim))
            for r in readings
            if coverage.weight(r.category_id, dim) > 0
        ]
        out[dim] = aggregate_dimension(signals, last_valid.get(dim))
    return out


def assess_window_proxy(
    window: MonitoringWindow,
    reference: ReferenceProfile,
    config: Config,
    as_of_t: float,
    external_signals: Iterable[tuple[str, float]] | None = None,
    *,
    history: EventTable | Iterable[PredictionEvent] | None = None,
    last_valid: Mapping[str, float] | None = None,
    exclude: Iterable[str] = (),
) -> SufficiencyAssessment:
    """Label-free assessment of one window.

    ``external_signals`` are ``(category_id, health)`` pairs for proxy
    categories computed outside this package; they are weighted by the
    coverage matrix like the built-in monitors. Categories listed in
    ``exclude`` are treated as unavailable.
    """
    if reference is None:
        raise ValueError("reference profile is not calibrated")
    if not len(window):
        raise ValueError(f"window {window.index} is empty")
    excluded = set(exclude)
    readings = [r for r in reference.readings(window) if r.category_id not in excluded]
    for category, health in external_signals or ():
        if category not in excluded:
            readings.append(ProxyReading(category, float(health), window.index))

    c, f, warnings = observed_metadata(window, as_of_t, config.assessment.freshness_lambda, history)
    est = estimate_dimensions(readings, config.coverage, last_valid)
    (r, r_imp), (p, p_imp) = est[RELIABILITY], est[REPRESENTATIVENESS]
    impaired = {dim for dim, flag in ((RELIABILITY, r_imp), (REPRESENTATIVENESS, p_imp)) if flag}
    dims = DimensionScores(c, f, r, p, frozenset(impaired))
    gate = readiness_gate(c, r, config.gate.tau_c, config.gate.tau_r_proxy)
    return composite_sufficiency(
        dims, gate, config.weights, config.status,
        window_index=window.index, mode="proxy", readings=readings, warnings=warnings,
    )


def assess_window_actual(
    window: MonitoringWindow,
    reference_scores,
    config: Config,
    as_of_t: float,
    *,
    history: EventTable | Iterable[PredictionEvent] | None = None,
) -> SufficiencyAssessment:
    """Assessment from matured labels: R is F1, P is ``1 - KS`` on scores."""
    if not len(window):
        raise ValueError(f"window {window.index} is empty")
    if not window.fully_labeled:
        raise ValueError(f"window {window.index} has unlabeled events")
    scores = window.scores
    r = f1_score(window.labels, scores, config.assessment.f1_threshold)
    p = 1.0 - ks_statistic(reference_scores, scores)
    c, f, warnings = observed_metadata(window, as_of_t, config.assessment.freshness_lambda, history)
    dims = DimensionScores(c, f, r, p)
    gate = readiness_gate(c, r, config.gate.tau_c, config.gate.tau_r)
    return composite_sufficiency(
        dims, gate, config.weights, config.status,
        window_index=window.index, mode="actual", warnings=warnings,
    )


def detect_divergence(s_proxy_drift: float, s_proxy_baseline: float, delta: float = 0.05) -> bool:
    """True when the drifted score sits strictly more than ``delta`` below baseline."""
    if not delta > 0:
        raise ValueError("delta must be > 0")
    return s_proxy_drift < s_proxy_baseline - delta


@dataclass
class SufficiencyMonitor:
    """Per-stream proxy assessor that remembers the last valid R and P.

    Not thread-safe: one writer per stream.
    """

    reference: ReferenceProfile
    config: Config
    last_valid: dict[str, float] = field(default_factory=dict)

    def assess(
        self,
        window: MonitoringWindow,
        as_of_t: float,
        external_signals: Iterable[tuple[str, float]] | None = None,
        *,
        history: EventTable | Iterable[PredictionEvent] | None = None,
        exclude: Iterable[str] = (),
    ) -> SufficiencyAssessment:
        result = assess_window_proxy(
            window, self.reference, self.config, as_of_t, external_signals,
            history=history, last_valid=self.last_valid, exclude=exclude,
        )
        if RELIABILITY not in result.dims.impaired:
            self.last_valid[RELIABILITY] = result.dims.reliability
        if REPRESENTATIVENESS not in result.dims.impaired:
            self.last_valid[REPRESENTATIVENESS] = result.dims.representativeness
        return result
