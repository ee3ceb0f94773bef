"""Controlled drift injection and a seeded synthetic event stream.

Scenarios:

* ``baseline``      -- windows untouched.
* ``covariate``     -- Gaussian noise on selected features, labels untouched.
* ``mixed``         -- feature noise plus symmetric label flips.
* ``concept_prior`` -- positive labels flipped to negative until a target
  prevalence is reached; features untouched.

All transforms are pure functions of ``(window, parameters, seed)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import SCENARIOS, ExperimentSettings
from .events import EventTable, MonitoringWindow

logger = logging.getLogger(__name__)

POSITIVE_TO_NEGATIVE = "positive_to_negative"
SYMMETRIC = "symmetric"

_SCENARIO_CODES = {name: i for i, name in enumerate(SCENARIOS)}


def interpolate_schedule(values: Sequence[float], n_windows: int) -> tuple[float, ...]:
    """Expand a schedule to ``n_windows`` entries.

    One value is repeated, two values are endpoints joined linearly, and a
    list of exactly ``n_windows`` values is used as-is.
    """
    values = [float(v) for v in values]
    if n_windows < 1:
        raise ValueError("n_windows must be >= 1")
    if len(values) == n_windows:
        return tuple(values)
    if len(values) == 1:
        return tuple(values * n_windows)
    if len(values) == 2:
        if n_windows == 1:
            return (values[0],)
        return tuple(float(v) for v in np.linspace(values[0], values[1], n_windows))
    raise ValueError(f"schedule of length {len(values)} does not fit {n_windows} windows")


def _rng(seed, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def inject_covariate(
    window: MonitoringWindow,
    features: Sequence[int],
    sigma_mult: float,
    seed: int,
    reference_std: Sequence[float],
) -> MonitoringWindow:
    """Add ``N(0, (sigma_mult * sigma_f)^2)`` noise to each listed feature.

    ``reference_std`` holds the per-feature standard deviations of the
    unperturbed reference window.
    """
    if sigma_mult < 0:
        raise ValueError("sigma_mult must be >= 0")
    if not len(window) or sigma_mult == 0 or not features:
        return window
    x = window.features.copy()
    ref_std = np.asarray(reference_std, dtype=float)
    cols = list(features)
    if any(not 0 <= j < x.shape[1] for j in cols):
        raise ValueError(f"feature indices {cols} out of range for {x.shape[1]} features")
    if ref_std.size != x.shape[1]:
        raise ValueError("reference_std must have one entry per feature")
    noise = _rng(seed, window.index).standard_normal((x.shape[0], len(cols)))
    x[:, cols] += noise * (sigma_mult * ref_std[cols])
    return window.with_features(x)


def inject_label_flips(
    window: MonitoringWindow,
    rate: float,
    direction: str = POSITIVE_TO_NEGATIVE,
    seed: int = 0,
) -> MonitoringWindow:
    """Flip ``floor(rate * n_pos)`` positives (or ``floor(rate * n)`` labels of
    either class in symmetric mode), chosen uniformly at random."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"flip rate {rate} outside [0, 1]")
    if direction not in (POSITIVE_TO_NEGATIVE, SYMMETRIC):
        raise ValueError(f"unknown flip direction {direction!r}")
    if not len(window) or rate == 0:
        return window
    y = window.labels.copy()
    rng = _rng(seed, window.index, 1)
    pool = np.flatnonzero(y == 1) if direction == POSITIVE_TO_NEGATIVE else np.arange(y.size)
    k = int(np.floor(rate * pool.size))
    chosen = rng.choice(pool, size=k, replace=False) if k else np.empty(0, dtype=int)
    y[chosen] = 1 - y[chosen]
    return window.with_labels(y)


def calibrate_flip_rate(current_prevalence: float, target_prevalence: float) -> float:
    """Positive-to-negative flip rate that brings prevalence to the target."""
    if not 0.0 < current_prevalence <= 1.0:
        raise ValueError("current prevalence must lie in (0, 1]")
    if not 0.0 <= target_prevalence <= current_prevalence:
        raise ValueError(
            f"target prevalence {target_prevalence} must lie in [0, {current_prevalence}]"
        )
    return 1.0 - target_prevalence / current_prevalence


@dataclass(frozen=True)
class ScenarioSpec:
    """Per-window injection plan for one scenario.

    Schedules have one entry per monitoring window (window indices 1..n).
    """

    kind: str
    noise_sigma_schedule: tuple[float, ...] = ()
    noise_features: tuple[int, ...] = ()
    flip_rate_schedule: tuple[float, ...] = ()
    target_prevalence_schedule: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.kind!r}")
        if any(s < 0 for s in self.noise_sigma_schedule):
            raise ValueError("noise sigma multipliers must be >= 0")
        if any(not 0.0 <= r <= 1.0 for r in self.flip_rate_schedule):
            raise ValueError("flip rates must lie in [0, 1]")
        if self.target_prevalence_schedule is not None and any(
            not 0.0 <= p <= 1.0 for p in self.target_prevalence_schedule
        ):
            raise ValueError("target prevalences must lie in [0, 1]")

    @classmethod
    def from_settings(cls, kind: str, settings: ExperimentSettings, n_windows: int) -> "ScenarioSpec":
        zeros = (0.0,) * n_windows
        if kind == "baseline":
            return cls(kind, zeros, (), zeros, None, settings.seed)
        if kind == "covariate":
            return cls(
                kind, interpolate_schedule(settings.covariate_sigma, n_windows),
                tuple(settings.noise_features), zeros, None, settings.seed,
            )
        if kind == "mixed":
            return cls(
                kind, interpolate_schedule(settings.mixed_sigma, n_windows),
                tuple(settings.noise_features),
                interpolate_schedule(settings.mixed_flip_rate, n_windows), None, settings.seed,
            )
        if kind == "concept_prior":
            return cls(
                kind, zeros, (), zeros,
                interpolate_schedule(settings.concept_prior_prevalence, n_windows), settings.seed,
            )
        raise ValueError(f"unknown scenario {kind!r}")

    def apply(self, window: MonitoringWindow, position: int, reference_std: Sequence[float]) -> MonitoringWindow:
        """Perturb ``window``, the ``position``-th monitoring window (0-based)."""
        code = _SCENARIO_CODES[self.kind]
        if self.kind in ("covariate", "mixed"):
            window = inject_covariate(
                window, self.noise_features, self.noise_sigma_schedule[position],
                hash_seed(self.seed, code), reference_std,
            )
        if self.kind == "mixed":
            window = inject_label_flips(
                window, self.flip_rate_schedule[position], SYMMETRIC, hash_seed(self.seed, code)
            )
        if self.kind == "concept_prior":
            target = self.target_prevalence_schedule[position]
            prevalence = float(np.mean(window.labels))
            if prevalence == 0:
                return window
            if target >= prevalence:
                logger.warning(
                    "window %d: target prevalence %.4f >= observed %.4f, no flips applied",
                    window.index, target, prevalence,
                )
                return window
            rate = calibrate_flip_rate(prevalence, target)
            window = inject_label_flips(window, rate, POSITIVE_TO_NEGATIVE, hash_seed(self.seed, code))
        return window


def hash_seed(seed: int, code: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(code)]).generate_state(1)[0])


def generate_synthetic(
    n_events: int,
    n_features: int,
    prevalence: float,
    class_separation: float,
    span_days: float,
    seed: int,
    *,
    n_informative: int | None = None,
    label_delay: tuple[float, float] = (0.0, 60.0),
) -> EventTable:
    """Two-class Gaussian event stream, ordered by time and unscored.

    Negatives are ``N(0, I)``; positives are shifted by ``class_separation``
    on the first ``n_informative`` features (all features if omitted). Event
    times are uniform on ``[0, span_days)`` and each label arrives a uniform
    ``label_delay`` number of days after its event.
    """
    if n_events < 1 or n_features < 1:
        raise ValueError("n_events and n_features must be >= 1")
    if not 0.0 < prevalence < 1.0:
        raise ValueError("prevalence must lie in (0, 1)")
    if not span_days > 0:
        raise ValueError("span_days must be > 0")
    lo, hi = label_delay
    if not 0 <= lo <= hi:
        raise ValueError("label_delay must satisfy 0 <= low <= high")
    k = n_features if n_informative is None else n_informative
    if not 0 <= k <= n_features:
        raise ValueError("n_informative must lie in [0, n_features]")

    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0.0, span_days, n_events))
    y = (rng.random(n_events) < prevalence).astype(int)
    x = rng.standard_normal((n_events, n_features))
    x[y == 1, :k] += class_separation
    arrival = t + rng.uniform(lo, hi, n_events)
    width = len(str(n_events - 1))
    ids = [f"e{i:0{width}d}" for i in range(n_events)]
    return EventTable(ids, t, x, None, y, arrival)
