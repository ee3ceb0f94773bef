"""Configuration types, validation and the INI-style config file.

The config file is a flat ``configparser`` document. Every section maps to one
dataclass below and every key to one field; unknown keys are rejected so typos
surface early. Run ``evidence-sufficiency config`` (or see README) for the
full list of keys with their defaults.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

RELIABILITY = "reliability"
REPRESENTATIVENESS = "representativeness"
ESTIMATED_DIMENSIONS = (RELIABILITY, REPRESENTATIVENESS)

SCORE_DISTRIBUTION = "score_distribution"
FEATURE_DRIFT = "feature_drift"
UNCERTAINTY = "uncertainty"
BUILTIN_CATEGORIES = (SCORE_DISTRIBUTION, FEATURE_DRIFT, UNCERTAINTY)

STRONG, MODERATE, WEAK, NONE = 1.0, 0.5, 0.25, 0.0
COVERAGE_LEVELS = (NONE, WEAK, MODERATE, STRONG)

DRIFT_TYPES = ("none", "covariate", "concept_prior", "mixed")
SCENARIOS = ("baseline", "covariate", "mixed", "concept_prior")


class ConfigError(ValueError):
    """Raised when a configuration violates one or more invariants.

    ``problems`` holds one ``(type_name, message)`` pair per violation.
    """

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = list(problems)
        lines = [f"{name}: {msg}" for name, msg in self.problems]
        super().__init__("invalid configuration:\n  " + "\n  ".join(lines))


@dataclass(frozen=True)
class DimensionWeights:
    w_c: float = 0.20
    w_f: float = 0.30
    w_r: float = 0.30
    w_p: float = 0.20

    def problems(self) -> list[str]:
        out = []
        for name in ("w_c", "w_f", "w_r", "w_p"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                out.append(f"{name}={v} outside [0, 1]")
        total = self.w_c + self.w_f + self.w_r + self.w_p
        if abs(total - 1.0) > 1e-9:
            out.append(f"weights sum to {total:.12g}, expected 1")
        return out


@dataclass(frozen=True)
class GateThresholds:
    tau_c: float = 0.6
    tau_r: float = 0.15
    tau_r_proxy: float = 0.55

    def problems(self) -> list[str]:
        return [
            f"{name}={getattr(self, name)} outside (0, 1]"
            for name in ("tau_c", "tau_r", "tau_r_proxy")
            if not 0.0 < getattr(self, name) <= 1.0
        ]


@dataclass(frozen=True)
class NormalizationCaps:
    psi_cap: float = 0.500
    fpsi_cap: float = 1.000
    ent_cap: float = 0.150
    conf_cap: float = 0.414

    def problems(self) -> list[str]:
        return [
            f"{name}={getattr(self, name)} must be > 0"
            for name in ("psi_cap", "fpsi_cap", "ent_cap", "conf_cap")
            if not (getattr(self, name) > 0.0 and math.isfinite(getattr(self, name)))
        ]


@dataclass(frozen=True)
class StatusThresholds:
    sufficient_min: float = 0.8
    degraded_min: float = 0.5

    def problems(self) -> list[str]:
        if not 0.0 < self.degraded_min < self.sufficient_min <= 1.0:
            return [
                f"need 0 < degraded_min ({self.degraded_min}) < "
                f"sufficient_min ({self.sufficient_min}) <= 1"
            ]
        return []


def _default_coverage() -> dict[tuple[str, str], float]:
    # Categories 1-3 of the three-category minimum configuration.
    return {
        (SCORE_DISTRIBUTION, RELIABILITY): WEAK,
        (SCORE_DISTRIBUTION, REPRESENTATIVENESS): STRONG,
        (FEATURE_DRIFT, REPRESENTATIVENESS): STRONG,
        (UNCERTAINTY, RELIABILITY): MODERATE,
    }


@dataclass(frozen=True)
class CoverageMatrix:
    """Proxy category x estimated dimension coverage weights.

    Missing entries mean no coverage (weight 0). Externally supplied proxy
    categories (cross-model disagreement, operational, ...) are added as
    extra rows.
    """

    entries: Mapping[tuple[str, str], float] = field(default_factory=_default_coverage)

    def weight(self, category: str, dimension: str) -> float:
        return self.entries.get((category, dimension), NONE)

    def categories(self) -> list[str]:
        return sorted({cat for cat, _ in self.entries})

    def with_entries(self, overrides: Mapping[tuple[str, str], float]) -> "CoverageMatrix":
        merged = dict(self.entries)
        merged.update(overrides)
        return CoverageMatrix(merged)

    def problems(self) -> list[str]:
        out = []
        for (cat, dim), w in sorted(self.entries.items()):
            if dim not in ESTIMATED_DIMENSIONS:
                out.append(f"{cat}.{dim}: only reliability/representativeness are proxy-estimated")
            if w not in COVERAGE_LEVELS:
                out.append(f"{cat}.{dim}={w} not one of {COVERAGE_LEVELS}")
        return out

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.entries.items())))


@dataclass(frozen=True)
class StatsSettings:
    n_bins: int = 10
    smoothing_epsilon: float = 1e-4
    feature_aggregate: str = "mean"

    def problems(self) -> list[str]:
        out = []
        if self.n_bins < 2:
            out.append(f"n_bins={self.n_bins} must be >= 2")
        if not self.smoothing_epsilon > 0:
            out.append(f"smoothing_epsilon={self.smoothing_epsilon} must be > 0")
        if self.feature_aggregate not in ("mean", "max"):
            out.append(f"feature_aggregate={self.feature_aggregate!r} not in ('mean', 'max')")
        return out


@dataclass(frozen=True)
class CalibrationSettings:
    """How normalization caps are obtained.

    ``mode = fixed`` uses the caps in :class:`NormalizationCaps` as given;
    ``mode = calibrated`` derives them from reference-window sub-windows.
    """

    mode: str = "fixed"
    sub_windows: int = 4
    multiplier: float = 3.0
    min_cap: float = 1e-3
    min_events: int = 30

    def problems(self) -> list[str]:
        out = []
        if self.mode not in ("fixed", "calibrated"):
            out.append(f"mode={self.mode!r} not in ('fixed', 'calibrated')")
        if self.sub_windows < 2:
            out.append(f"sub_windows={self.sub_windows} must be >= 2")
        if not self.multiplier > 0:
            out.append(f"multiplier={self.multiplier} must be > 0")
        if not self.min_cap > 0:
            out.append(f"min_cap={self.min_cap} must be > 0")
        if self.min_events < 1:
            out.append(f"min_events={self.min_events} must be >= 1")
        return out


@dataclass(frozen=True)
class AssessmentSettings:
    freshness_lambda: float = 0.02
    detection_delta: float = 0.05
    f1_threshold: float = 0.5

    def problems(self) -> list[str]:
        out = []
        if not self.freshness_lambda > 0:
            out.append(f"freshness_lambda={self.freshness_lambda} must be > 0")
        if not self.detection_delta > 0:
            out.append(f"detection_delta={self.detection_delta} must be > 0")
        if not 0.0 <= self.f1_threshold <= 1.0:
            out.append(f"f1_threshold={self.f1_threshold} outside [0, 1]")
        return out


@dataclass(frozen=True)
class SimulatorSettings:
    """Blind-period simulator defaults.

    Decay factors are per-day multiplicative rates applied to reliability and
    representativeness for each drift type.
    """

    horizon_days: int = 180
    initial_c: float = 1.0
    initial_r: float = 0.133
    initial_p: float = 1.0
    completeness_slope: float = 0.005
    none_r: float = 1.0
    none_p: float = 1.0
    covariate_r: float = 0.9995
    covariate_p: float = 0.995
    concept_prior_r: float = 0.9915
    concept_prior_p: float = 1.0
    mixed_r: float = 0.996
    mixed_p: float = 0.997

    def decay(self, drift_type: str) -> tuple[float, float]:
        if drift_type not in DRIFT_TYPES:
            raise ValueError(f"unknown drift type {drift_type!r}")
        return getattr(self, f"{drift_type}_r"), getattr(self, f"{drift_type}_p")

    def problems(self) -> list[str]:
        out = []
        if self.horizon_days < 1:
            out.append(f"horizon_days={self.horizon_days} must be >= 1")
        for name in ("initial_c", "initial_r", "initial_p"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                out.append(f"{name}={getattr(self, name)} outside [0, 1]")
        if self.completeness_slope < 0:
            out.append(f"completeness_slope={self.completeness_slope} must be >= 0")
        for kind in DRIFT_TYPES:
            for dim in ("r", "p"):
                v = getattr(self, f"{kind}_{dim}")
                if not 0.0 < v <= 1.0:
                    out.append(f"{kind}_{dim}={v} outside (0, 1]")
        return out


@dataclass(frozen=True)
class ScorerSettings:
    learning_rate: float = 0.5
    epochs: int = 300
    l2: float = 1e-3

    def problems(self) -> list[str]:
        out = []
        if not self.learning_rate > 0:
            out.append(f"learning_rate={self.learning_rate} must be > 0")
        if self.epochs < 1:
            out.append(f"epochs={self.epochs} must be >= 1")
        if self.l2 < 0:
            out.append(f"l2={self.l2} must be >= 0")
        return out


@dataclass(frozen=True)
class ExperimentSettings:
    """Scenario suite and synthetic stream settings.

    Schedules given as two values are endpoints, interpolated linearly across
    the monitoring windows; longer lists are taken verbatim.
    """

    seed: int = 7
    window_days: float = 30.0
    scenarios: tuple[str, ...] = SCENARIOS
    n_events: int = 600_000
    n_features: int = 52
    n_informative: int = 3
    prevalence: float = 0.035
    class_separation: float = 1.0
    span_days: float = 180.0
    label_delay_min: float = 0.0
    label_delay_max: float = 20.0
    noise_features: tuple[int, ...] = (0, 1, 2)
    covariate_sigma: tuple[float, ...] = (0.3, 2.0)
    mixed_sigma: tuple[float, ...] = (0.2, 1.5)
    mixed_flip_rate: tuple[float, ...] = (0.03, 0.30)
    concept_prior_prevalence: tuple[float, ...] = (0.036, 0.030, 0.020, 0.009, 0.002)
    as_of_lag_days: float = 0.0

    def problems(self) -> list[str]:
        out = []
        if not self.window_days > 0:
            out.append(f"window_days={self.window_days} must be > 0")
        bad = [s for s in self.scenarios if s not in SCENARIOS]
        if bad:
            out.append(f"unknown scenarios {bad}")
        if self.n_events < 1 or self.n_features < 1:
            out.append("n_events and n_features must be >= 1")
        if not 0 <= self.n_informative <= self.n_features:
            out.append(f"n_informative={self.n_informative} outside [0, n_features]")
        if not 0.0 < self.prevalence < 1.0:
            out.append(f"prevalence={self.prevalence} outside (0, 1)")
        if not self.span_days > 0:
            out.append(f"span_days={self.span_days} must be > 0")
        if not 0 <= self.label_delay_min <= self.label_delay_max:
            out.append("need 0 <= label_delay_min <= label_delay_max")
        if any(i < 0 or i >= self.n_features for i in self.noise_features):
            out.append(f"noise_features {self.noise_features} out of range")
        for name in ("covariate_sigma", "mixed_sigma"):
            if any(s < 0 for s in getattr(self, name)):
                out.append(f"{name} entries must be >= 0")
        for name in ("mixed_flip_rate", "concept_prior_prevalence"):
            if any(not 0.0 <= r <= 1.0 for r in getattr(self, name)):
                out.append(f"{name} entries must lie in [0, 1]")
        if self.as_of_lag_days < 0:
            out.append(f"as_of_lag_days={self.as_of_lag_days} must be >= 0")
        return out


@dataclass(frozen=True)
class Config:
    weights: DimensionWeights = field(default_factory=DimensionWeights)
    gate: GateThresholds = field(default_factory=GateThresholds)
    caps: NormalizationCaps = field(default_factory=NormalizationCaps)
    status: StatusThresholds = field(default_factory=StatusThresholds)
    coverage: CoverageMatrix = field(default_factory=CoverageMatrix)
    stats: StatsSettings = field(default_factory=StatsSettings)
    calibration: CalibrationSettings = field(default_factory=CalibrationSettings)
    assessment: AssessmentSettings = field(default_factory=AssessmentSettings)
    simulator: SimulatorSettings = field(default_factory=SimulatorSettings)
    scorer: ScorerSettings = field(default_factory=ScorerSettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def replace(self, **sections: Any) -> "Config":
        return dataclasses.replace(self, **sections)


# section name in the file -> Config attribute
_SECTIONS = {
    "weights": "weights",
    "gate": "gate",
    "caps": "caps",
    "status": "status",
    "stats": "stats",
    "calibration": "calibration",
    "assessment": "assessment",
    "simulator": "simulator",
    "scorer": "scorer",
    "experiment": "experiment",
}

_TYPE_NAMES = {
    "weights": "DimensionWeights",
    "gate": "GateThresholds",
    "caps": "NormalizationCaps",
    "status": "StatusThresholds",
    "coverage": "CoverageMatrix",
    "stats": "StatsSettings",
    "calibration": "CalibrationSettings",
    "assessment": "AssessmentSettings",
    "simulator": "SimulatorSettings",
    "scorer": "ScorerSettings",
    "experiment": "ExperimentSettings",
}


def validate_config(config: Config) -> Config:
    """Check every invariant and return ``config`` unchanged if all hold.

    Raises :class:`ConfigError` naming the offending type for each violation.
    """
    problems: list[tuple[str, str]] = []
    for attr, type_name in _TYPE_NAMES.items():
        for msg in getattr(config, attr).problems():
            problems.append((type_name, msg))
    if problems:
        raise ConfigError(problems)
    return config


def default_config() -> Config:
    return Config()


def synthetic_config() -> Config:
    """Defaults with caps calibrated from reference sub-windows.

    The fixed caps suit production fraud data; synthetic streams have much
    smaller raw divergences, so their caps are learned from window 0.
    """
    return Config().replace(calibration=CalibrationSettings(mode="calibrated"))


PRESETS = {"default": default_config, "synthetic": synthetic_config}


def _format(value: Any) -> str:
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(raw: str, template: Any, key: str) -> Any:
    if isinstance(template, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        return float(raw)
    if isinstance(template, tuple):
        items = [s.strip() for s in raw.split(",") if s.strip()]
        if template and isinstance(template[0], int):
            return tuple(int(s) for s in items)
        if template and isinstance(template[0], float):
            return tuple(float(s) for s in items)
        return tuple(items)
    return raw.strip()


def dumps_config(config: Config) -> str:
    parser = configparser.ConfigParser()
    for section, attr in _SECTIONS.items():
        obj = getattr(config, attr)
        parser[section] = {f.name: _format(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    parser["coverage"] = {
        f"{cat}.{dim}": _format(w) for (cat, dim), w in sorted(config.coverage.entries.items())
    }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def loads_config(text: str, base: Config | None = None) -> Config:
    """Parse a config document, overriding ``base`` (defaults if omitted).

    Coverage keys are ``<category>.<dimension> = <weight>``; they override or
    extend the default matrix. The result is validated.
    """
    base = base or Config()
    parser = configparser.ConfigParser()
    parser.read_string(text)
    problems: list[tuple[str, str]] = []
    updates: dict[str, Any] = {}
    for section in parser.sections():
        if section == "coverage":
            entries = {}
            for key, raw in parser[section].items():
                cat, sep, dim = key.partition(".")
                if not sep:
                    problems.append(("CoverageMatrix", f"key {key!r} must be category.dimension"))
                    continue
                try:
                    entries[(cat, dim)] = float(raw)
                except ValueError:
                    problems.append(("CoverageMatrix", f"{key}={raw!r} is not a number"))
            updates["coverage"] = base.coverage.with_entries(entries)
            continue
        attr = _SECTIONS.get(section)
        if attr is None:
            problems.append(("Config", f"unknown section [{section}]"))
            continue
        obj = getattr(base, attr)
        known = {f.name for f in dataclasses.fields(obj)}
        changes = {}
        for key, raw in parser[section].items():
            if key not in known:
                problems.append((_TYPE_NAMES[attr], f"unknown key {key!r}"))
                continue
            try:
                changes[key] = _parse(raw, getattr(obj, key), key)
            except ValueError:
                problems.append((_TYPE_NAMES[attr], f"{key}={raw!r} cannot be parsed"))
        updates[attr] = dataclasses.replace(obj, **changes)
    if problems:
        raise ConfigError(problems)
    return validate_config(dataclasses.replace(base, **updates))


def load_config(path: str | Path | None, base: Config | None = None) -> Config:
    """Read an INI file over ``base`` (the defaults if omitted)."""
    if path is None:
        return validate_config(base or Config())
    return loads_config(Path(path).read_text(encoding="utf-8"), base)
