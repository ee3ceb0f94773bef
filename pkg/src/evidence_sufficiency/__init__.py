"""Evidence sufficiency scoring for model monitoring during label blind periods."""

from .config import Config, ConfigError, default_config, load_config, synthetic_config, validate_config
from .engine import (
    DimensionScores,
    SufficiencyAssessment,
    SufficiencyMonitor,
    assess_window_actual,
    assess_window_proxy,
    composite_sufficiency,
    detect_divergence,
    readiness_gate,
)
from .events import EventTable, MonitoringWindow, PredictionEvent
from .experiment import ExperimentReport, emit_report, monitor_stream, run_experiment
from .ingest import ingest, window_partition
from .injection import ScenarioSpec, generate_synthetic
from .proxies import ProxyReading, ReferenceProfile
from .simulator import SimulationSpec, simulate, simulate_all

__all__ = [
    "Config",
    "ConfigError",
    "DimensionScores",
    "EventTable",
    "ExperimentReport",
    "MonitoringWindow",
    "PredictionEvent",
    "ProxyReading",
    "ReferenceProfile",
    "ScenarioSpec",
    "SimulationSpec",
    "SufficiencyAssessment",
    "SufficiencyMonitor",
    "assess_window_actual",
    "assess_window_proxy",
    "composite_sufficiency",
    "default_config",
    "detect_divergence",
    "emit_report",
    "generate_synthetic",
    "ingest",
    "load_config",
    "monitor_stream",
    "readiness_gate",
    "run_experiment",
    "simulate",
    "simulate_all",
    "synthetic_config",
    "validate_config",
    "window_partition",
]
