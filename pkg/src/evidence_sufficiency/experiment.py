"""End-to-end scenario experiments and report emission.

Protocol: partition the stream into windows, train the scorer on window 0
(unless the stream already carries scores and no scenario perturbs
features), build the reference profile, then for each scenario perturb the
monitoring windows, rescore them and assess each one in proxy mode and, when
labels are complete, in actual mode. Detection compares each drifted run with
the baseline run on the same seed and windowing.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import FEATURE_DRIFT, SCORE_DISTRIBUTION, UNCERTAINTY, Config, validate_config
from .engine import (
    SufficiencyAssessment,
    SufficiencyMonitor,
    assess_window_actual,
    detect_divergence,
)
from .events import EventTable, MonitoringWindow, PredictionEvent
from .ingest import window_partition
from .injection import ScenarioSpec, generate_synthetic
from .proxies import ReferenceProfile
from .scorer import LogisticModel, predict_proba, train_logistic
from .simulator import simulate_all

logger = logging.getLogger(__name__)

FEATURE_SCENARIOS = ("covariate", "mixed")

TABLE_COLUMNS = (
    "window", "day", "fraud_rate", "p_scr", "p_fea", "p_unc", "r_proxy", "p_proxy",
    "a_proxy", "s_proxy", "s_actual", "status_proxy", "status_actual", "detected",
)


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    window: int
    day: float
    fraud_rate: float | None
    completeness: float
    freshness: float
    p_scr: float | None
    p_fea: float | None
    p_unc: float | None
    psi: float | None
    feature_psi: float | None
    entropy_shift: float | None
    confidence_shift: float | None
    r_proxy: float
    p_proxy: float
    a_proxy: float
    s_proxy: float
    status_proxy: str
    monitoring_impaired: bool
    r_actual: float | None = None
    p_actual: float | None = None
    a_actual: float | None = None
    s_actual: float | None = None
    status_actual: str | None = None
    detected: bool | None = None

    @property
    def proxy_actual_gap(self) -> float | None:
        return None if self.s_actual is None else abs(self.s_proxy - self.s_actual)


@dataclass
class ExperimentReport:
    rows: list[ReportRow] = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def scenarios(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            if row.scenario not in seen:
                seen.append(row.scenario)
        return seen

    def rows_for(self, scenario: str) -> list[ReportRow]:
        return [r for r in self.rows if r.scenario == scenario]

    def detection_rate(self, scenario: str) -> float | None:
        flags = [r.detected for r in self.rows_for(scenario) if r.detected is not None]
        return sum(flags) / len(flags) if flags else None

    def machine_rows(self) -> str:
        lines = []
        for row in self.rows:
            obj = asdict(row)
            obj["proxy_actual_gap"] = row.proxy_actual_gap
            lines.append(json.dumps(obj, sort_keys=True))
        return "\n".join(lines) + "\n"


def _reading(assessment: SufficiencyAssessment, category: str):
    for r in assessment.readings:
        if r.category_id == category:
            return r
    return None


def _row(
    scenario: str,
    window: MonitoringWindow,
    proxy: SufficiencyAssessment,
    actual: SufficiencyAssessment | None,
) -> ReportRow:
    scr = _reading(proxy, SCORE_DISTRIBUTION)
    fea = _reading(proxy, FEATURE_DRIFT)
    unc = _reading(proxy, UNCERTAINTY)
    labeled = window.fully_labeled and len(window) > 0
    return ReportRow(
        scenario=scenario,
        window=window.index,
        day=window.start_t,
        fraud_rate=float(np.mean(window.labels)) if labeled else None,
        completeness=proxy.dims.completeness,
        freshness=proxy.dims.freshness,
        p_scr=scr.health if scr else None,
        p_fea=fea.health if fea else None,
        p_unc=unc.health if unc else None,
        psi=scr.raw if scr else None,
        feature_psi=fea.raw if fea else None,
        entropy_shift=unc.raw[0] if unc else None,
        confidence_shift=unc.raw[1] if unc else None,
        r_proxy=proxy.dims.reliability,
        p_proxy=proxy.dims.representativeness,
        a_proxy=proxy.gate,
        s_proxy=proxy.score,
        status_proxy=proxy.status,
        monitoring_impaired=proxy.monitoring_impaired,
        r_actual=actual.dims.reliability if actual else None,
        p_actual=actual.dims.representativeness if actual else None,
        a_actual=actual.gate if actual else None,
        s_actual=actual.score if actual else None,
        status_actual=actual.status if actual else None,
    )


def _score(window: MonitoringWindow, model: LogisticModel | None) -> MonitoringWindow:
    if model is None or not len(window):
        return window
    return window.with_scores(predict_proba(model, window.features))


def synthetic_stream(config: Config) -> EventTable:
    ex = config.experiment
    return generate_synthetic(
        ex.n_events, ex.n_features, ex.prevalence, ex.class_separation, ex.span_days, ex.seed,
        n_informative=ex.n_informative,
        label_delay=(ex.label_delay_min, ex.label_delay_max),
    )


def prepare_windows(
    events: Sequence[PredictionEvent] | EventTable, config: Config, *, span_end: float | None = None,
    need_model: bool = False,
) -> tuple[list[MonitoringWindow], LogisticModel | None]:
    """Partition ``events`` and make sure every window is scored.

    A model is trained on window 0 when any event lacks a score or when
    ``need_model`` is set; it then rescores every window.
    """
    windows = window_partition(events, config.experiment.window_days, span_end=span_end)
    if len(windows) < 2:
        raise ValueError("need a reference window and at least one monitoring window")
    unscored = not all(w.events.scored for w in windows)
    model = None
    if unscored or need_model:
        ref = windows[0]
        sc = config.scorer
        model = train_logistic(ref.features, ref.labels, sc.learning_rate, sc.epochs, sc.l2)
        windows = [_score(w, model) for w in windows]
    return windows, model


def run_experiment(
    config: Config, events: Sequence[PredictionEvent] | EventTable | None = None
) -> ExperimentReport:
    """Run every configured scenario and compare each with the baseline.

    ``events`` defaults to the seeded synthetic stream described by
    ``config.experiment``. The baseline scenario always runs.
    """
    validate_config(config)
    ex = config.experiment
    scenarios = ["baseline"] + [s for s in ex.scenarios if s != "baseline"]
    span_end = None
    if events is None:
        events = synthetic_stream(config)
        span_end = ex.span_days
    need_model = any(s in FEATURE_SCENARIOS for s in scenarios)
    windows, model = prepare_windows(events, config, span_end=span_end, need_model=need_model)
    reference, monitored = windows[0], windows[1:]
    profile = ReferenceProfile.from_window(reference, config)
    ref_std = reference.features.std(axis=0)
    histories = _cumulative(windows)

    report = ExperimentReport()
    baseline_scores: dict[int, float] = {}
    for scenario in scenarios:
        spec = ScenarioSpec.from_settings(scenario, ex, len(monitored))
        monitor = SufficiencyMonitor(profile, config)
        for pos, window in enumerate(monitored):
            history = histories[pos + 1]
            drifted = spec.apply(window, pos, ref_std)
            if drifted is not window and scenario in FEATURE_SCENARIOS:
                drifted = _score(drifted, model)
            as_of = window.end_t + ex.as_of_lag_days
            proxy = monitor.assess(drifted, as_of, history=history)
            actual = None
            if drifted.fully_labeled:
                actual = assess_window_actual(drifted, profile.scores, config, as_of, history=history)
            row = _row(scenario, drifted, proxy, actual)
            if scenario == "baseline":
                baseline_scores[window.index] = row.s_proxy
            else:
                row = _with_detection(row, baseline_scores[window.index], config.assessment.detection_delta)
            report.rows.append(row)

    report.summary = summarize(report, config)
    return report


def _cumulative(windows: Sequence[MonitoringWindow]) -> list[EventTable]:
    """Event times and label arrivals seen up to and including each window."""
    out = []
    for k in range(len(windows)):
        seen = EventTable.concat([w.events for w in windows[: k + 1]])
        # staleness only needs times and arrivals
        out.append(EventTable(seen.event_ids, seen.t, np.empty((len(seen), 0)), None, seen.label, seen.label_arrival_t))
    return out


def _with_detection(row: ReportRow, baseline: float, delta: float) -> ReportRow:
    return replace(row, detected=detect_divergence(row.s_proxy, baseline, delta))


def _first_below(values: Sequence[tuple[int, float | None]], threshold: float) -> int | None:
    for window, s in values:
        if s is not None and s < threshold:
            return window
    return None


def summarize(report: ExperimentReport, config: Config) -> dict:
    threshold = config.status.degraded_min
    out: dict = {"scenarios": {}, "simulator_crossing_days": {}}
    for scenario in report.scenarios():
        rows = report.rows_for(scenario)
        flags = [r.detected for r in rows if r.detected is not None]
        out["scenarios"][scenario] = {
            "windows": len(rows),
            "detected": sum(flags) if flags else None,
            "detection_rate": (sum(flags) / len(flags)) if flags else None,
            "proxy_actual_gap": {str(r.window): r.proxy_actual_gap for r in rows},
            "proxy_crossing_window": _first_below([(r.window, r.s_proxy) for r in rows], threshold),
            "actual_crossing_window": _first_below([(r.window, r.s_actual) for r in rows], threshold),
        }
    for kind, traj in simulate_all(config).items():
        out["simulator_crossing_days"][kind] = traj.crossing_days.get(threshold)
    return out


def monitor_stream(events: Sequence[PredictionEvent] | EventTable, config: Config) -> ExperimentReport:
    """Assess an observed stream window by window without any injection."""
    validate_config(config)
    windows, _ = prepare_windows(events, config)
    reference, monitored = windows[0], windows[1:]
    profile = ReferenceProfile.from_window(reference, config)
    monitor = SufficiencyMonitor(profile, config)
    report = ExperimentReport()
    histories = _cumulative(windows)
    for pos, window in enumerate(monitored):
        history = histories[pos + 1]
        as_of = window.end_t + config.experiment.as_of_lag_days
        if not len(window):
            logger.warning("window %d is empty, skipped", window.index)
            continue
        proxy = monitor.assess(window, as_of, history=history)
        actual = None
        if window.fully_labeled:
            actual = assess_window_actual(window, profile.scores, config, as_of, history=history)
        report.rows.append(_row("observed", window, proxy, actual))
    report.summary = summarize(report, config)
    return report


def _fmt3(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.3f}"
    return str(value)


def scenario_table(report: ExperimentReport, scenario: str) -> str:
    lines = ["\t".join(TABLE_COLUMNS)]
    for row in report.rows_for(scenario):
        lines.append("\t".join(_fmt3(getattr(row, col)) for col in TABLE_COLUMNS))
    return "\n".join(lines) + "\n"


def summary_table(report: ExperimentReport) -> str:
    s = report.summary
    lines = ["scenario\twindows\tdetected\tdetection_rate\tproxy_crossing_window\tactual_crossing_window"]
    for name, info in s.get("scenarios", {}).items():
        lines.append(
            "\t".join(
                _fmt3(v)
                for v in (
                    name, info["windows"], info["detected"], info["detection_rate"],
                    info["proxy_crossing_window"], info["actual_crossing_window"],
                )
            )
        )
    lines.append("")
    lines.append("drift_type\tsimulated_crossing_day")
    for kind, day in s.get("simulator_crossing_days", {}).items():
        lines.append(f"{kind}\t{_fmt3(day)}")
    return "\n".join(lines) + "\n"


def emit_report(
    report: ExperimentReport,
    out_dir: str | Path,
    formats: Sequence[str] = ("table", "jsonl"),
    *,
    overwrite: bool = False,
) -> list[Path]:
    """Write per-scenario tables, a summary, and machine-readable rows.

    ``table`` writes ``scenario_<name>.tsv`` files plus ``summary.tsv``
    (values rounded to 3 decimals); ``jsonl`` writes ``rows.jsonl`` and
    ``summary.json`` at full precision. Existing files are never replaced
    unless ``overwrite`` is set.
    """
    if not report.rows:
        raise ValueError("report is empty, nothing to emit")
    unknown = set(formats) - {"table", "jsonl"}
    if unknown:
        raise ValueError(f"unknown report format(s) {sorted(unknown)}")
    out = Path(out_dir)
    files: dict[Path, str] = {}
    if "table" in formats:
        for scenario in report.scenarios():
            files[out / f"scenario_{scenario}.tsv"] = scenario_table(report, scenario)
        files[out / "summary.tsv"] = summary_table(report)
    if "jsonl" in formats:
        files[out / "rows.jsonl"] = report.machine_rows()
        files[out / "summary.json"] = json.dumps(report.summary, sort_keys=True, indent=2) + "\n"

    existing = [p for p in files if p.exists()]
    if existing and not overwrite:
        raise FileExistsError(f"refusing to overwrite {[str(p) for p in existing]}")
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path, text in files.items():
            path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"writing report to {out}: {exc}") from exc
    return list(files)
