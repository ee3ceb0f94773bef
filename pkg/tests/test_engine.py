import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_window
from evidence_sufficiency.config import (
    FEATURE_DRIFT,
    RELIABILITY,
    REPRESENTATIVENESS,
    SCORE_DISTRIBUTION,
    UNCERTAINTY,
    Config,
    CoverageMatrix,
    DimensionWeights,
    StatusThresholds,
)
from evidence_sufficiency.engine import (
    DEGRADED,
    INSUFFICIENT,
    SUFFICIENT,
    DimensionScores,
    NoConfirmedLabels,
    SufficiencyMonitor,
    aggregate_dimension,
    assess_window_actual,
    assess_window_proxy,
    classify_status,
    completeness,
    composite_sufficiency,
    detect_divergence,
    estimate_dimensions,
    freshness,
    label_staleness,
    observed_metadata,
    readiness_gate,
    weighted_sum,
)
from evidence_sufficiency.events import EventTable, MonitoringWindow, PredictionEvent
from evidence_sufficiency.proxies import ProxyReading, ReferenceProfile
from evidence_sufficiency.scorer import f1_score
from evidence_sufficiency.stats import ks_statistic
from fraud_vectors import ACTUAL_ROWS, PROXY_ROWS, WINDOW_C, WINDOW_F

unit = st.floats(0.0, 1.0)


def proxy_readings(p_scr, p_fea, p_unc):
    return [
        ProxyReading(SCORE_DISTRIBUTION, p_scr),
        ProxyReading(FEATURE_DRIFT, p_fea),
        ProxyReading(UNCERTAINTY, p_unc),
    ]


def window_with_arrivals(arrivals, times=None, index=0, start=0.0, end=30.0):
    n = len(arrivals)
    times = np.linspace(start, end, n, endpoint=False) if times is None else np.asarray(times, float)
    arr = np.array([np.nan if a is None else a for a in arrivals], dtype=float)
    labels = np.where(np.isnan(arr), -1, 0)
    table = EventTable([f"e{i}" for i in range(n)], times, np.zeros((n, 1)), np.full(n, 0.5), labels, arr)
    return MonitoringWindow(index, start, end, table)


class TestCompleteness:
    def test_all_and_none(self):
        assert completeness(window_with_arrivals([1.0, 2.0, 3.0], times=[0.0, 1.0, 2.0]), 30.0) == 1.0
        assert completeness(window_with_arrivals([None, None]), 30.0) == 0.0

    def test_eighty_eight_of_hundred(self):
        arrivals = [29.0] * 88 + [40.0] * 12
        assert completeness(window_with_arrivals(arrivals), 30.0) == pytest.approx(0.88)

    def test_empty_window_rejected(self):
        with pytest.raises(ValueError):
            completeness(MonitoringWindow(0, 0.0, 30.0, []), 30.0)


class TestFreshness:
    def test_zero_staleness(self):
        assert freshness(0.0, 0.02) == 1.0

    @pytest.mark.parametrize(
        "days, expected", [(30, 0.5488), (60, 0.3012), (90, 0.1653), (120, 0.0907), (150, 0.0498)]
    )
    def test_decay_values(self, days, expected):
        assert freshness(days, 0.02) == pytest.approx(expected, abs=1e-4)
        assert freshness(days, 0.02) == pytest.approx(WINDOW_F[days // 30], abs=1e-3)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            freshness(-1.0, 0.02)
        with pytest.raises(ValueError):
            freshness(1.0, -0.02)


class TestStaleness:
    def test_same_day_labels(self):
        w = window_with_arrivals([10.0, 10.0], times=[10.0, 10.0])
        assert label_staleness(w, 10.0) == 0.0

    def test_reference_labels_thirty_days_on(self):
        events = [PredictionEvent(f"e{i}", 0.0, (0.0,), 0.5, 0, 0.0) for i in range(5)]
        assert label_staleness(events, 30.0) == 30.0

    def test_two_cohorts_uses_latest(self):
        times = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        arrivals = [10.2, 10.7, 10.9, 20.1, 20.5, 20.8]
        w = window_with_arrivals(arrivals, times=times)
        assert label_staleness(w, 25.0) == pytest.approx(25.0 - 5.0)

    def test_unarrived_labels_ignored(self):
        w = window_with_arrivals([10.0, 40.0], times=[2.0, 8.0])
        assert label_staleness(w, 25.0) == pytest.approx(23.0)

    def test_no_labels_raises(self):
        with pytest.raises(NoConfirmedLabels):
            label_staleness(window_with_arrivals([None, 50.0]), 25.0)

    def test_no_labels_fallback_warns(self):
        c, f, warnings = observed_metadata(window_with_arrivals([None, None]), 30.0, 0.02)
        assert (c, f) == (0.0, 0.0)
        assert warnings == ["no_confirmed_labels"]


class TestAggregation:
    def test_reliability_example(self):
        value, impaired = aggregate_dimension([(0.854, 0.25), (0.722, 0.5)])
        assert value == pytest.approx(0.766, abs=5e-4)
        assert not impaired

    def test_representativeness_example(self):
        value, _ = aggregate_dimension([(0.854, 1.0), (0.952, 1.0)])
        assert value == pytest.approx(0.903, abs=5e-4)

    def test_carry_forward(self):
        assert aggregate_dimension([], last_valid=0.7) == (0.7, True)
        assert aggregate_dimension([(0.4, 0.0)], last_valid=0.7) == (0.7, True)

    def test_no_history_is_zero_and_impaired(self):
        assert aggregate_dimension([]) == (0.0, True)

    def test_invalid_health(self):
        with pytest.raises(ValueError):
            aggregate_dimension([(1.2, 1.0)])

    @given(st.lists(st.tuples(unit, st.sampled_from([0.25, 0.5, 1.0])), min_size=1, max_size=8))
    def test_bounded_by_inputs(self, signals):
        value, impaired = aggregate_dimension(signals)
        healths = [h for h, _ in signals]
        assert not impaired
        assert min(healths) - 1e-12 <= value <= max(healths) + 1e-12


class TestGate:
    def test_partial_completeness(self):
        assert readiness_gate(0.52, 0.165, 0.6, 0.15) == pytest.approx(0.8667, abs=1e-4)

    def test_both_components_below(self):
        a = readiness_gate(0.40, 0.142, 0.6, 0.15)
        assert a == pytest.approx(0.6311, abs=1e-4)
        assert a == pytest.approx(0.633, abs=2e-3)

    def test_open_gate(self):
        assert readiness_gate(0.9, 0.2, 0.6, 0.15) == 1.0

    def test_proxy_gate(self):
        assert readiness_gate(0.400, 0.368, 0.6, 0.55) == pytest.approx(0.446, abs=5e-3)

    def test_half_thresholds_compound(self):
        assert readiness_gate(0.3, 0.075, 0.6, 0.15) == 0.25

    def test_invalid_thresholds(self):
        with pytest.raises(ValueError):
            readiness_gate(0.5, 0.5, 0.0, 0.15)

    @given(unit, unit, unit, unit)
    def test_gate_suppresses_below_thresholds(self, c, f, r, p):
        dims = DimensionScores(c, f, r, p)
        gate = readiness_gate(c, r, 0.6, 0.15)
        raw = weighted_sum(dims, DimensionWeights())
        s = composite_sufficiency(dims, gate).score
        assert 0.0 <= gate <= 1.0
        if (c < 0.6 or r < 0.15) and raw > 0:
            assert s < raw
        else:
            assert s <= raw + 1e-12


class TestComposite:
    def test_actual_window_one(self):
        dims = DimensionScores(0.880, 0.549, 0.178, 0.650)
        a = composite_sufficiency(dims, readiness_gate(0.88, 0.178, 0.6, 0.15))
        assert a.score == pytest.approx(0.524, abs=5e-3)
        assert a.status == DEGRADED

    def test_proxy_window_one(self):
        a = composite_sufficiency(DimensionScores(0.880, 0.549, 0.766, 0.903), 1.0)
        assert a.score == pytest.approx(0.751, abs=5e-3)

    def test_covariate_window_five(self):
        a = composite_sufficiency(DimensionScores(0.400, 0.050, 0.123, 0.447), 0.548)
        assert a.score == pytest.approx(0.121, abs=5e-3)
        assert a.status == INSUFFICIENT

    def test_invalid_gate(self):
        with pytest.raises(ValueError):
            composite_sufficiency(DimensionScores(1, 1, 1, 1), 1.2)

    @pytest.mark.parametrize("row", ACTUAL_ROWS, ids=lambda r: f"{r[0]}-{r[1]}")
    def test_actual_rows_recompute(self, row):
        _, _, _, c, f, r, p, a, s, status = row
        gate = readiness_gate(c, r, 0.6, 0.15)
        assert gate == pytest.approx(a, abs=5e-3)
        result = composite_sufficiency(DimensionScores(c, f, r, p), gate)
        assert result.score == pytest.approx(s, abs=5e-3)
        assert result.status == status

    @pytest.mark.parametrize("row", PROXY_ROWS, ids=lambda r: f"{r[0]}-{r[1]}")
    def test_proxy_rows_recompute(self, row):
        _, win, p_scr, p_fea, p_unc, r_proxy, p_proxy, a_proxy, s_proxy = row
        est = estimate_dimensions(proxy_readings(p_scr, p_fea, p_unc), CoverageMatrix())
        assert est[RELIABILITY][0] == pytest.approx(r_proxy, abs=5e-3)
        assert est[REPRESENTATIVENESS][0] == pytest.approx(p_proxy, abs=5e-3)
        c, f = WINDOW_C[win], WINDOW_F[win]
        gate = readiness_gate(c, est[RELIABILITY][0], 0.6, 0.55)
        assert gate == pytest.approx(a_proxy, abs=5e-3)
        dims = DimensionScores(c, f, est[RELIABILITY][0], est[REPRESENTATIVENESS][0])
        assert composite_sufficiency(dims, gate).score == pytest.approx(s_proxy, abs=5e-3)

    @given(unit, unit, unit, unit, st.sampled_from(range(4)), unit)
    def test_monotone_in_each_dimension(self, c, f, r, p, which, bump):
        base = [c, f, r, p]
        raised = list(base)
        raised[which] = max(base[which], bump)

        def score(v):
            return composite_sufficiency(DimensionScores(*v), readiness_gate(v[0], v[2], 0.6, 0.15)).score

        assert score(raised) >= score(base) - 1e-12

    def test_composite_can_undercut_every_dimension(self):
        dims = DimensionScores(0.3, 0.3, 0.075, 0.3)
        s = composite_sufficiency(dims, readiness_gate(0.3, 0.075, 0.6, 0.15)).score
        assert s < min(0.3, 0.3, 0.075, 0.3)

    @given(unit, unit, unit, unit, unit)
    def test_score_identity(self, c, f, r, p, gate):
        dims = DimensionScores(c, f, r, p)
        a = composite_sufficiency(dims, gate)
        expected = gate * (0.2 * c + 0.3 * f + 0.3 * r + 0.2 * p)
        assert a.score == pytest.approx(expected, abs=1e-9)
        assert a.status == classify_status(a.score)


class TestStatus:
    @pytest.mark.parametrize(
        "score, status", [(0.85, SUFFICIENT), (0.8, SUFFICIENT), (0.524, DEGRADED), (0.5, DEGRADED), (0.408, INSUFFICIENT)]
    )
    def test_bands(self, score, status):
        assert classify_status(score) == status

    def test_custom_thresholds(self):
        assert classify_status(0.6, StatusThresholds(0.9, 0.7)) == INSUFFICIENT


class TestDetection:
    def test_covariate_window_one(self):
        assert detect_divergence(0.653, 0.751)

    def test_identical_not_detected(self):
        assert not detect_divergence(0.573, 0.573)

    def test_gap_equal_to_delta_not_detected(self):
        assert not detect_divergence(0.5, 0.75, delta=0.25)

    def test_delta_must_be_positive(self):
        with pytest.raises(ValueError):
            detect_divergence(0.1, 0.2, 0.0)


def fixpoint_windows():
    rng = np.random.default_rng(0)
    n = 2000
    x = rng.standard_normal((n, 3))
    s = rng.uniform(size=n)
    y = (rng.random(n) < 0.3).astype(int)
    t = np.full(n, 10.0)
    table = EventTable([f"e{i}" for i in range(n)], t, x, s, y, t.copy())
    return MonitoringWindow(0, 0.0, 30.0, table), MonitoringWindow(1, 0.0, 30.0, table)


class TestProxyAssessment:
    def test_identity_fixpoint(self, default_cfg):
        ref, cur = fixpoint_windows()
        profile = ReferenceProfile.from_window(ref, default_cfg)
        a = assess_window_proxy(cur, profile, default_cfg, as_of_t=10.0)
        assert a.dims.completeness == 1.0
        assert a.dims.freshness == 1.0
        assert a.score == pytest.approx(1.0, abs=1e-6)
        assert a.status == SUFFICIENT
        assert a.mode == "proxy"

    def test_external_signal_routed_by_coverage(self, default_cfg):
        ref, cur = fixpoint_windows()
        coverage = default_cfg.coverage.with_entries({("drift_alerts", RELIABILITY): 1.0})
        config = default_cfg.replace(coverage=coverage)
        profile = ReferenceProfile.from_window(ref, config)
        a = assess_window_proxy(cur, profile, config, 10.0, external_signals=[("drift_alerts", 0.0)])
        # reliability: Weak(score dist) + Moderate(uncertainty) + Strong(external at 0)
        assert a.dims.reliability == pytest.approx((0.25 + 0.5) / (0.25 + 0.5 + 1.0), abs=1e-6)

    def test_label_flips_leave_proxy_score_identical(self, default_cfg):
        ref = make_window(0, 0, 30, n=600, seed=1)
        cur = make_window(1, 30, 60, n=600, seed=2)
        profile = ReferenceProfile.from_window(ref, default_cfg)
        a = assess_window_proxy(cur, profile, default_cfg, 60.0)
        b = assess_window_proxy(cur.with_labels(1 - cur.labels), profile, default_cfg, 60.0)
        assert a.score == b.score
        assert a.readings == b.readings

    def test_empty_window_and_missing_reference(self, default_cfg):
        ref = make_window(0, n=300)
        profile = ReferenceProfile.from_window(ref, default_cfg)
        with pytest.raises(ValueError):
            assess_window_proxy(MonitoringWindow(1, 30.0, 60.0, []), profile, default_cfg, 60.0)
        with pytest.raises(ValueError):
            assess_window_proxy(ref, None, default_cfg, 60.0)

    def test_proxy_and_actual_share_c_and_f(self, default_cfg):
        ref = make_window(0, 0, 30, n=500, seed=3)
        cur = make_window(1, 30, 60, n=500, seed=4, delay=(0, 40))
        profile = ReferenceProfile.from_window(ref, default_cfg)
        p = assess_window_proxy(cur, profile, default_cfg, 60.0)
        a = assess_window_actual(cur, profile.scores, default_cfg, 60.0)
        assert (p.dims.completeness, p.dims.freshness) == (a.dims.completeness, a.dims.freshness)


class TestMonitoringImpaired:
    def test_carry_forward_sets_impaired(self, default_cfg):
        ref = make_window(0, 0, 30, n=500, seed=5)
        monitor = SufficiencyMonitor(ReferenceProfile.from_window(ref, default_cfg), default_cfg)
        first = monitor.assess(make_window(1, 30, 60, n=500, seed=6), 60.0)
        assert not first.monitoring_impaired
        blind = monitor.assess(
            make_window(2, 60, 90, n=500, seed=7), 90.0, exclude=(SCORE_DISTRIBUTION, UNCERTAINTY)
        )
        assert blind.monitoring_impaired
        assert blind.dims.impaired == frozenset({RELIABILITY})
        assert blind.dims.reliability == first.dims.reliability
        assert RELIABILITY not in first.dims.impaired

    def test_impaired_is_distinct_from_degraded(self, default_cfg):
        ref = make_window(0, 0, 30, n=500, seed=5)
        monitor = SufficiencyMonitor(ReferenceProfile.from_window(ref, default_cfg), default_cfg)
        monitor.last_valid[RELIABILITY] = 0.95
        monitor.last_valid[REPRESENTATIVENESS] = 0.95
        blind = monitor.assess(
            make_window(1, 30, 60, n=500, seed=8), 60.0,
            exclude=(SCORE_DISTRIBUTION, FEATURE_DRIFT, UNCERTAINTY),
        )
        assert blind.monitoring_impaired
        assert blind.dims.impaired == frozenset({RELIABILITY, REPRESENTATIVENESS})
        assert blind.dims.reliability == 0.95
        assert blind.status in (SUFFICIENT, DEGRADED, INSUFFICIENT)

    def test_no_prior_value_gives_zero(self, default_cfg):
        ref = make_window(0, 0, 30, n=500, seed=5)
        profile = ReferenceProfile.from_window(ref, default_cfg)
        a = assess_window_proxy(
            make_window(1, 30, 60, n=500, seed=9), profile, default_cfg, 60.0,
            exclude=(SCORE_DISTRIBUTION, FEATURE_DRIFT, UNCERTAINTY),
        )
        assert a.dims.reliability == 0.0 and a.dims.representativeness == 0.0
        assert a.score == 0.0
        assert a.monitoring_impaired


class TestActualAssessment:
    def test_perfect_classifier(self, default_cfg):
        w = make_window(1, 30, 60, n=400, seed=1)
        perfect = w.with_scores(w.labels.astype(float))
        a = assess_window_actual(perfect, perfect.scores, default_cfg, 100.0)
        assert a.dims.reliability == 1.0
        assert a.dims.representativeness == 1.0
        assert a.mode == "actual"

    def test_all_negative_predictions_close_the_gate(self, default_cfg):
        w = make_window(1, 30, 60, n=400, seed=2)
        blind = w.with_scores(np.zeros(len(w)))
        a = assess_window_actual(blind, w.scores, default_cfg, 100.0)
        assert a.dims.reliability == 0.0
        assert a.gate == 0.0
        assert a.score == 0.0

    def test_unlabeled_rejected(self, default_cfg):
        w = window_with_arrivals([1.0, None])
        with pytest.raises(ValueError):
            assess_window_actual(w, np.array([0.5]), default_cfg, 30.0)

    def test_uses_f1_and_ks(self, default_cfg):
        w = make_window(1, 30, 60, n=400, seed=3)
        ref_scores = np.random.default_rng(0).uniform(size=400)
        a = assess_window_actual(w, ref_scores, default_cfg, 100.0)
        assert a.dims.reliability == f1_score(w.labels, w.scores)
        assert a.dims.representativeness == 1.0 - ks_statistic(ref_scores, w.scores)
        assert a.gate == readiness_gate(a.dims.completeness, a.dims.reliability, 0.6, 0.15)
