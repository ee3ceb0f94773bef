import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evidence_sufficiency.injection import generate_synthetic
from evidence_sufficiency.scorer import (
    LogisticModel,
    f1_score,
    load_model,
    predict_proba,
    save_model,
    train_logistic,
)


def blobs(n, d, prevalence, gap, seed):
    rng = np.random.default_rng(seed)
    y = (rng.random(n) < prevalence).astype(int)
    x = rng.normal(size=(n, d))
    x[:, 0] += gap * y
    return x, y


class TestTraining:
    def test_separable(self):
        x, y = blobs(400, 3, 0.5, 10.0, 0)
        model = train_logistic(x, y)
        assert f1_score(y, predict_proba(model, x)) == 1.0
        assert np.mean((predict_proba(model, x) >= 0.5) == y) == 1.0

    def test_imbalanced_ranks_positives_higher(self):
        x, y = blobs(20_000, 5, 0.035, 2.0, 1)
        p = predict_proba(train_logistic(x, y), x)
        assert p[y == 1].mean() > p[y == 0].mean() + 0.3
        # balanced weights keep the minority class from being ignored
        assert np.mean(p[y == 1] >= 0.5) > 0.7

    def test_no_signal_small_weights(self):
        strong = generate_synthetic(20_000, 6, 0.035, 1.0, 30.0, seed=2)
        flat = generate_synthetic(20_000, 6, 0.035, 0.0, 30.0, seed=2)
        m_strong = train_logistic(strong.features, strong.label)
        m_flat = train_logistic(flat.features, flat.label)
        assert np.linalg.norm(m_flat.weights) < 0.5 * np.linalg.norm(m_strong.weights)

    def test_deterministic(self):
        x, y = blobs(500, 3, 0.2, 1.0, 3)
        a, b = train_logistic(x, y), train_logistic(x, y)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.bias == b.bias

    def test_row_permutation(self):
        x, y = blobs(500, 3, 0.2, 1.0, 4)
        perm = np.random.default_rng(0).permutation(500)
        a, b = train_logistic(x, y), train_logistic(x[perm], y[perm])
        np.testing.assert_allclose(a.weights, b.weights, atol=1e-9)

    def test_standardization_uses_training_stats(self):
        x, y = blobs(300, 2, 0.3, 1.0, 5)
        model = train_logistic(x * 100 + 7, y)
        np.testing.assert_allclose(model.mean, (x * 100 + 7).mean(axis=0))
        z = (x * 100 + 7 - model.mean) / model.std
        np.testing.assert_allclose(z.mean(axis=0), 0, atol=1e-9)
        np.testing.assert_allclose(z.std(axis=0), 1, atol=1e-9)

    def test_constant_feature_dropped(self):
        x, y = blobs(300, 3, 0.3, 2.0, 6)
        x[:, 2] = 4.0
        with pytest.warns(UserWarning, match="constant"):
            model = train_logistic(x, y)
        assert model.weights[2] == 0.0

    def test_single_class_rejected(self):
        with pytest.raises(ValueError, match="both classes"):
            train_logistic(np.ones((10, 2)) + np.arange(10)[:, None], np.zeros(10))

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            train_logistic(np.ones((3, 2)), [0, 1])
        with pytest.raises(ValueError):
            train_logistic(np.array([[np.nan], [1.0]]), [0, 1])
        with pytest.raises(ValueError):
            train_logistic(np.array([[0.0], [1.0]]), [0, 2])


class TestPrediction:
    def test_zero_weights_half(self):
        model = LogisticModel(np.zeros(3), 0.0, np.zeros(3), np.ones(3))
        np.testing.assert_array_equal(predict_proba(model, np.random.default_rng(0).normal(size=(5, 3))), 0.5)

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=30))
    def test_monotone_in_logit(self, values):
        model = LogisticModel(np.array([1.0]), 0.0, np.zeros(1), np.ones(1))
        x = np.sort(np.array(values))[:, None]
        p = predict_proba(model, x)
        assert np.all(np.diff(p) >= 0)
        assert np.all((p >= 0) & (p <= 1))

    def test_dimension_mismatch(self):
        model = LogisticModel(np.zeros(3), 0.0, np.zeros(3), np.ones(3))
        with pytest.raises(ValueError):
            predict_proba(model, np.zeros((2, 4)))

    def test_invalid_model(self):
        with pytest.raises(ValueError):
            LogisticModel(np.zeros(2), 0.0, np.zeros(3), np.ones(3))
        with pytest.raises(ValueError):
            LogisticModel(np.zeros(2), 0.0, np.zeros(2), np.zeros(2))


class TestF1:
    def test_examples(self):
        assert f1_score([1, 1, 0, 0], [0.9, 0.2, 0.8, 0.1]) == pytest.approx(0.5)
        assert f1_score([1, 0, 1], [0.9, 0.9, 0.6]) == pytest.approx(0.8)
        assert f1_score([1, 1, 0], [0.9, 0.1, 0.2]) == pytest.approx(2 / 3)
        assert f1_score([0, 0], [0.9, 0.1]) == 0.0
        assert f1_score([1, 0], [1.0, 0.0]) == 1.0

    def test_threshold_inclusive(self):
        assert f1_score([1], [0.5]) == 1.0

    def test_errors(self):
        with pytest.raises(ValueError):
            f1_score([1, 0], [0.5])
        with pytest.raises(ValueError):
            f1_score([], [])

    @settings(max_examples=50)
    @given(st.lists(st.tuples(st.integers(0, 1), st.floats(0, 1)), min_size=1, max_size=50))
    def test_bounded(self, pairs):
        y, s = zip(*pairs)
        assert 0.0 <= f1_score(y, s) <= 1.0


def test_save_load_round_trip(tmp_path):
    x, y = blobs(300, 4, 0.3, 1.5, 7)
    model = train_logistic(x, y)
    save_model(model, tmp_path / "m.txt")
    loaded = load_model(tmp_path / "m.txt")
    np.testing.assert_array_equal(predict_proba(model, x), predict_proba(loaded, x))


def test_load_rejects_unknown_version(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("format_version = 9\n")
    with pytest.raises(ValueError, match="version"):
        load_model(path)
