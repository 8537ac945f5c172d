import numpy as np
import pytest

from genensemble.data import FeatureMatrix
from genensemble.metrics import MetricSpec
from genensemble.predictors import (PredictorSpec, _grow_tree, parse_predictor,
                                    predict, predict_batch, train,
                                    train_forest_curve)
from genensemble.rng import child_rng


def reg_matrix(x, y):
    return FeatureMatrix(x=np.asarray(x, dtype=float), y=np.asarray(y, dtype=float),
                         task="regression")


def clf_matrix(x, y, n_classes=2):
    return FeatureMatrix(x=np.asarray(x, dtype=float), y=np.asarray(y, dtype=int),
                         task="classification", n_classes=n_classes)


class TestCart:
    def test_interpolates_unique_rows(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(40, 3))
        y = rng.normal(size=40)
        model = train(PredictorSpec("cart", "regression"), reg_matrix(x, y))
        assert np.mean((predict_batch(model, x) - y) ** 2) == 0.0

    def test_interpolation_property_random(self):
        rng = np.random.default_rng(5)
        for trial in range(15):
            n = int(rng.integers(2, 40))
            x = rng.normal(size=(n, int(rng.integers(1, 4))))
            y = rng.normal(size=n)
            model = train(PredictorSpec("cart", "regression"), reg_matrix(x, y))
            assert np.allclose(predict_batch(model, x), y)

    def test_midpoint_threshold(self):
        x = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = train(PredictorSpec("cart", "regression"), reg_matrix(x, y))
        assert model.state.feature == 0
        assert model.state.threshold == 1.5
        assert predict(model, [1.49]) == 0.0
        assert predict(model, [1.51]) == 1.0

    def test_tie_breaks_to_lowest_feature(self):
        # second feature duplicates the first: both give identical splits
        base = np.array([0.0, 1.0, 2.0, 3.0])
        x = np.column_stack([base, base])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = train(PredictorSpec("cart", "regression"), reg_matrix(x, y))
        assert model.state.feature == 0

    def test_constant_features_give_leaf(self):
        x = np.ones((5, 2))
        y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        model = train(PredictorSpec("cart", "regression"), reg_matrix(x, y))
        assert model.state.value == pytest.approx(3.0)

    def test_classification_gini_split_and_pure_leaves(self):
        x = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([0, 0, 1, 1])
        model = train(PredictorSpec("cart", "classification"), clf_matrix(x, y))
        probs = predict_batch(model, x)
        np.testing.assert_array_equal(probs[:, 1], [0.0, 0.0, 1.0, 1.0])
        np.testing.assert_allclose(probs.sum(axis=1), 1.0)


class TestKnn:
    def test_one_nn_at_training_point(self):
        x = np.array([[0.0], [1.0], [5.0]])
        y = np.array([3.0, 7.0, 9.0])
        model = train(PredictorSpec("knn", "regression", k=1), reg_matrix(x, y))
        assert predict(model, [1.0]) == 7.0

    def test_five_nn_class_frequencies(self):
        x = np.arange(5.0)[:, None]
        y = np.array([1, 1, 1, 0, 0])
        model = train(PredictorSpec("knn", "classification", k=5), clf_matrix(x, y))
        np.testing.assert_allclose(predict(model, [2.0]), [0.4, 0.6])

    def test_tie_break_lowest_row_index(self):
        x = np.array([[1.0], [-1.0], [1.0]])      # rows 0 and 2 tie at any query
        y = np.array([10.0, 20.0, 30.0])
        model = train(PredictorSpec("knn", "regression", k=1), reg_matrix(x, y))
        assert predict(model, [0.0]) == 10.0
        model2 = train(PredictorSpec("knn", "regression", k=2), reg_matrix(x, y))
        assert predict(model2, [1.0]) == 20.0     # ties at distance 0: rows 0 then 2


class TestLinearModels:
    def test_ridge_zero_penalty_exact_line(self):
        x = np.array([[1.0], [2.0], [3.0]])
        y = np.array([2.0, 4.0, 6.0])
        model = train(PredictorSpec("ridge", "regression", lam=0.0), reg_matrix(x, y))
        coef, intercept = model.state
        assert abs(coef[0] - 2.0) < 1e-9
        assert abs(intercept) < 1e-9

    def test_linear_equals_ridge_zero(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(20, 2))
        y = x @ [1.0, -2.0] + 0.5 + rng.normal(scale=0.1, size=20)
        fm = reg_matrix(x, y)
        a = train(PredictorSpec("linear", "regression"), fm)
        b = train(PredictorSpec("ridge", "regression", lam=0.0), fm)
        np.testing.assert_allclose(a.state[0], b.state[0], atol=1e-8)

    def test_ridge_shrinks(self):
        x = np.array([[1.0], [2.0], [3.0]])
        y = np.array([2.0, 4.0, 6.0])
        big = train(PredictorSpec("ridge", "regression", lam=100.0), reg_matrix(x, y))
        assert abs(big.state[0][0]) < 2.0


class TestLogistic:
    def test_separable_data_full_accuracy_finite_coefficients(self):
        x = np.array([[-2.0], [-1.0], [1.0], [2.0]])
        y = np.array([0, 0, 1, 1])
        model = train(PredictorSpec("logistic", "classification", lam=1.0),
                      clf_matrix(x, y))
        probs = predict_batch(model, x)
        assert np.all(np.argmax(probs, axis=1) == y)
        assert np.all(np.isfinite(model.state[0]))

    def test_single_observed_class_is_degenerate_not_error(self):
        x = np.array([[0.0], [1.0]])
        y = np.array([1, 1])
        model = train(PredictorSpec("logistic", "classification"), clf_matrix(x, y))
        probs = predict_batch(model, x)
        assert np.all(probs[:, 1] > 0.5)

    def test_probabilities_normalized(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(30, 2))
        y = (x[:, 0] > 0).astype(int)
        model = train(PredictorSpec("logistic", "classification"), clf_matrix(x, y))
        probs = predict_batch(model, rng.normal(size=(10, 2)))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(probs >= 0)


class TestBaggedTrees:
    def test_single_tree_matches_manual_bootstrap(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(25, 2))
        y = rng.normal(size=25)
        fm = reg_matrix(x, y)
        seed = 77
        bag = train(PredictorSpec("bagged_trees", "regression", n_trees=1), fm, seed)
        idx = child_rng(seed, "tree", 0).integers(0, 25, size=25)
        manual = _grow_tree(x[idx], y[idx], "regression", 0)
        grid = rng.normal(size=(40, 2))
        bag_tree = bag.state[0]
        from genensemble.predictors import _tree_predict
        manual_preds = [_tree_predict(manual, row) for row in grid]
        bag_preds = [_tree_predict(bag_tree, row) for row in grid]
        assert manual_preds == bag_preds

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(20, 1))
        y = rng.normal(size=20)
        fm = reg_matrix(x, y)
        a = train(PredictorSpec("bagged_trees", "regression", n_trees=5), fm, seed=9)
        b = train(PredictorSpec("bagged_trees", "regression", n_trees=5), fm, seed=9)
        grid = np.linspace(-2, 2, 30)[:, None]
        np.testing.assert_array_equal(predict_batch(a, grid), predict_batch(b, grid))


class TestForestCurve:
    def test_first_point_is_single_tree_score(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(30, 1))
        y = np.sin(x[:, 0]) + rng.normal(scale=0.2, size=30)
        fm = reg_matrix(x, y)
        test = reg_matrix(rng.normal(size=(20, 1)), rng.normal(size=20))
        curve = train_forest_curve(fm, test, t_max=4, metric=MetricSpec("mse"), seed=5)
        model = train(PredictorSpec("bagged_trees", "regression", n_trees=1), fm, seed=5)
        single = np.mean((predict_batch(model, test.x) - test.y) ** 2)
        assert curve[1] == pytest.approx(single)

    def test_degenerate_bootstrap_flat_curve(self):
        fm = reg_matrix([[1.0]], [5.0])
        test = reg_matrix([[0.0], [2.0]], [5.0, 6.0])
        curve = train_forest_curve(fm, test, t_max=6, metric=MetricSpec("mse"), seed=0)
        assert len(set(curve.values())) == 1


class TestContracts:
    def test_fingerprint_mismatch_rejected(self):
        model = train(PredictorSpec("cart", "regression"),
                      reg_matrix([[1.0], [2.0]], [1.0, 2.0]))
        with pytest.raises(ValueError, match="fingerprint"):
            predict_batch(model, np.zeros((1, 3)))

    def test_task_mismatch_rejected(self):
        with pytest.raises(ValueError):
            train(PredictorSpec("ridge", "regression"),
                  clf_matrix([[1.0]], [0]))

    def test_empty_data_rejected(self):
        with pytest.raises(ValueError):
            train(PredictorSpec("cart", "regression"),
                  reg_matrix(np.zeros((0, 1)), np.zeros(0)))

    def test_parse_predictor(self):
        spec = parse_predictor("knn:5", "classification")
        assert spec.kind == "knn" and spec.k == 5
        assert parse_predictor("ridge:0.5", "regression").lam == 0.5
        assert parse_predictor("cart", "regression").kind == "cart"
        with pytest.raises(ValueError):
            parse_predictor("mystery", "regression")

    def test_standardize_defaults(self):
        assert not PredictorSpec("cart", "regression").wants_standardize
        assert not PredictorSpec("bagged_trees", "regression").wants_standardize
        assert PredictorSpec("knn", "regression").wants_standardize
        assert PredictorSpec("ridge", "regression").wants_standardize
        assert PredictorSpec("cart", "regression", standardize=True).wants_standardize
