import numpy as np
import pytest

from causalmix.zoo import (
    ClassifierFamily,
    ClassifierSpec,
    RegressorFamily,
    RegressorSpec,
    fit_classifier,
    fit_regressor,
)
from causalmix.zoo.linear import logistic_loss_grad, polynomial_expand
from causalmix.zoo.trees import TreeParams, fit_tree_classifier


def rng_for(seed=0):
    return np.random.default_rng(seed)


class TestLinear:
    def test_exact_line_recovered(self):
        x = np.linspace(-2, 3, 10).reshape(-1, 1)
        y = 2 * x.ravel() + 1
        model = fit_regressor(RegressorSpec(RegressorFamily.LINEAR), x, y, rng_for())
        assert abs(model.coef[0] - 2) < 1e-9
        assert abs(model.intercept - 1) < 1e-9

    def test_rank_deficient_design_survives(self):
        x = np.column_stack([np.ones(6), np.ones(6)])  # duplicated constant columns
        y = np.arange(6.0)
        model = fit_regressor(RegressorSpec(RegressorFamily.LINEAR), x, y, rng_for())
        assert np.isfinite(model.predict(x)).all()

    def test_ridge_large_lambda_kills_slope(self):
        rng = rng_for(1)
        x = rng.normal(0, 1, (200, 1))
        y = 3 * x.ravel() + rng.normal(0, 0.1, 200)
        model = fit_regressor(
            RegressorSpec(RegressorFamily.RIDGE, {"lam": 1e9}), x, y, rng_for()
        )
        assert abs(model.coef[0]) < 1e-6

    def test_lasso_matches_soft_threshold_oracle(self):
        # single standardized feature: closed form beta = soft(x.y/n, lam)
        rng = rng_for(2)
        x = rng.normal(0, 1, 400)
        x = (x - x.mean()) / np.sqrt((x**2).mean() - x.mean() ** 2)
        y = 0.4 * x + rng.normal(0, 0.3, 400)
        y = y - y.mean()
        lam = 0.1
        rho = float(x @ y) / len(x)
        expected = np.sign(rho) * max(abs(rho) - lam, 0.0) / float((x**2).mean())
        model = fit_regressor(
            RegressorSpec(RegressorFamily.LASSO, {"lam": lam}), x.reshape(-1, 1), y, rng_for()
        )
        assert abs(model.coef[0] - expected) < 1e-6

    def test_lasso_zeroes_out_under_heavy_penalty(self):
        rng = rng_for(3)
        x = rng.normal(0, 1, (100, 3))
        y = x @ np.array([0.5, -0.2, 0.1]) + rng.normal(0, 0.1, 100)
        model = fit_regressor(
            RegressorSpec(RegressorFamily.LASSO, {"lam": 100.0}), x, y, rng_for()
        )
        np.testing.assert_allclose(model.coef, 0.0)

    def test_polynomial_degree_one_is_identity(self):
        x = rng_for(4).normal(0, 1, (20, 3))
        np.testing.assert_array_equal(polynomial_expand(x, 1), x)

    def test_polynomial_fits_quadratic(self):
        x = np.linspace(-2, 2, 30).reshape(-1, 1)
        y = 1.5 * x.ravel() ** 2 - x.ravel() + 0.5
        model = fit_regressor(
            RegressorSpec(RegressorFamily.POLYNOMIAL_LINEAR, {"degree": 2}), x, y, rng_for()
        )
        np.testing.assert_allclose(model.predict(x), y, atol=1e-8)


class TestLogistic:
    def separable_blobs(self, seed=5):
        rng = rng_for(seed)
        a = rng.normal(0, 1, (50, 2)) + np.array([-3.0, 0.0])
        b = rng.normal(0, 1, (50, 2)) + np.array([3.0, 0.0])
        X = np.vstack([a, b])
        y = np.array([0.0] * 50 + [1.0] * 50)
        assert a[:, 0].max() < b[:, 0].min()  # genuinely separable draw
        return X, y

    def test_separable_blobs_perfect_training_accuracy(self):
        X, y = self.separable_blobs()
        model = fit_classifier(ClassifierSpec(ClassifierFamily.LOGISTIC), X, y, rng_for())
        assert (model.predict(X) == y).mean() == 1.0

    def test_gradient_matches_finite_differences(self):
        rng = rng_for(6)
        for _ in range(5):
            n, d, k = int(rng.integers(5, 20)), int(rng.integers(1, 4)), int(rng.integers(2, 4))
            A = np.hstack([np.ones((n, 1)), rng.normal(0, 1, (n, d))])
            onehot = np.zeros((n, k))
            onehot[np.arange(n), rng.integers(0, k, n)] = 1.0
            W = rng.normal(0, 0.5, (d + 1, k))
            _, grad = logistic_loss_grad(W, A, onehot, 1e-4)
            h = 1e-6
            for _ in range(10):
                i = int(rng.integers(0, W.shape[0]))
                j = int(rng.integers(0, W.shape[1]))
                Wp, Wm = W.copy(), W.copy()
                Wp[i, j] += h
                Wm[i, j] -= h
                lp, _ = logistic_loss_grad(Wp, A, onehot, 1e-4)
                lm, _ = logistic_loss_grad(Wm, A, onehot, 1e-4)
                fd = (lp - lm) / (2 * h)
                assert abs(fd - grad[i, j]) <= 1e-5 * max(1.0, abs(fd))

    def test_probabilities_form_simplex(self):
        X, y = self.separable_blobs(7)
        model = fit_classifier(ClassifierSpec(ClassifierFamily.LOGISTIC), X, y, rng_for())
        probs = model.predict_proba(X)
        assert (probs >= 0).all()
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_single_class_rejected(self):
        X = np.zeros((5, 2))
        with pytest.raises(ValueError, match="2 classes"):
            fit_classifier(ClassifierSpec(ClassifierFamily.LOGISTIC), X, np.zeros(5), rng_for())


def xor_data():
    X = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] * 10)
    y = np.array([0.0, 1.0, 1.0, 0.0] * 10)
    return X, y


class TestTrees:
    def test_depth_one_cannot_solve_xor(self):
        X, y = xor_data()
        model = fit_classifier(
            ClassifierSpec(ClassifierFamily.DECISION_TREE, {"max_depth": 1}), X, y, rng_for()
        )
        assert (model.predict(X) == y).mean() <= 0.75

    def test_deep_tree_solves_xor(self):
        X, y = xor_data()
        model = fit_classifier(
            ClassifierSpec(ClassifierFamily.DECISION_TREE), X, y, rng_for()
        )
        assert (model.predict(X) == y).mean() == 1.0

    def test_forest_single_tree_equals_cart(self):
        rng = rng_for(8)
        X = rng.normal(0, 1, (120, 4))
        y = (X[:, 0] + 0.3 * X[:, 1] > 0).astype(float)
        forest = fit_classifier(
            ClassifierSpec(
                ClassifierFamily.RANDOM_FOREST,
                {"n_estimators": 1, "bootstrap": False, "max_features": None},
            ),
            X,
            y,
            rng_for(11),
        )
        tree = fit_classifier(ClassifierSpec(ClassifierFamily.DECISION_TREE), X, y, rng_for(12))
        np.testing.assert_array_equal(forest.predict_proba(X), tree.predict_proba(X))

    def test_forest_probabilities_simplex(self):
        rng = rng_for(9)
        X = rng.normal(0, 1, (80, 3))
        y = rng.integers(0, 3, 80).astype(float)
        model = fit_classifier(
            ClassifierSpec(ClassifierFamily.RANDOM_FOREST, {"n_estimators": 10}), X, y, rng_for(3)
        )
        probs = model.predict_proba(X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert (probs >= 0).all()

    def test_max_leaf_nodes_respected(self):
        rng = rng_for(10)
        X = rng.normal(0, 1, (200, 2))
        y = (X[:, 0] > 0).astype(float)
        model = fit_tree_classifier(
            None, X, y, TreeParams(max_leaf_nodes=3), rng_for()
        )

        def leaves(node):
            if node.is_leaf:
                return 1
            return leaves(node.left) + leaves(node.right)

        assert leaves(model.root) <= 3

    def test_deterministic_given_seed(self):
        rng = rng_for(13)
        X = rng.normal(0, 1, (100, 3))
        y = (X[:, 0] - X[:, 2] > 0).astype(float)
        spec = ClassifierSpec(ClassifierFamily.RANDOM_FOREST, {"n_estimators": 5})
        a = fit_classifier(spec, X, y, rng_for(77))
        b = fit_classifier(spec, X, y, rng_for(77))
        np.testing.assert_array_equal(a.predict_proba(X), b.predict_proba(X))


class TestGradBoost:
    def test_sin_regression_with_stumps(self):
        rng = rng_for(14)
        x = rng.uniform(-3, 3, 500).reshape(-1, 1)
        y = np.sin(x.ravel())
        model = fit_regressor(
            RegressorSpec(
                RegressorFamily.GRAD_BOOST_TREES,
                {"n_estimators": 200, "learning_rate": 0.1, "max_depth": 1},
            ),
            x,
            y,
            rng_for(15),
        )
        rmse = float(np.sqrt(np.mean((model.predict(x) - y) ** 2)))
        assert rmse < 0.15

    def test_classifier_separates_blobs(self):
        rng = rng_for(16)
        X = np.vstack([rng.normal(-2, 1, (60, 2)), rng.normal(2, 1, (60, 2))])
        y = np.array([0.0] * 60 + [1.0] * 60)
        model = fit_classifier(
            ClassifierSpec(ClassifierFamily.GRAD_BOOST_TREES, {"n_estimators": 30}),
            X,
            y,
            rng_for(17),
        )
        assert (model.predict(X) == y).mean() > 0.95
        probs = model.predict_proba(X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


class TestKnnAndMlp:
    def test_knn_regressor_interpolates(self):
        X = np.arange(10.0).reshape(-1, 1)
        y = 2 * np.arange(10.0)
        model = fit_regressor(RegressorSpec(RegressorFamily.KNN, {"k": 1}), X, y, rng_for())
        np.testing.assert_allclose(model.predict(X), y)

    def test_knn_classifier_probabilities(self):
        X = np.array([[0.0], [0.1], [5.0], [5.1]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        model = fit_classifier(ClassifierSpec(ClassifierFamily.KNN, {"k": 2}), X, y, rng_for())
        probs = model.predict_proba(np.array([[0.05], [5.05]]))
        np.testing.assert_allclose(probs, [[1.0, 0.0], [0.0, 1.0]])

    def test_mlp_learns_blobs(self):
        rng = rng_for(18)
        X = np.vstack([rng.normal(-2, 0.5, (50, 2)), rng.normal(2, 0.5, (50, 2))])
        y = np.array([0.0] * 50 + [1.0] * 50)
        model = fit_classifier(
            ClassifierSpec(
                ClassifierFamily.MLP,
                {"hidden_layer_sizes": 16, "learning_rate_init": 0.5, "max_iter": 400},
            ),
            X,
            y,
            rng_for(19),
        )
        assert (model.predict(X) == y).mean() > 0.95
        probs = model.predict_proba(X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)


class TestSpecValidation:
    def test_bad_degree(self):
        with pytest.raises(ValueError):
            RegressorSpec(RegressorFamily.POLYNOMIAL_LINEAR, {"degree": 0})

    def test_bad_lambda(self):
        with pytest.raises(ValueError):
            RegressorSpec(RegressorFamily.RIDGE, {"lam": -1.0})

    def test_non_finite_inputs_rejected(self):
        X = np.array([[1.0], [np.inf]])
        with pytest.raises(ValueError, match="non-finite"):
            fit_regressor(RegressorSpec(RegressorFamily.LINEAR), X, np.array([1.0, 2.0]), rng_for())
