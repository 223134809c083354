import math

import numpy as np
import pytest

from driftpool.generators import StaggerConcept, stagger_sample
from driftpool.hoeffding_tree import (HoeffdingTreeClassifier, MajorityClassClassifier,
                                      hoeffding_bound)


class TestHoeffdingBound:
    def test_closed_form(self):
        # R=1, delta=1e-7, n=200 -> sqrt(ln(1e7)/400)
        assert hoeffding_bound(1.0, 1e-7, 200) == pytest.approx(
            math.sqrt(math.log(1e7) / 400), abs=1e-12)
        assert hoeffding_bound(1.0, 1e-7, 200) == pytest.approx(0.2007, abs=5e-4)

    def test_degenerate_delta(self):
        assert hoeffding_bound(1.0, 1.0, 50) == 0.0


class TestHoeffdingTree:
    def test_untrained_uniform_and_class_zero(self):
        tree = HoeffdingTreeClassifier(n_classes=3, n_features=2)
        proba = tree.predict_proba_one(np.zeros(2))
        assert np.allclose(proba, 1.0 / 3.0)
        assert tree.predict_one(np.zeros(2)) == 0

    def test_single_class_stream(self):
        tree = HoeffdingTreeClassifier(n_classes=2, n_features=1)
        for _ in range(1000):
            tree.learn_one(np.zeros(1), 1)
        assert tree.predict_one(np.zeros(1)) == 1

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(0)
        tree = HoeffdingTreeClassifier(n_classes=3, n_features=4)
        for _ in range(3000):
            x = rng.normal(size=4)
            tree.learn_one(x, int(rng.integers(0, 3)))
        for _ in range(20):
            proba = tree.predict_proba_one(rng.normal(size=4))
            assert proba.sum() == pytest.approx(1.0, abs=1e-9)

    def test_grace_period_gates_splits(self):
        tree = HoeffdingTreeClassifier(n_classes=2, n_features=1, grace_period=200)
        rng = np.random.default_rng(1)
        for _ in range(199):
            x = rng.normal(size=1)
            tree.learn_one(x, int(x[0] > 0))
        assert tree.node_count == 1  # no split attempted yet

    def test_degenerate_confidence_splits_immediately(self):
        # delta=1 -> bound 0 -> split at the first evaluation when g1 > g2
        tree = HoeffdingTreeClassifier(n_classes=2, n_features=1, grace_period=200,
                                       split_confidence=1.0)
        rng = np.random.default_rng(2)
        for _ in range(200):
            x = rng.normal(size=1)
            tree.learn_one(x, int(x[0] > 0))
        assert tree.node_count == 3

    def test_axis_split_concept_holdout_accuracy(self):
        rng = np.random.default_rng(3)
        tree = HoeffdingTreeClassifier(n_classes=2, n_features=1)
        for _ in range(10_000):
            x = rng.uniform(0, 1, size=1)
            tree.learn_one(x, int(x[0] > 0.5))
        X_test = rng.uniform(0, 1, size=(2000, 1))
        y_test = (X_test[:, 0] > 0.5).astype(int)
        acc = float(np.mean(tree.predict(X_test) == y_test))
        assert acc >= 0.95

    def test_stagger_prequential_accuracy(self):
        # stationary-stream sanity: >= 0.95 within 2000 observations
        for rule in (0, 1, 2):
            X, y = stagger_sample(StaggerConcept(rule), 2000, seed=10 + rule)
            tree = HoeffdingTreeClassifier(n_classes=2, n_features=3)
            correct = 0
            for i in range(len(y)):
                correct += tree.predict_one(X[i]) == y[i]
                tree.learn_one(X[i], int(y[i]))
            assert correct / len(y) >= 0.95, f"rule {rule}"

    def test_node_count_nondecreasing_and_deterministic(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(3000, 3))
        y = (X[:, 0] + X[:, 1] > 0).astype(int)
        counts = []
        t1 = HoeffdingTreeClassifier(n_classes=2, n_features=3)
        last = 1
        for i in range(len(y)):
            t1.learn_one(X[i], int(y[i]))
            assert t1.node_count >= last
            last = t1.node_count
            counts.append(t1.node_count)
        t2 = HoeffdingTreeClassifier(n_classes=2, n_features=3)
        t2.partial_fit(X, y)
        assert t2.node_count == counts[-1]
        assert np.array_equal(t1.predict(X[:100]), t2.predict(X[:100]))

    def test_arity_mismatch_raises(self):
        tree = HoeffdingTreeClassifier(n_classes=2, n_features=3)
        tree.learn_one(np.zeros(3), 0)
        with pytest.raises(ValueError):
            tree.predict_proba_one(np.zeros(2))
        with pytest.raises(ValueError):
            tree.learn_one(np.zeros(5), 0)

    def test_label_out_of_range(self):
        tree = HoeffdingTreeClassifier(n_classes=2, n_features=1)
        with pytest.raises(ValueError):
            tree.learn_one(np.zeros(1), 2)


class TestMajorityClass:
    def test_majority_and_uniform_fallback(self):
        clf = MajorityClassClassifier(n_classes=3)
        assert np.allclose(clf.predict_proba_one(None), 1.0 / 3.0)
        for y in (1, 1, 2):
            clf.learn_one(None, y)
        assert clf.predict_one(None) == 1
