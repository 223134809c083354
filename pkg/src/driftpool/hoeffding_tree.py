"""Incremental Hoeffding tree (VFDT) and a trivial majority-class learner.

Numeric attributes only: every leaf keeps per-(class, feature) running
Gaussian estimators, and candidate splits are 10 evenly spaced thresholds
between the observed min and max of each feature. Split decisions use the
Hoeffding bound on information gain with an optional tie threshold.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr
from sklearn.base import BaseEstimator, ClassifierMixin

from .validation import as_feature_matrix, as_label_vector, check_label, check_row

N_SPLIT_CANDIDATES = 10


def hoeffding_bound(value_range: float, delta: float, n: float) -> float:
    """eps = sqrt(R^2 ln(1/delta) / (2n)); zero when delta >= 1."""
    if delta >= 1.0:
        return 0.0
    return math.sqrt(value_range * value_range * math.log(1.0 / delta) / (2.0 * n))


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "counts",
                 "mean", "m2", "fmin", "fmax", "last_eval")

    def __init__(self, n_classes: int, n_features: int):
        self.feature = -1
        self.threshold = 0.0
        self.left: _Node | None = None
        self.right: _Node | None = None
        self.counts = np.zeros(n_classes)
        self.mean = np.zeros((n_classes, n_features))
        self.m2 = np.zeros((n_classes, n_features))
        self.fmin = np.full(n_features, np.inf)
        self.fmax = np.full(n_features, -np.inf)
        self.last_eval = 0

    def is_leaf(self) -> bool:
        return self.left is None


class HoeffdingTreeClassifier(BaseEstimator, ClassifierMixin):
    """Streaming decision tree with Hoeffding-bound split decisions."""

    def __init__(self, n_classes: int = 2, n_features: int | None = None,
                 grace_period: int = 200, split_confidence: float = 1e-7,
                 tie_threshold: float = 0.05):
        self.n_classes = n_classes
        self.n_features = n_features
        self.grace_period = grace_period
        self.split_confidence = split_confidence
        self.tie_threshold = tie_threshold
        self._root: _Node | None = None
        self._node_count = 0

    # -- plumbing -----------------------------------------------------------

    @property
    def node_count(self) -> int:
        return self._node_count

    def _ensure_root(self, n_features: int) -> None:
        if self._root is None:
            if self.n_features is None:
                self.n_features = n_features
            self._root = _Node(self.n_classes, self.n_features)
            self._node_count = 1

    def _route(self, x: np.ndarray) -> _Node:
        node = self._root
        while not node.is_leaf():
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node

    # -- single-observation API (hot path) ----------------------------------

    def predict_proba_one(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self._root is None:
            return np.full(self.n_classes, 1.0 / self.n_classes)
        if x.shape[0] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[0]}")
        counts = self._route(x).counts
        total = counts.sum()
        if total <= 0.0:
            return np.full(self.n_classes, 1.0 / self.n_classes)
        return counts / total

    def predict_one(self, x) -> int:
        return int(np.argmax(self.predict_proba_one(x)))

    def learn_one(self, x, y: int) -> None:
        x = np.asarray(x, dtype=np.float64)
        y = check_label(y, self.n_classes)
        self._ensure_root(x.shape[0])
        if x.shape[0] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {x.shape[0]}")
        leaf = self._route(x)
        leaf.counts[y] += 1.0
        delta = x - leaf.mean[y]
        leaf.mean[y] += delta / leaf.counts[y]
        leaf.m2[y] += delta * (x - leaf.mean[y])
        np.minimum(leaf.fmin, x, out=leaf.fmin)
        np.maximum(leaf.fmax, x, out=leaf.fmax)
        seen = int(leaf.counts.sum())
        if seen - leaf.last_eval >= self.grace_period:
            leaf.last_eval = seen
            self._attempt_split(leaf)

    # -- batch API -----------------------------------------------------------

    def partial_fit(self, X, y, classes=None):
        if classes is not None:
            self.n_classes = max(self.n_classes, int(max(classes)) + 1)
        X = as_feature_matrix(X, self.n_features)
        y = as_label_vector(y, self.n_classes)
        for i in range(len(X)):
            self.learn_one(X[i], int(y[i]))
        return self

    def fit(self, X, y):
        return self.partial_fit(X, y)

    def predict_proba(self, X) -> np.ndarray:
        X = as_feature_matrix(X, self.n_features)
        return np.vstack([self.predict_proba_one(X[i]) for i in range(len(X))])

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    # -- splitting -----------------------------------------------------------

    def _attempt_split(self, leaf: _Node) -> None:
        counts = leaf.counts
        if (counts > 0.0).sum() < 2:
            return
        span = leaf.fmax - leaf.fmin
        if not (span > 0.0).any():
            return

        total = counts.sum()
        cn = counts[:, None]
        variance = np.where(cn > 0.0, leaf.m2 / np.maximum(cn, 1.0), 0.0)
        std = np.sqrt(variance)

        # thresholds: (T, k) evenly spaced strictly inside the observed range
        steps = (np.arange(1, N_SPLIT_CANDIDATES + 1) / (N_SPLIT_CANDIDATES + 1.0))
        thr = leaf.fmin[None, :] + steps[:, None] * span[None, :]

        # per-class share of mass falling left of each threshold, from the
        # per-(class, feature) Gaussian estimators
        diff = thr[None, :, :] - leaf.mean[:, None, :]          # (C, T, k)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = diff / std[:, None, :]
        frac = ndtr(np.where(np.isfinite(z), z, 0.0))
        frac = np.where(std[:, None, :] == 0.0, (diff >= 0.0).astype(float), frac)

        left = counts[:, None, None] * frac                      # (C, T, k)
        right = counts[:, None, None] - left

        n_left = left.sum(axis=0)
        n_right = right.sum(axis=0)
        h_parent = _entropy_1d(counts)
        h_left = _entropy(left)
        h_right = _entropy(right)
        with np.errstate(invalid="ignore"):
            gain = h_parent - (n_left * h_left + n_right * h_right) / total
        gain = np.where((n_left >= 1.0) & (n_right >= 1.0) & (span[None, :] > 0.0),
                        gain, -np.inf)

        per_feature_best = gain.max(axis=0)                      # (k,)
        order = np.argsort(per_feature_best)
        g1 = per_feature_best[order[-1]]
        g2 = per_feature_best[order[-2]] if len(order) > 1 else 0.0
        if not np.isfinite(g1) or g1 <= 0.0:
            return
        g2 = max(g2, 0.0) if np.isfinite(g2) else 0.0

        value_range = math.log2(self.n_classes) if self.n_classes > 1 else 1.0
        eps = hoeffding_bound(value_range, self.split_confidence, total)
        if g1 - g2 > eps or eps < self.tie_threshold:
            f = int(order[-1])
            t_idx = int(gain[:, f].argmax())
            self._split(leaf, f, float(thr[t_idx, f]))

    def _split(self, leaf: _Node, feature: int, threshold: float) -> None:
        leaf.feature = feature
        leaf.threshold = threshold
        leaf.left = _Node(self.n_classes, self.n_features)
        leaf.right = _Node(self.n_classes, self.n_features)
        self._node_count += 2
        leaf.mean = leaf.m2 = None
        leaf.counts = None
        leaf.fmin = leaf.fmax = None


def _entropy_1d(counts: np.ndarray) -> float:
    total = counts.sum()
    if total <= 0.0:
        return 0.0
    p = counts[counts > 0.0] / total
    return float(-(p * np.log2(p)).sum())


def _entropy(class_counts: np.ndarray) -> np.ndarray:
    """Entropy over axis 0 of a (C, T, k) table, elementwise over (T, k)."""
    totals = class_counts.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = class_counts / totals[None, :, :]
        terms = np.where(p > 0.0, p * np.log2(p), 0.0)
    h = -terms.sum(axis=0)
    return np.where(totals > 0.0, h, 0.0)


class MajorityClassClassifier(BaseEstimator, ClassifierMixin):
    """Predicts the most frequent label seen so far; uniform before data."""

    def __init__(self, n_classes: int = 2):
        self.n_classes = n_classes
        self._counts = np.zeros(n_classes)

    def learn_one(self, x, y: int) -> None:
        self._counts[check_label(y, self.n_classes)] += 1.0

    def predict_proba_one(self, x) -> np.ndarray:
        total = self._counts.sum()
        if total <= 0.0:
            return np.full(self.n_classes, 1.0 / self.n_classes)
        return self._counts / total

    def predict_one(self, x) -> int:
        return int(np.argmax(self.predict_proba_one(x)))

    def partial_fit(self, X, y, classes=None):
        y = as_label_vector(y, self.n_classes)
        for label in y:
            self._counts[int(label)] += 1.0
        return self

    def predict(self, X) -> np.ndarray:
        X = as_feature_matrix(X)
        return np.full(len(X), self.predict_one(None), dtype=np.int64)
