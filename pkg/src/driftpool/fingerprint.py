"""Concept representations: behaviour sources, meta-features, fingerprints.

A window of (observation, prediction) records is decomposed into univariate
behaviour sources (true labels, predicted labels, one series per feature,
error indicators, gaps between errors). Each source is summarized by six
meta-features, and the concatenation is the window's fingerprint. A
concept representation is the per-dimension running Gaussian of the
fingerprints incorporated while its state was active.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientDataError

META_FEATURES = ("mean", "std", "skew", "kurtosis", "autocorrelation", "turning_rate")
N_META = len(META_FEATURES)
FISHER_VARIANCE_EPS = 1e-6


def fingerprint_dim(n_features: int) -> int:
    """Sources are: labels, predictions, each feature, errors, error gaps."""
    return (n_features + 4) * N_META


def source_names(n_features: int) -> list[str]:
    return (["label", "prediction"] + [f"f{i}" for i in range(n_features)]
            + ["error", "error_gap"])


def error_gaps(err: np.ndarray) -> np.ndarray:
    """Distances between successive errors; [0] when fewer than 2 errors."""
    idx = np.flatnonzero(err)
    if len(idx) < 2:
        return np.zeros(1)
    return np.diff(idx).astype(np.float64)


def extract_behaviour_sources(X: np.ndarray, y: np.ndarray, y_pred: np.ndarray,
                              err: np.ndarray) -> list[tuple[str, np.ndarray]]:
    """Named univariate series for one window, in fingerprint order."""
    if len(y) == 0:
        raise InsufficientDataError("cannot extract behaviour sources from an empty window")
    sources = [("label", y.astype(np.float64)), ("prediction", y_pred.astype(np.float64))]
    for i in range(X.shape[1]):
        sources.append((f"f{i}", X[:, i]))
    sources.append(("error", err.astype(np.float64)))
    sources.append(("error_gap", error_gaps(err)))
    return sources


def meta_features(series: np.ndarray) -> np.ndarray:
    """(mean, population std, skew, raw kurtosis, lag-1 autocorrelation,
    turning-point rate); moment ratios of constant series are defined as 0."""
    s = np.asarray(series, dtype=np.float64)
    if s.size == 0:
        raise InsufficientDataError("meta-features need at least one value")
    return _meta_matrix(s[None, :])[0]


def _meta_matrix(rows: np.ndarray) -> np.ndarray:
    """Vectorized meta-features for a (sources, n) matrix of equal-length series."""
    n = rows.shape[1]
    mean = rows.mean(axis=1)
    centered = rows - mean[:, None]
    m2 = (centered ** 2).mean(axis=1)
    std = np.sqrt(m2)
    safe = np.where(m2 > 0.0, m2, 1.0)
    skew = np.where(m2 > 0.0, (centered ** 3).mean(axis=1) / safe ** 1.5, 0.0)
    kurt = np.where(m2 > 0.0, (centered ** 4).mean(axis=1) / safe ** 2, 0.0)

    if n >= 2:
        num = (centered[:, :-1] * centered[:, 1:]).sum(axis=1)
        den = (centered ** 2).sum(axis=1)
        ac1 = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), 0.0)
    else:
        ac1 = np.zeros(len(rows))

    if n >= 3:
        d1 = rows[:, 1:-1] - rows[:, :-2]
        d2 = rows[:, 1:-1] - rows[:, 2:]
        turning = ((d1 > 0.0) & (d2 > 0.0)) | ((d1 < 0.0) & (d2 < 0.0))
        tpr = turning.sum(axis=1) / (n - 2)
    else:
        tpr = np.zeros(len(rows))

    return np.column_stack([mean, std, skew, kurt, ac1, tpr])


def window_fingerprint(X: np.ndarray, y: np.ndarray, y_pred: np.ndarray,
                       err: np.ndarray) -> np.ndarray:
    """Concatenated meta-features of every behaviour source of one window."""
    if len(y) == 0:
        raise InsufficientDataError("cannot fingerprint an empty window")
    stacked = np.vstack([y, y_pred, X.T, err])
    parts = _meta_matrix(stacked)
    gap_part = _meta_matrix(error_gaps(err)[None, :])
    return np.concatenate([parts.ravel(), gap_part.ravel()])


def weighted_cosine_similarity(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> float:
    """Cosine of the elementwise-weighted vectors; 0 if either is all-zero."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if a.shape != b.shape or a.shape != weights.shape:
        raise ValueError("vectors and weights must share one dimension")
    wa = weights * a
    wb = weights * b
    na = math.sqrt(float(wa @ wa))
    nb = math.sqrt(float(wb @ wb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(wa @ wb) / (na * nb)


def fisher_weights(reps: list[tuple[np.ndarray, np.ndarray, float]]) -> np.ndarray:
    """Per-dimension between/within variance ratio over concept representations.

    ``reps`` holds (mean, std, count) triples. With a single representation
    the weights are uninformative (all ones).
    """
    if not reps:
        raise ValueError("need at least one representation")
    dim = len(reps[0][0])
    if len(reps) == 1:
        return np.ones(dim)
    means = np.vstack([r[0] for r in reps])
    stds = np.vstack([r[1] for r in reps])
    counts = np.asarray([r[2] for r in reps], dtype=np.float64)
    overall = (counts[:, None] * means).sum(axis=0) / counts.sum()
    between = (counts[:, None] * (means - overall) ** 2).sum(axis=0)
    within = (counts[:, None] * stds ** 2).sum(axis=0)
    return between / (within + FISHER_VARIANCE_EPS)


class RunningStats:
    """Per-dimension Welford accumulator (population standard deviation)."""

    __slots__ = ("n", "mean", "_m2")

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros(dim)

    def update(self, vec: np.ndarray) -> None:
        self.n += 1
        delta = vec - self.mean
        self.mean += delta / self.n
        self._m2 += delta * (vec - self.mean)

    @property
    def std(self) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(self.mean)
        return np.sqrt(self._m2 / self.n)


class FingerprintNormalizer:
    """Global per-dimension running min/max; maps fingerprints into [0, 1]."""

    __slots__ = ("lo", "hi", "count")

    def __init__(self, dim: int):
        self.lo = np.full(dim, np.inf)
        self.hi = np.full(dim, -np.inf)
        self.count = 0

    def update(self, vec: np.ndarray) -> None:
        np.minimum(self.lo, vec, out=self.lo)
        np.maximum(self.hi, vec, out=self.hi)
        self.count += 1

    def normalize(self, vec: np.ndarray) -> np.ndarray:
        if self.count == 0:
            return np.zeros_like(vec)
        span = self.hi - self.lo
        out = np.where(span > 1e-12, (vec - self.lo) / np.where(span > 1e-12, span, 1.0), 0.0)
        return np.clip(out, 0.0, 1.0)

    def normalize_stats(self, mean: np.ndarray, std: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.count == 0:
            return np.zeros_like(mean), np.zeros_like(std)
        span = self.hi - self.lo
        safe = np.where(span > 1e-12, span, 1.0)
        nm = np.where(span > 1e-12, (mean - self.lo) / safe, 0.0)
        ns = np.where(span > 1e-12, std / safe, 0.0)
        return np.clip(nm, 0.0, 1.0), ns


class _Ring:
    """Fixed-capacity record ring; evicts and returns the oldest on overflow."""

    __slots__ = ("cap", "X", "y", "y_pred", "err", "start", "size")

    def __init__(self, cap: int, n_features: int):
        self.cap = cap
        self.X = np.zeros((cap, n_features))
        self.y = np.zeros(cap)
        self.y_pred = np.zeros(cap)
        self.err = np.zeros(cap)
        self.start = 0
        self.size = 0

    def push(self, x, y, y_pred, err):
        evicted = None
        if self.size == self.cap:
            i = self.start
            evicted = (self.X[i].copy(), self.y[i], self.y_pred[i], self.err[i])
            self.start = (self.start + 1) % self.cap
            self.size -= 1
        j = (self.start + self.size) % self.cap
        self.X[j] = x
        self.y[j] = y
        self.y_pred[j] = y_pred
        self.err[j] = err
        self.size += 1
        return evicted

    def clear(self) -> None:
        self.start = 0
        self.size = 0

    def ordered(self):
        idx = (self.start + np.arange(self.size)) % self.cap
        return self.X[idx], self.y[idx], self.y_pred[idx], self.err[idx]


class BehaviourWindows:
    """Head window (recent), buffer, and lagged drift-flushed stable window.

    Every record enters the head window and the buffer; records that age
    out of the buffer are considered stable and enter the stable window.
    Detected drift empties buffer and stable window (the head keeps rolling).
    """

    def __init__(self, window_size: int, buffer_ratio: float, n_features: int):
        self.window_size = window_size
        self.buffer_len = max(1, round(buffer_ratio * window_size))
        self.head = _Ring(window_size, n_features)
        self.buffer = _Ring(self.buffer_len, n_features)
        self.stable = _Ring(window_size, n_features)

    @property
    def head_size(self) -> int:
        return self.head.size

    @property
    def stable_size(self) -> int:
        return self.stable.size

    def update(self, x, y, y_pred, err, drift: bool = False) -> bool:
        """Push one record; returns True if a record matured into stable."""
        if drift:
            self.flush_unstable()
        self.head.push(x, y, y_pred, err)
        matured = False
        if self.buffer.size == self.buffer_len:
            evicted = self.buffer.push(x, y, y_pred, err)
            self.stable.push(*evicted)
            matured = True
        else:
            self.buffer.push(x, y, y_pred, err)
        return matured

    def flush_unstable(self) -> None:
        self.buffer.clear()
        self.stable.clear()

    def capture(self, which: str, min_window: int) -> np.ndarray:
        ring = self.stable if which == "stable" else self.head
        if ring.size < min_window:
            raise InsufficientDataError(
                f"{which} window holds {ring.size} < {min_window} observations")
        X, y, y_pred, err = ring.ordered()
        return window_fingerprint(X, y, y_pred, err)
