"""Continuous state selection over a repository of per-concept classifiers.

Each observation is classified and learned by the active state, then every
stored state (plus a background state shadowing the recent window) is
scored with a posterior = transition-pattern prior x similarity likelihood.
A Hoeffding-bound test over windows of recent posteriors decides whether a
different state should take over, keeping selection temporally stable.
A sparse mode reuses the same components but only re-evaluates stored
states when a drift detector fires on the active state's similarity.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, fields, replace
from typing import NamedTuple

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .adwin import Adwin
from .fingerprint import (BehaviourWindows, FingerprintNormalizer, RunningStats,
                          fingerprint_dim, fisher_weights, weighted_cosine_similarity)
from .hoeffding_tree import HoeffdingTreeClassifier
from .validation import check_label, check_row

PROB_HISTORY_LEN = 500
SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SelectParams:
    """Engine parameters; defaults follow the tuned reference configuration."""

    window_size: int = 100
    buffer_ratio: float = 0.2
    min_window_ratio: float = 0.65
    fingerprint_period: int = 15
    active_head_period: int = 5
    adwin_delta: float = 0.05
    state_estimator_delta: float = 0.5
    hoeffding_risk: float = 0.75
    min_state_likelihood: float = 0.005
    b_prior_multiplier: float = 0.4
    min_prior: float = 0.7
    multihop_multiplier: float = 0.7
    multihop_steps: int = 3
    prev_state_prior: float = 50.0
    merge_correlation: float = 0.95
    merge_cadence: int = 500
    merge_min_overlap: int = 30
    state_grace: int = 10
    sigma_floor: float = 1e-4
    similarity_clip_low: float = 0.015
    similarity_clip_high: float = 0.175
    drift_hold: int = 100
    tree_grace_period: int = 200
    tree_split_confidence: float = 1e-7
    tree_tie_threshold: float = 0.05
    uniform_prior: bool = False
    map_selection: bool = False
    merge_enabled: bool = True

    @property
    def min_window(self) -> int:
        return round(self.min_window_ratio * self.window_size)

    def with_overrides(self, **overrides) -> "SelectParams":
        return replace(self, **overrides)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def parse_override(cls, key: str, raw: str):
        """Parse a ``key=value`` CLI override to the field's type."""
        for f in fields(cls):
            if f.name == key:
                if f.type in ("bool", bool):
                    return raw.lower() in ("1", "true", "yes", "on")
                if f.type in ("int", int):
                    return int(raw)
                return float(raw)
        raise KeyError(key)


def selection_epsilon(w0: float, w1: float, risk: float) -> float:
    """Hoeffding threshold for comparing posterior-window means.

    Uses the harmonic mean of the window sizes: 2*w0*w1/(w0+w1).
    """
    m_hat = 2.0 * w0 * w1 / (w0 + w1)
    return math.sqrt(math.log(2.0 / risk) / (2.0 * m_hat))


def gaussian_tail_likelihood(a: float, mu: float, sigma: float,
                             floor: float, sigma_floor: float) -> float:
    """Lower-tail normal CDF of the similarity, clamped to [floor, 1].

    Higher similarity never lowers the likelihood of relevance.
    """
    sigma = max(sigma, sigma_floor)
    z = (a - mu) / sigma
    lik = 0.5 * (1.0 + math.erf(z / SQRT2))
    return min(1.0, max(floor, lik))


class TransitionMatrices:
    """Paired drift/no-drift transition-count tables over live state ids."""

    def __init__(self):
        self.ids: list[int] = []
        self._index: dict[int, int] = {}
        self._tm = [np.zeros((0, 0)), np.zeros((0, 0))]
        self._powers: list[list[np.ndarray] | None] = [None, None]

    def add_state(self, sid: int) -> None:
        if sid in self._index:
            raise ValueError(f"state {sid} already tracked")
        n = len(self.ids)
        self._index[sid] = n
        self.ids.append(sid)
        for d in (0, 1):
            grown = np.zeros((n + 1, n + 1))
            grown[:n, :n] = self._tm[d]
            self._tm[d] = grown
        self._powers = [None, None]

    def matrix(self, d: int) -> np.ndarray:
        return self._tm[d]

    def increment(self, d: int, i: int, j: int, amount: float = 1.0) -> None:
        self._tm[d][self._index[i], self._index[j]] += amount
        self._powers[d] = None

    def set_entry(self, d: int, i: int, j: int, value: float) -> None:
        self._tm[d][self._index[i], self._index[j]] = value
        self._powers[d] = None

    def entry(self, d: int, i: int, j: int) -> float:
        return float(self._tm[d][self._index[i], self._index[j]])

    def incoming_total(self, sid: int) -> float:
        j = self._index[sid]
        return float(self._tm[0][:, j].sum() + self._tm[1][:, j].sum())

    def total_mass(self) -> float:
        return float(self._tm[0].sum() + self._tm[1].sum())

    def effective_counts(self, d: int, from_id: int, steps: int, multiplier: float) -> np.ndarray:
        """max over h in [1..steps] of multiplier**(h-1) * (TM^h)[from_id, :]."""
        if self._powers[d] is None:
            powers = [self._tm[d]]
            for _ in range(1, max(1, steps)):
                powers.append(powers[-1] @ self._tm[d])
            self._powers[d] = powers
        row = self._index[from_id]
        eff = self._powers[d][0][row].copy()
        for h in range(2, max(1, steps) + 1):
            np.maximum(eff, multiplier ** (h - 1) * self._powers[d][h - 1][row], out=eff)
        return eff

    def merge(self, keeper: int, loser: int) -> None:
        """Fold the loser's rows and columns into the keeper's."""
        ki, li = self._index[keeper], self._index[loser]
        for d in (0, 1):
            tm = self._tm[d]
            tm[ki, :] += tm[li, :]
            tm[:, ki] += tm[:, li]
            tm = np.delete(np.delete(tm, li, axis=0), li, axis=1)
            self._tm[d] = tm
        self.ids.pop(li)
        self._index = {sid: i for i, sid in enumerate(self.ids)}
        self._powers = [None, None]


class _State:
    """One repository entry: classifier + representation + selection stats."""

    __slots__ = ("state_id", "classifier", "rep", "train_count", "created_t",
                 "sim_n", "sim_mean", "sim_m2", "prob_window", "prob_history",
                 "last_similarity", "last_likelihood")

    def __init__(self, state_id: int, classifier: HoeffdingTreeClassifier,
                 dim: int, estimator_delta: float, created_t: int,
                 likelihood_floor: float):
        self.state_id = state_id
        self.classifier = classifier
        self.rep = RunningStats(dim)
        self.train_count = 0
        self.created_t = created_t
        self.sim_n = 0
        self.sim_mean = 0.0
        self.sim_m2 = 0.0
        self.prob_window = Adwin(estimator_delta)
        self.prob_history: deque[float] = deque(maxlen=PROB_HISTORY_LEN)
        self.last_similarity: float | None = None
        self.last_likelihood = likelihood_floor

    def update_similarity_stats(self, a: float) -> None:
        self.sim_n += 1
        delta = a - self.sim_mean
        self.sim_mean += delta / self.sim_n
        self.sim_m2 += delta * (a - self.sim_mean)

    @property
    def sim_std(self) -> float:
        return math.sqrt(self.sim_m2 / self.sim_n) if self.sim_n else 0.0


class StepResult(NamedTuple):
    prediction: int
    state_id: int          # the state that produced the prediction
    drift: bool            # drift-condition flag for this step
    transitioned: bool     # active state changed for the next step


class StatePoolClassifier(BaseEstimator, ClassifierMixin):
    """Adaptive streaming classifier with recurring-state reuse.

    ``mode`` is "continuous" (posterior windows + Hoeffding selection every
    step) or "sparse" (stored states only reconsidered when the active
    similarity's drift detector fires).
    """

    def __init__(self, n_features: int, n_classes: int,
                 params: SelectParams | None = None, mode: str = "continuous"):
        if mode not in ("continuous", "sparse"):
            raise ValueError("mode must be 'continuous' or 'sparse'")
        self.n_features = n_features
        self.n_classes = n_classes
        self.params = params if params is not None else SelectParams()
        self.mode = mode
        self._setup()

    # -- construction --------------------------------------------------------

    def _setup(self) -> None:
        p = self.params
        self._dim = fingerprint_dim(self.n_features)
        self._windows = BehaviourWindows(p.window_size, p.buffer_ratio, self.n_features)
        self._normalizer = FingerprintNormalizer(self._dim)
        self._weights = np.ones(self._dim)
        self._tm = TransitionMatrices()
        self._repo: dict[int, _State] = {}
        self._next_id = 0
        first = self._new_state()
        self._repo[first.state_id] = first
        self._tm.add_state(first.state_id)
        self._active_id = first.state_id
        self._background = self._new_state()
        self._drift_adwin = Adwin(p.adwin_delta)
        self._drift_timer = 0
        self._grace_left = p.state_grace
        self._stable_since_capture = 0
        self._t = 0
        self.transition_count = 0
        self.transition_log: list[tuple] = []
        self.last_posteriors: dict[int, float] = {}

    def _new_state(self) -> _State:
        p = self.params
        clf = HoeffdingTreeClassifier(
            n_classes=self.n_classes, n_features=self.n_features,
            grace_period=p.tree_grace_period,
            split_confidence=p.tree_split_confidence,
            tie_threshold=p.tree_tie_threshold)
        state = _State(self._next_id, clf, self._dim, p.state_estimator_delta,
                       self._t, p.min_state_likelihood)
        self._next_id += 1
        return state

    # -- public surface -------------------------------------------------------

    @property
    def active_state_id(self) -> int:
        return self._active_id

    @property
    def repository_size(self) -> int:
        return len(self._repo)

    @property
    def repository_ids(self) -> list[int]:
        return list(self._repo.keys())

    def predict_one(self, x) -> int:
        x = check_row(x, self.n_features)
        return self._repo[self._active_id].classifier.predict_one(x)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        return np.asarray([self.predict_one(X[i]) for i in range(len(X))], dtype=np.int64)

    def partial_fit(self, X, y, classes=None):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        y = np.asarray(y).ravel()
        for i in range(len(X)):
            self.step(X[i], int(y[i]))
        return self

    # -- the per-observation algorithm ----------------------------------------

    def step(self, x, y, concept_id=None) -> StepResult:
        """Classify-then-train on one observation and reselect the active state."""
        p = self.params
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            x = check_row(x, self.n_features)
        y = check_label(y, self.n_classes)
        active = self._repo[self._active_id]
        predicted_by = active.state_id

        y_pred = active.classifier.predict_one(x)
        active.classifier.learn_one(x, y)
        active.train_count += 1
        self._background.classifier.learn_one(x, y)
        self._background.train_count += 1

        err = 0.0 if y_pred == y else 1.0
        matured = self._windows.update(x, y, y_pred, err)
        if matured:
            self._stable_since_capture += 1

        if (self._stable_since_capture >= p.fingerprint_period
                and self._windows.stable_size >= p.min_window):
            self._incorporate_stable_fingerprint(active)

        drift_fired = False
        if self._t % p.active_head_period == 0 and self._windows.head_size >= p.min_window:
            drift_fired = self._refresh_similarity(active)

        drift_now = 1 if (drift_fired or self._drift_timer > 0) else 0
        if drift_fired:
            self._drift_timer = p.drift_hold
        elif self._drift_timer > 0:
            self._drift_timer -= 1

        posteriors = self._compute_posteriors(drift_now)
        self.last_posteriors = posteriors
        if self.mode == "continuous":
            for sid, state in self._candidate_states():
                state.prob_window.add(posteriors[sid])
                state.prob_history.append(posteriors[sid])

        old = self._active_id
        if self.mode == "sparse":
            next_id = self._sparse_reidentify() if drift_fired else old
        elif p.map_selection:
            next_id = self._map_select(posteriors)
        else:
            next_id = self._hoeffding_select(posteriors)

        transitioned = next_id != old
        if transitioned:
            self._transition(old, next_id, drift_now)

        if (p.merge_enabled and self.mode == "continuous" and self._t > 0
                and self._t % p.merge_cadence == 0):
            self.maybe_merge()

        self._t += 1
        return StepResult(prediction=y_pred, state_id=predicted_by,
                          drift=bool(drift_now), transitioned=transitioned)

    # -- fingerprints and similarity ------------------------------------------

    def _candidate_states(self):
        for sid, state in self._repo.items():
            yield sid, state
        yield self._background.state_id, self._background

    def _incorporate_stable_fingerprint(self, active: _State) -> None:
        zeta = self._windows.capture("stable", self.params.min_window)
        self._normalizer.update(zeta)
        active.rep.update(zeta)
        self._background.rep.update(zeta)
        self._stable_since_capture = 0
        if self._grace_left > 0:
            self._grace_left -= 1
        self._update_fisher_weights()

    def _update_fisher_weights(self) -> None:
        reps = []
        for state in self._repo.values():
            if state.rep.n >= 1:
                mean, std = self._normalizer.normalize_stats(state.rep.mean, state.rep.std)
                reps.append((mean, std, float(state.rep.n)))
        if not reps:
            return
        weights = fisher_weights(reps)
        if not np.isfinite(weights).all() or weights.max() <= 0.0:
            weights = np.ones(self._dim)
        self._weights = weights

    def _clamp_similarity(self, cosine: float) -> float:
        p = self.params
        distance = min(max(1.0 - cosine, p.similarity_clip_low), p.similarity_clip_high)
        return 1.0 - distance

    def _refresh_similarity(self, active: _State) -> bool:
        """Recompute the recent-window fingerprint, similarities and
        likelihoods for every candidate; feed the active similarity to the
        drift detector. Returns True when the detector fires."""
        p = self.params
        zeta = self._windows.capture("head", p.min_window)
        self._normalizer.update(zeta)
        zeta_norm = self._normalizer.normalize(zeta)
        for _, state in self._candidate_states():
            if state.rep.n >= 1:
                mean_norm = self._normalizer.normalize(state.rep.mean)
                cosine = weighted_cosine_similarity(mean_norm, zeta_norm, self._weights)
                state.last_similarity = self._clamp_similarity(cosine)
            else:
                state.last_similarity = None

        a_active = active.last_similarity
        if a_active is not None:
            active.update_similarity_stats(a_active)
        a_bg = self._background.last_similarity
        if a_bg is not None:
            self._background.update_similarity_stats(a_bg)

        for _, state in self._candidate_states():
            state.last_likelihood = self._likelihood(state)

        drift_fired = False
        if a_active is not None and self._drift_adwin.add(a_active):
            drift_fired = True
            self._windows.flush_unstable()
            self._stable_since_capture = 0
            self._reset_background()
        return drift_fired

    def _likelihood(self, state: _State) -> float:
        p = self.params
        if state.rep.n < 1 or state.last_similarity is None or state.sim_n < 1:
            return p.min_state_likelihood
        return gaussian_tail_likelihood(state.last_similarity, state.sim_mean,
                                        state.sim_std, p.min_state_likelihood,
                                        p.sigma_floor)

    def _reset_background(self) -> None:
        sid = self._background.state_id
        self._background = self._new_state()
        # keep the reserved id if it never entered the repository
        self._next_id -= 1
        self._background.state_id = sid

    # -- priors and posteriors -------------------------------------------------

    def compute_priors(self, drift: int) -> dict[int, float]:
        """Prior over repository states (normalized) plus the background state."""
        p = self.params
        ids = list(self._repo.keys())
        if p.uniform_prior:
            uniform = 1.0 / len(ids)
            priors = {sid: uniform for sid in ids}
        else:
            eff = self._tm.effective_counts(drift, self._active_id,
                                            p.multihop_steps, p.multihop_multiplier)
            eff = np.maximum(eff, p.min_prior)
            eff = eff / eff.sum()
            priors = {sid: float(eff[i]) for i, sid in enumerate(self._tm.ids)}
        priors[self._background.state_id] = p.b_prior_multiplier * priors[self._active_id]
        return priors

    def _compute_posteriors(self, drift: int) -> dict[int, float]:
        priors = self.compute_priors(drift)
        post = {}
        for sid, state in self._candidate_states():
            post[sid] = priors[sid] * state.last_likelihood
        total = sum(post.values())
        if total <= 0.0:
            uniform = 1.0 / len(post)
            return {sid: uniform for sid in post}
        return {sid: v / total for sid, v in post.items()}

    # -- selection ---------------------------------------------------------------

    def _map_select(self, posteriors: dict[int, float]) -> int:
        best_id, best_p = self._active_id, -1.0
        for sid in sorted(posteriors):
            if posteriors[sid] > best_p:
                best_id, best_p = sid, posteriors[sid]
        return best_id

    def _hoeffding_select(self, posteriors: dict[int, float]) -> int:
        p = self.params
        if self._grace_left > 0:
            return self._active_id
        active = self._repo[self._active_id]
        w0 = active.prob_window.n
        if w0 < 1:
            return self._active_id
        mu0 = active.prob_window.mean
        best_id = self._active_id
        best_mu = -math.inf
        best_eps = 0.0
        for sid, state in self._candidate_states():
            if sid == self._active_id:
                continue
            w1 = state.prob_window.n
            if w1 < 1:
                continue
            mu1 = state.prob_window.mean
            eps = selection_epsilon(w0, w1, p.hoeffding_risk)
            if mu1 - mu0 > eps and mu1 > best_mu:
                best_id, best_mu, best_eps = sid, mu1, eps
        if best_id != self._active_id:
            self.transition_log.append((self._t, self._active_id, best_id,
                                        best_mu, mu0, best_eps))
        return best_id

    def _sparse_reidentify(self) -> int:
        """One-shot re-identification at a drift alert: argmax likelihood,
        accepting a stored state only when its likelihood reaches 0.5."""
        best_sid, best_lik = None, -1.0
        for sid in sorted(self._repo):
            lik = self._repo[sid].last_likelihood
            if lik > best_lik:
                best_sid, best_lik = sid, lik
        bg_lik = self._background.last_likelihood
        if best_lik >= 0.5 and best_lik >= bg_lik:
            return best_sid
        return self._background.state_id

    # -- transitions and merging ---------------------------------------------------

    def _transition(self, old: int, new: int, drift: int) -> None:
        p = self.params
        promoted = new == self._background.state_id
        if promoted:
            self._repo[new] = self._background
            self._tm.add_state(new)
            self._background = self._new_state()
            self._grace_left = p.state_grace
        self._tm.increment(drift, old, new, 1.0)
        if promoted:
            # let a brand-new state fall back to its predecessor
            self._tm.set_entry(drift, new, old, p.prev_state_prior)
        if not promoted:
            self._reset_background()
        self._active_id = new
        self._drift_timer = 0
        self._windows.flush_unstable()
        self._stable_since_capture = 0
        self._drift_adwin.reset()
        self.transition_count += 1

    def maybe_merge(self) -> list[tuple[int, int]]:
        """Merge repository states whose posterior histories correlate above
        the threshold; the state with less training is absorbed."""
        p = self.params
        ids = sorted(self._repo)
        merges: list[tuple[int, int]] = []
        merged_away: set[int] = set()
        for ai in range(len(ids)):
            for bi in range(ai + 1, len(ids)):
                a, b = ids[ai], ids[bi]
                if a in merged_away or b in merged_away:
                    continue
                sa, sb = self._repo[a], self._repo[b]
                overlap = min(len(sa.prob_history), len(sb.prob_history))
                if overlap < p.merge_min_overlap:
                    continue
                ha = np.asarray(sa.prob_history, dtype=np.float64)[-overlap:]
                hb = np.asarray(sb.prob_history, dtype=np.float64)[-overlap:]
                corr = _pearson(ha, hb)
                if corr > p.merge_correlation:
                    keeper, loser = (a, b) if sa.train_count >= sb.train_count else (b, a)
                    self._merge_states(keeper, loser)
                    merged_away.add(loser)
                    merges.append((keeper, loser))
        return merges

    def _merge_states(self, keeper: int, loser: int) -> None:
        self._tm.merge(keeper, loser)
        del self._repo[loser]
        if self._active_id == loser:
            self._active_id = keeper

    # -- diagnostics -----------------------------------------------------------

    @property
    def t(self) -> int:
        return self._t

    def state_train_counts(self) -> dict[int, int]:
        return {sid: s.train_count for sid, s in self._repo.items()}

    def transition_matrix_mass(self) -> float:
        return self._tm.total_mass()


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation, defined as 0 for zero-variance series."""
    sa = a.std()
    sb = b.std()
    if sa == 0.0 or sb == 0.0:
        return 0.0
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))
