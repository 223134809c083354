"""Reference systems bracketing the adaptive engine.

``lb``: one tree, no adaptation (lower bound). ``ub``: per-concept trees
switched from ground truth with a fixed 100-observation delay (upper
bound). ``sparse``: the engine's components under the standard
detect-then-reidentify loop. ``s_p`` / ``s_map`` / ``s_m``: single-component
ablations of the continuous engine.
"""

from __future__ import annotations

import numpy as np

from .engine import SelectParams, StatePoolClassifier, StepResult
from .hoeffding_tree import HoeffdingTreeClassifier
from .evaluation import RunResult, prequential_run

SYSTEM_NAMES = ("select", "sparse", "lb", "ub", "s_p", "s_map", "s_m")


class LowerBoundClassifier:
    """A single incremental tree run with no adaptation."""

    def __init__(self, n_features: int, n_classes: int, params: SelectParams | None = None):
        p = params or SelectParams()
        self._tree = HoeffdingTreeClassifier(
            n_classes=n_classes, n_features=n_features,
            grace_period=p.tree_grace_period,
            split_confidence=p.tree_split_confidence,
            tie_threshold=p.tree_tie_threshold)

    @property
    def repository_size(self) -> int:
        return 1

    def step(self, x, y, concept_id=None) -> StepResult:
        y_pred = self._tree.predict_one(x)
        self._tree.learn_one(x, int(y))
        return StepResult(prediction=y_pred, state_id=0, drift=False, transitioned=False)


class UpperBoundClassifier:
    """Oracle adaptation: per-concept trees, switched exactly ``delay``
    observations after every ground-truth concept change, reusing the
    previous tree on recurrence."""

    def __init__(self, n_features: int, n_classes: int, delay: int = 100,
                 params: SelectParams | None = None):
        p = params or SelectParams()
        self._make_tree = lambda: HoeffdingTreeClassifier(
            n_classes=n_classes, n_features=n_features,
            grace_period=p.tree_grace_period,
            split_confidence=p.tree_split_confidence,
            tie_threshold=p.tree_tie_threshold)
        self.delay = delay
        self._trees: dict[int, HoeffdingTreeClassifier] = {}
        self._state_of: dict[int, int] = {}
        self._active_concept: int | None = None
        self._last_concept: int | None = None
        self._pending: dict[int, int] = {}
        self._t = 0

    @property
    def repository_size(self) -> int:
        return len(self._trees)

    def _activate(self, concept: int) -> None:
        if concept not in self._trees:
            self._trees[concept] = self._make_tree()
            self._state_of[concept] = len(self._state_of)
        self._active_concept = concept

    def step(self, x, y, concept_id=None) -> StepResult:
        if concept_id is None:
            raise ValueError("upper bound needs the ground-truth 'concept' column")
        concept_id = int(concept_id)
        transitioned = False
        if self._active_concept is None:
            self._activate(concept_id)
        elif self._t in self._pending:
            target = self._pending.pop(self._t)
            if target != self._active_concept:
                self._activate(target)
                transitioned = True
        if self._last_concept is not None and concept_id != self._last_concept:
            self._pending[self._t + self.delay] = concept_id
        self._last_concept = concept_id

        tree = self._trees[self._active_concept]
        y_pred = tree.predict_one(x)
        tree.learn_one(x, int(y))
        self._t += 1
        return StepResult(prediction=y_pred, state_id=self._state_of[self._active_concept],
                          drift=False, transitioned=transitioned)


def make_system(name: str, n_features: int, n_classes: int,
                params: SelectParams | None = None, ub_delay: int = 100):
    """Instantiate a system by its CLI name."""
    p = params or SelectParams()
    if name == "select":
        return StatePoolClassifier(n_features, n_classes, p)
    if name == "sparse":
        return StatePoolClassifier(n_features, n_classes,
                                   p.with_overrides(merge_enabled=False), mode="sparse")
    if name == "s_p":
        return StatePoolClassifier(n_features, n_classes, p.with_overrides(uniform_prior=True))
    if name == "s_map":
        return StatePoolClassifier(n_features, n_classes, p.with_overrides(map_selection=True))
    if name == "s_m":
        return StatePoolClassifier(n_features, n_classes, p.with_overrides(merge_enabled=False))
    if name == "lb":
        return LowerBoundClassifier(n_features, n_classes, p)
    if name == "ub":
        return UpperBoundClassifier(n_features, n_classes, delay=ub_delay, params=p)
    raise ValueError(f"unknown system {name!r}; choose from {SYSTEM_NAMES}")


def _run(name: str, stream, seed: int, dataset: str, params: SelectParams | None,
         trace_path=None, config: dict | None = None) -> RunResult:
    system = make_system(name, stream.n_features, stream.n_classes, params)
    return prequential_run(system, stream, seed=seed, system_name=name,
                           dataset_name=dataset, config=config, trace_path=trace_path)


def lower_bound_run(stream, seed: int = 0, dataset: str = "stream",
                    params: SelectParams | None = None) -> RunResult:
    return _run("lb", stream, seed, dataset, params)


def upper_bound_run(stream, delay: int = 100, seed: int = 0, dataset: str = "stream",
                    params: SelectParams | None = None) -> RunResult:
    system = make_system("ub", stream.n_features, stream.n_classes, params, ub_delay=delay)
    return prequential_run(system, stream, seed=seed, system_name="ub", dataset_name=dataset)


def sparse_mode_run(stream, seed: int = 0, dataset: str = "stream",
                    params: SelectParams | None = None) -> RunResult:
    return _run("sparse", stream, seed, dataset, params)


def select_run(stream, seed: int = 0, dataset: str = "stream",
               params: SelectParams | None = None) -> RunResult:
    return _run("select", stream, seed, dataset, params)
