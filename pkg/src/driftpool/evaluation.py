"""Prequential evaluation and metrics.

Runs any streaming system in strict test-then-train order, records the
per-timestep trace, and scores it with chance-corrected accuracy (kappa)
and the concept/state matching score (C-F1).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np


def accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    if len(y_true) == 0:
        raise ValueError("empty trace")
    return float(np.mean(np.asarray(y_true) == np.asarray(y_pred)))


def kappa(y_true, y_pred) -> float:
    """Chance-corrected accuracy: (p - p_c) / (1 - p_c).

    The chance term p_c is the agreement of a random predictor with the
    system's own label marginal; defined as 0 when p_c reaches 1.
    """
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if len(y_true) == 0:
        raise ValueError("empty trace")
    p = float(np.mean(y_true == y_pred))
    n_classes = int(max(y_true.max(), y_pred.max())) + 1
    freq_true = np.bincount(y_true, minlength=n_classes) / len(y_true)
    freq_pred = np.bincount(y_pred, minlength=n_classes) / len(y_pred)
    p_c = float(freq_true @ freq_pred)
    if p_c >= 1.0:
        return 0.0
    return (p - p_c) / (1.0 - p_c)


def c_f1(state_ids, concept_ids) -> float:
    """Average, over ground-truth concepts, of the best F1 between the
    concept's active timesteps and any single state's active timesteps."""
    state_ids = np.asarray(state_ids)
    concept_ids = np.asarray(concept_ids)
    if len(state_ids) == 0:
        raise ValueError("empty trace")
    if (concept_ids < 0).any():
        raise ValueError("trace is missing ground-truth concept ids")
    states, s_inv = np.unique(state_ids, return_inverse=True)
    concepts, c_inv = np.unique(concept_ids, return_inverse=True)
    inter = np.zeros((len(states), len(concepts)))
    np.add.at(inter, (s_inv, c_inv), 1.0)
    t_s = inter.sum(axis=1, keepdims=True)
    t_c = inter.sum(axis=0, keepdims=True)
    recall = inter / t_c
    precision = np.divide(inter, t_s, out=np.zeros_like(inter), where=t_s > 0)
    denom = recall + precision
    f1 = np.divide(2.0 * recall * precision, denom,
                   out=np.zeros_like(inter), where=denom > 0)
    return float(f1.max(axis=0).mean())


def rolling_accuracy(y_true, y_pred, window: int = 100) -> np.ndarray:
    """Mean correctness over the trailing window at every timestep."""
    correct = (np.asarray(y_true) == np.asarray(y_pred)).astype(np.float64)
    csum = np.concatenate([[0.0], np.cumsum(correct)])
    n = len(correct)
    idx = np.arange(1, n + 1)
    lo = np.maximum(0, idx - window)
    return (csum[idx] - csum[lo]) / (idx - lo)


@dataclass
class RunResult:
    """Per-timestep trace plus summary metrics for one prequential run."""

    seed: int
    system: str
    dataset: str
    y_true: np.ndarray
    y_pred: np.ndarray
    state_ids: np.ndarray
    concept_ids: np.ndarray
    repo_size: int
    runtime_s: float
    config: dict = field(default_factory=dict)

    @property
    def transitions(self) -> int:
        if len(self.state_ids) < 2:
            return 0
        return int((np.diff(self.state_ids) != 0).sum())

    @property
    def has_concepts(self) -> bool:
        return len(self.concept_ids) > 0 and bool((self.concept_ids >= 0).all())

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "system": self.system,
            "dataset": self.dataset,
            "kappa": kappa(self.y_true, self.y_pred),
            "c_f1": c_f1(self.state_ids, self.concept_ids) if self.has_concepts else None,
            "accuracy": accuracy(self.y_true, self.y_pred),
            "transitions": self.transitions,
            "repo_size": self.repo_size,
            "runtime_s": self.runtime_s,
        }

    def to_json(self) -> str:
        payload = self.summary()
        payload["config"] = self.config
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def prequential_run(system, stream, seed: int = 0, system_name: str = "system",
                    dataset_name: str = "stream", config: dict | None = None,
                    trace_path=None) -> RunResult:
    """Strict test-then-train pass of ``system`` over ``stream``.

    ``system`` must expose ``step(x, y, concept_id) -> StepResult``-like
    tuples and a ``repository_size`` property.
    """
    n = len(stream)
    if n == 0:
        raise ValueError("empty stream")
    y_true = stream.y
    y_pred = np.empty(n, dtype=np.int64)
    state_ids = np.empty(n, dtype=np.int64)
    concept_col = stream.concept

    trace_fh = open(trace_path, "w") if trace_path is not None else None
    if trace_fh:
        trace_fh.write("t,y,y_pred,state_id,concept_id,drift,transition,posteriors\n")
    started = time.perf_counter()
    try:
        X = stream.X
        for t in range(n):
            cid = int(concept_col[t])
            result = system.step(X[t], int(y_true[t]), None if cid < 0 else cid)
            y_pred[t] = result[0]
            state_ids[t] = result[1]
            if trace_fh:
                posteriors = getattr(system, "last_posteriors", {})
                post_txt = "|".join(f"{sid}:{v:.6f}" for sid, v in sorted(posteriors.items()))
                trace_fh.write(f"{t},{int(y_true[t])},{int(y_pred[t])},{int(state_ids[t])},"
                               f"{cid},{int(result[2])},{int(result[3])},{post_txt}\n")
    finally:
        if trace_fh:
            trace_fh.close()
    runtime = time.perf_counter() - started

    return RunResult(
        seed=seed, system=system_name, dataset=dataset_name,
        y_true=y_true.copy(), y_pred=y_pred, state_ids=state_ids,
        concept_ids=concept_col.copy(),
        repo_size=int(getattr(system, "repository_size", 1)),
        runtime_s=runtime, config=dict(config or {}))


SUMMARY_METRICS = ("kappa", "c_f1", "accuracy", "transitions", "repo_size")


def aggregate(summaries: list[dict]) -> list[dict]:
    """Mean and sample (n-1) standard deviation per metric, grouped by
    (dataset, system). Wall-clock runtime is deliberately excluded so the
    output is byte-reproducible."""
    if not summaries:
        raise ValueError("nothing to aggregate")
    groups: dict[tuple[str, str], list[dict]] = {}
    for s in summaries:
        groups.setdefault((s["dataset"], s["system"]), []).append(s)
    rows = []
    for (dataset, system) in sorted(groups):
        runs = groups[(dataset, system)]
        row = {"dataset": dataset, "system": system, "runs": len(runs)}
        for metric in SUMMARY_METRICS:
            values = [r[metric] for r in runs if r.get(metric) is not None]
            if not values:
                row[f"{metric}_mean"] = None
                row[f"{metric}_std"] = None
                continue
            arr = np.asarray(values, dtype=np.float64)
            row[f"{metric}_mean"] = float(arr.mean())
            row[f"{metric}_std"] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
        rows.append(row)
    return rows


def write_summary_csv(rows: list[dict], path) -> None:
    cols = ["dataset", "system", "runs"]
    for metric in SUMMARY_METRICS:
        cols += [f"{metric}_mean", f"{metric}_std"]
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            cells = []
            for c in cols:
                v = row.get(c)
                if v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append(f"{v:.6f}")
                else:
                    cells.append(str(v))
            fh.write(",".join(cells) + "\n")


def write_summary_json(rows: list[dict], path) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps(rows, sort_keys=True, indent=2) + "\n")
