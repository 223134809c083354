"""Stream data model: observations, concept schedules, and stream assembly.

A stream is a fixed-arity sequence of labelled feature vectors, optionally
annotated with the ground-truth concept that generated each observation.
Experiment streams are assembled by walking a circular transition pattern
over per-concept observation pools, with optional gradual-drift mixing and
label noise.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import CsvFormatError, InvalidSpecError
from .seeding import DOMAIN_CHAIN, DOMAIN_NOISE, DOMAIN_PATTERN, rng_for

MAX_CONCEPTS_PER_STREAM = 6


@dataclass(frozen=True)
class Observation:
    """One timestep: feature vector, label, optional ground-truth concept."""

    t: int
    x: np.ndarray
    y: int
    concept_id: int | None = None


@dataclass(frozen=True)
class ConceptSegment:
    """A scheduled run of observations drawn from one concept."""

    concept_id: int
    length: int
    drift_width: int = 0

    def __post_init__(self):
        if self.length <= 0:
            raise InvalidSpecError("segment length must be positive")
        if not 0 <= self.drift_width < self.length:
            raise InvalidSpecError("drift width must lie in [0, length)")


class Stream:
    """Array-backed observation sequence.

    ``concept`` uses -1 for observations with no ground-truth annotation.
    Supports ``len``, indexing (returning :class:`Observation`) and
    iteration, so it can be treated as a plain observation sequence.
    """

    def __init__(self, X: np.ndarray, y: np.ndarray, concept: np.ndarray | None = None,
                 n_classes: int | None = None):
        self.X = np.asarray(X, dtype=np.float64)
        self.y = np.asarray(y, dtype=np.int64)
        if self.X.ndim != 2 or self.y.ndim != 1 or len(self.X) != len(self.y):
            raise InvalidSpecError("feature matrix and labels must align")
        if concept is None:
            concept = np.full(len(self.y), -1, dtype=np.int64)
        self.concept = np.asarray(concept, dtype=np.int64)
        if len(self.concept) != len(self.y):
            raise InvalidSpecError("concept annotations must align with labels")
        if n_classes is None:
            n_classes = int(self.y.max()) + 1 if len(self.y) else 0
        self.n_classes = int(n_classes)
        if len(self.y) and self.y.max() >= self.n_classes:
            raise InvalidSpecError("label exceeds declared class count")

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def has_concepts(self) -> bool:
        return len(self.concept) > 0 and bool((self.concept >= 0).all())

    def __len__(self) -> int:
        return len(self.y)

    def __getitem__(self, t: int) -> Observation:
        cid = int(self.concept[t])
        return Observation(t=t, x=self.X[t], y=int(self.y[t]),
                           concept_id=None if cid < 0 else cid)

    def __iter__(self):
        for t in range(len(self)):
            yield self[t]


@dataclass(frozen=True)
class TransitionPattern:
    """Row-stochastic concept transition matrix plus its construction knobs."""

    concepts: tuple[int, ...]
    matrix: np.ndarray
    decay: float
    forward_connections: int
    transition_noise: float

    def __post_init__(self):
        rows = self.matrix.sum(axis=1)
        if not np.allclose(rows, 1.0, atol=1e-9):
            raise InvalidSpecError("transition rows must sum to 1")


@dataclass
class StreamSpec:
    """Recipe for one experiment stream."""

    generator: str
    n_concepts: int
    repetitions: int = 3
    segment_length: int = 5000
    seed: int = 1
    drift_width: int = 0
    noise_fraction: float = 0.0
    segments: int | None = None
    generator_params: dict = field(default_factory=dict)

    def segment_count(self) -> int:
        if self.segments is not None:
            return int(self.segments)
        return self.repetitions * min(self.n_concepts, MAX_CONCEPTS_PER_STREAM)

    def total_length(self) -> int:
        return self.segment_count() * self.segment_length


def build_transition_pattern(concepts, p: float, F: int, tn: float, seed: int) -> TransitionPattern:
    """Circular transition pattern with decaying forward connections.

    Concepts are shuffled into a ring; each concept links to the F concepts
    following it with unnormalized weight p**f (f = 1..F), rows are
    normalized and then mixed with the uniform distribution with weight tn.
    """
    concepts = [int(c) for c in concepts]
    n = len(concepts)
    if n < 2:
        raise InvalidSpecError("a transition pattern needs at least 2 concepts")
    if not 0.0 < p <= 1.0:
        raise InvalidSpecError("decay p must lie in (0, 1]")
    if not 0.0 <= tn <= 1.0:
        raise InvalidSpecError("transition noise must lie in [0, 1]")
    F = int(F)
    if F < 1:
        raise InvalidSpecError("forward connections must be >= 1")
    F = min(F, n - 1)  # a ring of n concepts has at most n-1 forward targets

    rng = rng_for(seed, DOMAIN_PATTERN)
    order = list(rng.permutation(n))
    pos = {order[i]: i for i in range(n)}
    matrix = np.zeros((n, n))
    for i in range(n):
        ring_i = pos[i]
        for f in range(1, F + 1):
            j = order[(ring_i + f) % n]
            matrix[i, j] = p ** f
    matrix /= matrix.sum(axis=1, keepdims=True)
    matrix = (1.0 - tn) * matrix + tn / n
    return TransitionPattern(concepts=tuple(concepts), matrix=matrix, decay=p,
                             forward_connections=F, transition_noise=tn)


def sample_segment_chain(spec: StreamSpec, pattern: TransitionPattern) -> list[int]:
    """Seeded random walk over the pattern giving the segment concept order."""
    n_segments = spec.segment_count()
    rng = rng_for(spec.seed, DOMAIN_CHAIN)
    n = len(pattern.concepts)
    current = int(rng.integers(0, n))
    chain = [pattern.concepts[current]]
    for _ in range(n_segments - 1):
        current = int(rng.choice(n, p=pattern.matrix[current]))
        chain.append(pattern.concepts[current])
    return chain


def pool_requirements(spec: StreamSpec, chain: list[int]) -> dict[int, int]:
    """Upper bound on observations consumed from each concept's pool.

    During a gradual transition up to ``drift_width`` extra draws come from
    the outgoing concept, so each occurrence adds that margin.
    """
    need: dict[int, int] = {}
    for cid in chain:
        need[cid] = need.get(cid, 0) + spec.segment_length + spec.drift_width
    return need


def assemble_stream(spec: StreamSpec, pattern: TransitionPattern,
                    pools: dict[int, tuple[np.ndarray, np.ndarray]]):
    """Assemble a stream by drawing segments from per-concept pools.

    Returns ``(stream, segments)``. Pools map concept id to ``(X, y)``
    arrays; draws are consecutive so recurrences continue where the last
    occurrence stopped. With ``drift_width`` w > 0 the first w observations
    of each segment (except the first) are probabilistically interleaved
    with the outgoing concept, the probability of drawing the incoming
    concept rising linearly from 0 to 1 across the window. Each
    observation is annotated with the concept actually sampled.
    """
    chain = sample_segment_chain(spec, pattern)
    w = spec.drift_width
    if w >= spec.segment_length:
        raise InvalidSpecError("drift width must be smaller than the segment length")
    for cid in chain:
        if cid not in pools:
            raise InvalidSpecError(f"no pool provided for concept {cid}")
        if len(pools[cid][1]) < spec.segment_length:
            raise InvalidSpecError(f"pool for concept {cid} is smaller than one segment")

    rng = rng_for(spec.seed, DOMAIN_CHAIN, index=1)
    cursors = {cid: 0 for cid in pools}
    n_features = next(iter(pools.values()))[0].shape[1]
    total = spec.total_length()
    X = np.empty((total, n_features))
    y = np.empty(total, dtype=np.int64)
    concept = np.empty(total, dtype=np.int64)
    segments = []

    def draw(cid: int):
        pool_X, pool_y = pools[cid]
        i = cursors[cid]
        if i >= len(pool_y):
            raise InvalidSpecError(f"pool for concept {cid} exhausted")
        cursors[cid] = i + 1
        return pool_X[i], int(pool_y[i])

    t = 0
    for seg_idx, cid in enumerate(chain):
        prev_cid = chain[seg_idx - 1] if seg_idx > 0 else None
        width = w if (w > 0 and prev_cid is not None and prev_cid != cid) else 0
        segments.append(ConceptSegment(concept_id=cid, length=spec.segment_length,
                                       drift_width=width))
        for i in range(spec.segment_length):
            if i < width and rng.random() >= (i + 1) / (width + 1):
                source = prev_cid
            else:
                source = cid
            X[t], y[t] = draw(source)
            concept[t] = source
            t += 1

    n_classes = max(int(pool_y.max()) + 1 for _, pool_y in pools.values())
    return Stream(X, y, concept, n_classes=n_classes), segments


def inject_class_noise(stream: Stream, fraction: float, seed: int) -> Stream:
    """Replace labels of exactly ``floor(fraction * n)`` observations with
    uniform draws over the class set. Features and concepts are untouched."""
    if not 0.0 <= fraction <= 1.0:
        raise InvalidSpecError("noise fraction must lie in [0, 1]")
    y = stream.y.copy()
    n_noisy = int(np.floor(fraction * len(y)))
    if n_noisy:
        rng = rng_for(seed, DOMAIN_NOISE)
        idx = rng.choice(len(y), size=n_noisy, replace=False)
        y[idx] = rng.integers(0, stream.n_classes, size=n_noisy)
    return Stream(stream.X.copy(), y, stream.concept.copy(), n_classes=stream.n_classes)


def _format_float(v: float) -> str:
    return repr(float(v))


def write_csv_stream(stream: Stream, path) -> None:
    """Write the canonical dataset CSV: ``f0,...,f{k-1},y,concept``."""
    k = stream.n_features
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"f{i}" for i in range(k)] + ["y", "concept"])
        for t in range(len(stream)):
            cid = stream.concept[t]
            row = [_format_float(v) for v in stream.X[t]]
            row.append(str(int(stream.y[t])))
            row.append("" if cid < 0 else str(int(cid)))
            writer.writerow(row)


def load_csv_stream(path) -> Stream:
    """Load a dataset CSV written by :func:`write_csv_stream`.

    The concept column is optional; empty cells mean "no annotation".
    Malformed rows raise :class:`CsvFormatError` naming the line.
    """
    with open(path, "r", newline="") as fh:
        return _parse_csv(fh)


def _parse_csv(fh) -> Stream:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise CsvFormatError(1, "missing header") from None
    header = [h.strip() for h in header]
    has_concept = header and header[-1] == "concept"
    feat_cols = header[:-2] if has_concept else header[:-1]
    k = len(feat_cols)
    expected = [f"f{i}" for i in range(k)] + ["y"] + (["concept"] if has_concept else [])
    if k < 1 or header != expected:
        raise CsvFormatError(1, f"expected header f0,...,f{{k-1}},y[,concept], got {','.join(header)}")

    X_rows, y_rows, c_rows = [], [], []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise CsvFormatError(line_no, f"expected {len(header)} fields, got {len(row)} "
                                          f"({k} features declared in header)")
        try:
            X_rows.append([float(v) for v in row[:k]])
        except ValueError:
            raise CsvFormatError(line_no, "non-numeric feature value") from None
        try:
            y_rows.append(int(row[k]))
        except ValueError:
            raise CsvFormatError(line_no, "non-integer label") from None
        if has_concept:
            cell = row[k + 1].strip()
            if cell == "":
                c_rows.append(-1)
            else:
                try:
                    c_rows.append(int(cell))
                except ValueError:
                    raise CsvFormatError(line_no, "non-integer concept id") from None
        else:
            c_rows.append(-1)

    X = np.asarray(X_rows, dtype=np.float64).reshape(len(y_rows), k)
    y = np.asarray(y_rows, dtype=np.int64)
    concept = np.asarray(c_rows, dtype=np.int64)
    return Stream(X, y, concept)


def loads_csv_stream(text: str) -> Stream:
    return _parse_csv(io.StringIO(text))
