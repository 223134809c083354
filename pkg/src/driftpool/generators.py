"""Synthetic concept generators: STAGGER, random decision trees, WIND.

Each generator produces per-concept observation pools; experiment streams
are assembled from those pools by :mod:`driftpool.stream`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import fsolve

from .errors import GenerationError, InvalidSpecError
from .seeding import DOMAIN_CONCEPT, DOMAIN_POOL, rng_for
from .stream import Stream, StreamSpec, assemble_stream, build_transition_pattern, \
    inject_class_noise, pool_requirements, sample_segment_chain

# ---------------------------------------------------------------------------
# STAGGER

COLORS = ("red", "green", "blue")
SIZES = ("small", "medium", "large")
SHAPES = ("circle", "square", "triangle")


@dataclass(frozen=True)
class StaggerConcept:
    """One of the three classic STAGGER labelling rules."""

    rule_id: int

    def __post_init__(self):
        if self.rule_id not in (0, 1, 2):
            raise InvalidSpecError("STAGGER rule id must be 0, 1 or 2")


def stagger_label(rule_id: int, color: int, size: int, shape: int) -> int:
    """Canonical STAGGER rules on ordinal-encoded categories.

    rule 0: color=red and size=small
    rule 1: color=green or shape=circle
    rule 2: size=medium or size=large
    """
    if rule_id == 0:
        return int(color == 0 and size == 0)
    if rule_id == 1:
        return int(color == 1 or shape == 0)
    return int(size == 1 or size == 2)


def stagger_sample(concept: StaggerConcept, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform categorical draws labelled by the concept's rule.

    Features are ordinal-encoded 0..2 in the order (color, size, shape).
    """
    if n <= 0:
        raise InvalidSpecError("sample size must be positive")
    rng = rng_for(seed, DOMAIN_POOL, index=concept.rule_id)
    X = rng.integers(0, 3, size=(n, 3)).astype(np.float64)
    color, size, shape = X[:, 0], X[:, 1], X[:, 2]
    if concept.rule_id == 0:
        y = (color == 0) & (size == 0)
    elif concept.rule_id == 1:
        y = (color == 1) | (shape == 0)
    else:
        y = (size == 1) | (size == 2)
    return X, y.astype(np.int64)


# ---------------------------------------------------------------------------
# RandomTree

def moment_transform_coefficients(skew: float, kurtosis: float) -> tuple[float, float, float, float]:
    """Cubic-polynomial coefficients (a, b, c, d) mapping a standard normal
    Z to a + bZ + cZ**2 + dZ**3 with zero mean, unit variance and the target
    skew and (raw) kurtosis. The normal target (0, 3) maps to the identity.
    """
    g1 = float(skew)
    g2 = float(kurtosis) - 3.0  # excess
    if g1 == 0.0 and g2 == 0.0:
        return 0.0, 1.0, 0.0, 0.0

    def equations(params):
        b, c, d = params
        v = b * b + 6.0 * b * d + 2.0 * c * c + 15.0 * d * d - 1.0
        s = 2.0 * c * (b * b + 24.0 * b * d + 105.0 * d * d + 2.0) - g1
        k = 24.0 * (b * d + c * c * (1.0 + b * b + 28.0 * b * d)
                    + d * d * (12.0 + 48.0 * b * d + 141.0 * c * c + 225.0 * d * d)) - g2
        return v, s, k

    sol, info, ok, _ = fsolve(equations, x0=(1.0, g1 / 6.0, 0.0), full_output=True)
    if ok != 1 or max(abs(r) for r in equations(sol)) > 1e-8:
        raise GenerationError(f"no cubic moment transform for skew={g1}, kurtosis={kurtosis}")
    b, c, d = (float(v) for v in sol)
    return -c, b, c, d


@dataclass(frozen=True)
class FeatureDistribution:
    mean: float
    std: float
    skew: float
    kurtosis: float
    coeffs: tuple[float, float, float, float]

    def transform(self, z: np.ndarray) -> np.ndarray:
        a, b, c, d = self.coeffs
        return self.mean + self.std * (a + z * (b + z * (c + z * d)))


@dataclass(frozen=True)
class RandomTreeConcept:
    """A random binary decision tree plus the feature sampling distribution.

    Tree arrays are index-aligned: ``leaf_label[i] >= 0`` marks node i as a
    leaf, otherwise ``feature/threshold/left/right`` describe the split.
    """

    n_features: int
    n_classes: int
    complexity: int
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_label: np.ndarray
    distributions: tuple[FeatureDistribution, ...]

    def leaf_depths(self) -> list[int]:
        depths = []
        stack = [(0, 0)]
        while stack:
            node, depth = stack.pop()
            if self.leaf_label[node] >= 0:
                depths.append(depth)
            else:
                stack.append((self.left[node], depth + 1))
                stack.append((self.right[node], depth + 1))
        return depths

    def label(self, X: np.ndarray) -> np.ndarray:
        n = len(X)
        ptr = np.zeros(n, dtype=np.int64)
        max_depth = self.complexity + 2
        rows = np.arange(n)
        for _ in range(max_depth + 1):
            internal = self.leaf_label[ptr] < 0
            if not internal.any():
                break
            feat = self.feature[ptr]
            go_left = X[rows, feat] <= self.threshold[ptr]
            nxt = np.where(go_left, self.left[ptr], self.right[ptr])
            ptr = np.where(internal, nxt, ptr)
        return self.leaf_label[ptr].astype(np.int64)


def random_tree_concept(k: int, classes: int, d: int, seed: int) -> RandomTreeConcept:
    """Random binary tree with every leaf depth in [d, d+2].

    Split features and thresholds are seeded draws; leaves are labelled
    round-robin and then shuffled so all classes stay reachable.
    """
    if k < 1 or d < 1:
        raise InvalidSpecError("need k >= 1 features and complexity d >= 1")
    if classes > 2 ** d:
        raise InvalidSpecError(f"complexity {d} cannot host {classes} classes")
    rng = rng_for(seed, DOMAIN_CONCEPT)

    dists = []
    for _ in range(k):
        skew = float(rng.uniform(-0.7, 0.7))
        kurt = 3.0 + float(rng.uniform(0.2, 1.5)) + 2.0 * skew * skew
        mean = float(rng.uniform(-3.0, 3.0))
        std = float(rng.uniform(0.7, 2.0))
        dists.append(FeatureDistribution(mean, std, skew, kurt,
                                         moment_transform_coefficients(skew, kurt)))

    feature, threshold, left, right, leaf_label = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        leaf_label.append(-1)
        return len(feature) - 1

    def build(depth: int) -> int:
        node = new_node()
        is_leaf = depth >= d + 2 or (depth >= d and rng.random() < 0.5)
        if is_leaf:
            leaf_label[node] = 0  # placeholder, assigned below
            return node
        f = int(rng.integers(0, k))
        feature[node] = f
        # draw the cut in the central quantile band of the feature's own
        # distribution so both branches stay reachable
        z = float(rng.uniform(-1.2, 1.2))
        threshold[node] = float(dists[f].transform(np.asarray([z]))[0])
        left[node] = build(depth + 1)
        right[node] = build(depth + 1)
        return node

    build(0)
    leaf_idx = [i for i, lab in enumerate(leaf_label) if lab >= 0 and left[i] < 0]
    labels = np.array([i % classes for i in range(len(leaf_idx))], dtype=np.int64)
    rng.shuffle(labels)
    for i, node in enumerate(leaf_idx):
        leaf_label[node] = int(labels[i])

    return RandomTreeConcept(
        n_features=k, n_classes=classes, complexity=d,
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        leaf_label=np.asarray(leaf_label, dtype=np.int64),
        distributions=tuple(dists),
    )


def random_tree_sample(concept: RandomTreeConcept, n: int, seed: int,
                       max_draw_factor: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Sample features from the concept's distribution, label with its tree,
    and rebalance classes by per-class rejection to equal frequencies."""
    if n <= 0:
        raise InvalidSpecError("sample size must be positive")
    rng = rng_for(seed, DOMAIN_POOL)
    classes = concept.n_classes
    quota = np.full(classes, n // classes, dtype=np.int64)
    quota[: n % classes] += 1

    taken = np.zeros(classes, dtype=np.int64)
    X_parts, y_parts = [], []
    drawn = 0
    batch = max(1024, n)
    while taken.sum() < n:
        if drawn >= max_draw_factor * n:
            missing = [c for c in range(classes) if taken[c] < quota[c]]
            raise GenerationError(f"classes {missing} unreachable after {drawn} draws")
        z = rng.standard_normal((batch, concept.n_features))
        Xb = np.column_stack([concept.distributions[f].transform(z[:, f])
                              for f in range(concept.n_features)])
        yb = concept.label(Xb)
        drawn += batch
        room = quota - taken
        keep = np.zeros(batch, dtype=bool)
        for c in range(classes):
            cls_rows = np.flatnonzero(yb == c)[: room[c]]
            keep[cls_rows] = True
            taken[c] += len(cls_rows)
        X_parts.append(Xb[keep])
        y_parts.append(yb[keep])

    X = np.concatenate(X_parts)[:n]
    y = np.concatenate(y_parts)[:n]
    return X, y


# ---------------------------------------------------------------------------
# WIND

@dataclass(frozen=True)
class WindSource:
    position: tuple[float, float]
    strength: float
    variance: float
    rate: float


@dataclass(frozen=True)
class WindConcept:
    """Pollution-field recipe: sources upwind of a central target sensor."""

    sources: tuple[WindSource, ...]
    wind_speed: float
    wind_direction: float
    sensor_count: int = 8
    ring_radius: float = 1.0
    thresholds: tuple[float, float] = (0.0, 0.0)
    sensor_noise: float = 0.01
    sigma0: float = 0.5
    sigma_growth: float = 0.3

    @property
    def n_features(self) -> int:
        return 2 * self.sensor_count


class _WindSimulator:
    """Advecting Gaussian-puff field sampled at a ring of sensors."""

    MAX_TRAVEL = 25.0

    def __init__(self, concept: WindConcept, rng: np.random.Generator,
                 noise_free: bool = False):
        self.concept = concept
        self.rng = rng
        self.noise_free = noise_free
        angles = 2.0 * math.pi * np.arange(concept.sensor_count) / concept.sensor_count
        ring = concept.ring_radius * np.column_stack([np.cos(angles), np.sin(angles)])
        self.sensors = np.vstack([ring, [[0.0, 0.0]]])  # target sensor last
        self.wind_vec = concept.wind_speed * np.asarray(
            [math.cos(concept.wind_direction), math.sin(concept.wind_direction)])
        self.pos = np.empty((0, 2))
        self.mass = np.empty(0)
        self.travel = np.empty(0)

    def step(self) -> tuple[np.ndarray, float]:
        c = self.concept
        new_pos, new_mass = [], []
        for src in c.sources:
            if self.rng.random() < src.rate:
                noise = 0.0 if self.noise_free else self.rng.normal(0.0, math.sqrt(src.variance))
                new_pos.append(src.position)
                new_mass.append(max(0.0, src.strength + noise))
        if new_pos:
            self.pos = np.vstack([self.pos, np.asarray(new_pos)])
            self.mass = np.concatenate([self.mass, np.asarray(new_mass)])
            self.travel = np.concatenate([self.travel, np.zeros(len(new_pos))])

        self.pos = self.pos + self.wind_vec
        self.travel = self.travel + c.wind_speed
        alive = self.travel <= self.MAX_TRAVEL
        if not alive.all():
            self.pos, self.mass, self.travel = self.pos[alive], self.mass[alive], self.travel[alive]

        if len(self.mass):
            sigma = c.sigma0 + c.sigma_growth * self.travel
            diff = self.sensors[:, None, :] - self.pos[None, :, :]
            sq = (diff * diff).sum(axis=2)
            dens = self.mass / (2.0 * math.pi * sigma * sigma) * np.exp(-sq / (2.0 * sigma * sigma))
            readings = dens.sum(axis=1)
        else:
            readings = np.zeros(len(self.sensors))
        return readings[:-1], float(readings[-1])


def wind_concept(seed: int, sensor_count: int = 8) -> WindConcept:
    """Random WIND concept; quantization thresholds come from the empirical
    terciles of the target concentration over a 2000-step warmup run."""
    if sensor_count < 3:
        raise InvalidSpecError("need at least 3 ring sensors")
    rng = rng_for(seed, DOMAIN_CONCEPT)
    speed = float(rng.uniform(0.2, 0.5))
    direction = float(rng.uniform(0.0, 2.0 * math.pi))
    n_sources = int(rng.integers(1, 4))
    sources = []
    for _ in range(n_sources):
        dist = float(rng.uniform(2.0, 5.0))
        jitter = float(rng.uniform(-0.6, 0.6))
        angle = direction + math.pi + jitter
        pos = (dist * math.cos(angle), dist * math.sin(angle))
        sources.append(WindSource(position=pos,
                                  strength=float(rng.uniform(5.0, 15.0)),
                                  variance=float(rng.uniform(0.0, 2.0)),
                                  rate=float(rng.uniform(0.3, 1.0))))
    concept = WindConcept(sources=tuple(sources), wind_speed=speed,
                          wind_direction=direction, sensor_count=sensor_count)

    warm = _WindSimulator(concept, rng_for(seed, DOMAIN_CONCEPT, index=1))
    targets = np.array([warm.step()[1] for _ in range(2000)])
    t1, t2 = np.quantile(targets, [1.0 / 3.0, 2.0 / 3.0])
    return WindConcept(sources=concept.sources, wind_speed=speed,
                       wind_direction=direction, sensor_count=sensor_count,
                       thresholds=(float(t1), float(t2)))


def wind_quantize(concept: WindConcept, target_concentration: float) -> int:
    t1, t2 = concept.thresholds
    if target_concentration <= t1:
        return 0
    if target_concentration <= t2:
        return 1
    return 2


def wind_sample(concept: WindConcept, n: int, seed: int, spin_up: int = 100,
                noise_free: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Run the field simulation for ``n`` observations.

    Features are current plus previous readings of the ring sensors; the
    label is the quantized (noise-free) target concentration.
    """
    if n <= 0:
        raise InvalidSpecError("sample size must be positive")
    rng = rng_for(seed, DOMAIN_POOL)
    sim = _WindSimulator(concept, rng, noise_free=noise_free)
    prev = np.zeros(concept.sensor_count)
    for _ in range(spin_up):
        prev, _ = sim.step()
    X = np.empty((n, concept.n_features))
    y = np.empty(n, dtype=np.int64)
    for i in range(n):
        readings, target = sim.step()
        row = np.concatenate([readings, prev])
        if not noise_free:
            row = row + rng.normal(0.0, concept.sensor_noise, size=row.shape)
        X[i] = row
        y[i] = wind_quantize(concept, target)
        prev = readings
    return X, y


# ---------------------------------------------------------------------------
# Benchmark stream assembly

DATASET_DEFAULTS = {
    "stagger": dict(n_concepts=3, segments=18, segment_length=5000, n_features=3, n_classes=2),
    "tree": dict(n_concepts=6, segments=18, segment_length=5000, n_features=10, n_classes=2),
    "wind": dict(n_concepts=6, segments=18, segment_length=5000, n_features=16, n_classes=3),
}

TRANSITION_DECAY = 0.7
FORWARD_CONNECTIONS = 3


def default_stream_spec(dataset: str, seed: int, segments: int | None = None,
                        segment_length: int | None = None, drift_width: int = 0,
                        noise_fraction: float = 0.0, transition_noise: float = 0.0,
                        complexity: int = 3) -> StreamSpec:
    if dataset not in DATASET_DEFAULTS:
        raise InvalidSpecError(f"unknown dataset {dataset!r}; choose from "
                               f"{sorted(DATASET_DEFAULTS)}")
    defaults = DATASET_DEFAULTS[dataset]
    return StreamSpec(
        generator=dataset,
        n_concepts=defaults["n_concepts"],
        segment_length=defaults["segment_length"] if segment_length is None else segment_length,
        seed=seed,
        drift_width=drift_width,
        noise_fraction=noise_fraction,
        segments=defaults["segments"] if segments is None else segments,
        generator_params={"transition_noise": transition_noise, "complexity": complexity},
    )


def concept_pools(spec: StreamSpec, sizes: dict[int, int]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Generate one observation pool per concept, sized per ``sizes``."""
    pools = {}
    complexity = int(spec.generator_params.get("complexity", 3))
    for cid, size in sizes.items():
        pool_seed = spec.seed * 1000 + cid
        if spec.generator == "stagger":
            pools[cid] = stagger_sample(StaggerConcept(rule_id=cid), size, pool_seed)
        elif spec.generator == "tree":
            concept = random_tree_concept(10, 2, complexity, pool_seed)
            pools[cid] = random_tree_sample(concept, size, pool_seed)
        elif spec.generator == "wind":
            concept = wind_concept(pool_seed)
            pools[cid] = wind_sample(concept, size, pool_seed)
        else:
            raise InvalidSpecError(f"unknown generator {spec.generator!r}")
    return pools


def build_benchmark_stream(spec: StreamSpec):
    """Materialize a benchmark stream: pattern, chain, pools, assembly, noise."""
    tn = float(spec.generator_params.get("transition_noise", 0.0))
    pattern = build_transition_pattern(range(spec.n_concepts), TRANSITION_DECAY,
                                       min(FORWARD_CONNECTIONS, spec.n_concepts - 1),
                                       tn, spec.seed)
    chain = sample_segment_chain(spec, pattern)
    pools = concept_pools(spec, pool_requirements(spec, chain))
    stream, segments = assemble_stream(spec, pattern, pools)
    if spec.noise_fraction > 0.0:
        stream = inject_class_noise(stream, spec.noise_fraction, spec.seed)
    return stream, segments
