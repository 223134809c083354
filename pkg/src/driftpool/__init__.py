"""driftpool: streaming classification under recurring concept drift.

A repository of per-concept states (incremental classifier + fingerprint
representation) is maintained over a data stream; every observation is
handled by the state continuously selected as most relevant through a
Bayesian prior/likelihood model and a Hoeffding-bound stability test.
"""

from .adwin import Adwin
from .engine import SelectParams, StatePoolClassifier, StepResult
from .evaluation import RunResult, aggregate, c_f1, kappa, prequential_run, rolling_accuracy
from .fingerprint import (BehaviourWindows, FingerprintNormalizer, RunningStats,
                          fisher_weights, meta_features, weighted_cosine_similarity)
from .generators import (RandomTreeConcept, StaggerConcept, WindConcept,
                         build_benchmark_stream, default_stream_spec, random_tree_concept,
                         random_tree_sample, stagger_sample, wind_concept, wind_sample)
from .hoeffding_tree import HoeffdingTreeClassifier, MajorityClassClassifier, hoeffding_bound
from .baselines import (LowerBoundClassifier, UpperBoundClassifier, lower_bound_run,
                        make_system, select_run, sparse_mode_run, upper_bound_run)
from .stream import (ConceptSegment, Observation, Stream, StreamSpec, TransitionPattern,
                     assemble_stream, build_transition_pattern, inject_class_noise,
                     load_csv_stream, sample_segment_chain, write_csv_stream)

__version__ = "0.1.0"

__all__ = [
    "Adwin", "SelectParams", "StatePoolClassifier", "StepResult",
    "RunResult", "aggregate", "c_f1", "kappa", "prequential_run", "rolling_accuracy",
    "BehaviourWindows", "FingerprintNormalizer", "RunningStats",
    "fisher_weights", "meta_features", "weighted_cosine_similarity",
    "RandomTreeConcept", "StaggerConcept", "WindConcept",
    "build_benchmark_stream", "default_stream_spec", "random_tree_concept",
    "random_tree_sample", "stagger_sample", "wind_concept", "wind_sample",
    "HoeffdingTreeClassifier", "MajorityClassClassifier", "hoeffding_bound",
    "LowerBoundClassifier", "UpperBoundClassifier", "lower_bound_run",
    "make_system", "select_run", "sparse_mode_run", "upper_bound_run",
    "ConceptSegment", "Observation", "Stream", "StreamSpec", "TransitionPattern",
    "assemble_stream", "build_transition_pattern", "inject_class_noise",
    "load_csv_stream", "sample_segment_chain", "write_csv_stream",
]
