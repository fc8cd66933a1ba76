"""commalign: weakly-supervised alignment of commentary to event logs."""

from .corpus import (
    Bucket,
    Corpus,
    CorpusConfig,
    Event,
    GroundTruth,
    Sentence,
    Vocabulary,
    build_buckets,
    build_vocabulary,
    load_commentary,
    load_events,
    load_ground_truth,
    tokenize,
)
from .exemplar import (
    PairKey,
    PairModel,
    TrainerConfig,
    confidence,
    eligible_pairs,
    generate_negatives,
    inspect_model,
    solve_soft_margin,
    train_pair_model,
)
from .features import FeatureSpace, FeatureVector, build_feature_space, featurize, string_match_count
from .macro import MacroEvent, SearchConfig, brute_force_search, greedy_macro_search, marginal_gain
from .metrics import AlignmentResult, MetricsReport, compute_metrics
from .pagerank import PairGraph, RankConfig, RankState, build_pair_graph, run_pair_rank, scores_per_bucket
from .pipeline import baseline_no_pairmodel, baseline_no_pairrank, run_pipeline, run_sweep
from .synth import SynthParams, generate_synthetic_corpus

__version__ = "0.1.0"
