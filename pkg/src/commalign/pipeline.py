"""End-to-end alignment pipeline, ablation baselines, and the k sweep.

Stages: corpus ingest (or synthetic generation) -> buckets -> feature space
-> per-pair models -> popularity ranking -> greedy macro search -> metrics
and artifacts. Every stage is deterministic for a fixed seed; artifacts
`alignment.jsonl` and `metrics.json` are byte-stable across reruns.

Scoring a candidate macro event entails training its pair model, adding a
node to the pair graph, and re-running the popularity iteration. Two modes
are provided: "faithful" rebuilds ranks from scratch and iterates from the
uniform state; "warmstart" (default) splices the node into the converged
base graph, shifting existing rank products where the new node overtakes a
neighbor, and restarts the iteration from the converged scores. Both reach
the same fixed point; warmstart just gets there in far fewer sweeps.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import exemplar
from .corpus import (
    Corpus,
    CorpusConfig,
    GroundTruth,
    corpus_digest,
    load_commentary,
    load_events,
    load_ground_truth,
    build_vocabulary,
)
from .exemplar import (
    PairKey,
    PairModel,
    TrainerConfig,
    eligible_pairs,
    inspect_model,
    save_models,
    train_pair_model,
)
from .features import FeatureSpace, build_feature_space, featurize
from .macro import MacroEvent, SearchConfig, SearchResult, greedy_macro_search
from .metrics import AlignmentResult, MetricsReport, compute_metrics
from .pagerank import (
    PairGraph,
    RankConfig,
    RankState,
    graph_from_confidences,
    run_pair_rank,
    scores_per_bucket,
)
from .synth import SynthParams, generate_synthetic_corpus

__all__ = [
    "PipelineError",
    "PipelineContext",
    "MacroRankEvaluator",
    "prepare",
    "align_corpus",
    "run_pipeline",
    "run_sweep",
    "baseline_no_pairmodel",
    "baseline_no_pairrank",
    "parse_config",
]

logger = logging.getLogger(__name__)


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class PipelineConfig:
    corpus_paths: tuple[str, str, str] | None
    synth: SynthParams | None
    corpus_config: CorpusConfig
    string_mode: str
    trainer: TrainerConfig
    rank_d: float
    rank_epsilon: float
    rank_max_iters: int
    search: SearchConfig
    search_mode: str
    sweep_ks: tuple[int, ...]
    seed: int
    workers: int
    raw: Mapping[str, object] = field(default_factory=dict)


def parse_config(data: Mapping[str, object]) -> PipelineConfig:
    """Validate and resolve the section-structured config mapping."""
    corpus_sec = dict(data.get("corpus", {}))
    seed = int(data.get("seed", 0))

    synth = None
    corpus_paths = None
    if "synth" in corpus_sec:
        synth_args = dict(corpus_sec["synth"])
        synth_args.setdefault("seed", seed)
        synth = SynthParams(**synth_args)
    else:
        try:
            corpus_paths = (
                str(corpus_sec["commentary"]),
                str(corpus_sec["events"]),
                str(corpus_sec["truth"]),
            )
        except KeyError as exc:
            raise ValueError(
                "corpus section needs either a 'synth' block or "
                "'commentary'/'events'/'truth' paths"
            ) from exc

    corpus_config = CorpusConfig(
        window_half=float(corpus_sec.get("window_half", 75.0)),
        vocab_min_freq=int(corpus_sec.get("vocab_min_freq", 5)),
        seed=seed,
        bucket_cap=(
            int(corpus_sec["bucket_cap"])
            if corpus_sec.get("bucket_cap") is not None
            else None
        ),
    )

    feat_sec = dict(data.get("features", {}))
    trainer_sec = dict(data.get("trainer", {}))
    trainer_sec.setdefault("seed", seed)
    trainer = TrainerConfig(
        C=float(trainer_sec.get("C", 100.0)),
        num_negatives=int(trainer_sec.get("num_negatives", 100)),
        neighborhood=int(trainer_sec.get("neighborhood", 25)),
        positive_weight_mode=str(trainer_sec.get("positive_weight_mode", "balanced")),
        seed=int(trainer_sec["seed"]),
        tol=float(trainer_sec.get("tol", 1e-4)),
        min_negatives=int(trainer_sec.get("min_negatives", 20)),
    )

    rank_sec = dict(data.get("rank", {}))
    search_sec = dict(data.get("search", {}))
    search = SearchConfig(
        k=int(search_sec.get("k", 4)),
        stop_on_nonpositive_gain=bool(search_sec.get("stop_on_nonpositive_gain", True)),
        alignment_threshold=(
            float(search_sec["tau"]) if search_sec.get("tau") is not None else None
        ),
    )
    search_mode = str(search_sec.get("mode", "warmstart"))
    if search_mode not in ("warmstart", "faithful"):
        raise ValueError(f"unknown search mode {search_mode!r}")

    eval_sec = dict(data.get("eval", {}))
    sweep_ks = tuple(int(k) for k in eval_sec.get("ks", (1, 2, 3, 4)))

    return PipelineConfig(
        corpus_paths=corpus_paths,
        synth=synth,
        corpus_config=corpus_config,
        string_mode=str(feat_sec.get("string_mode", "count")),
        trainer=trainer,
        rank_d=float(rank_sec.get("d", 0.5)),
        rank_epsilon=float(rank_sec.get("epsilon", 1e-6)),
        rank_max_iters=int(rank_sec.get("max_iters", 200)),
        search=search,
        search_mode=search_mode,
        sweep_ks=sweep_ks,
        seed=seed,
        workers=int(data.get("workers", 1)),
        raw=data,
    )


# ---------------------------------------------------------------------------
# Confidence providers


class ModelConfidenceProvider:
    """Trained exemplar models as the pairwise confidence source."""

    def __init__(
        self,
        corpus: Corpus,
        space: FeatureSpace,
        models: Sequence[PairModel],
        trainer: TrainerConfig,
    ):
        self.corpus = corpus
        self.space = space
        self.trainer = trainer
        self.models = list(models)
        self.nodes = [m.key for m in self.models]
        self.node_mat = _node_matrix(corpus, space, self.nodes)
        self.thetas = np.stack([m.theta for m in self.models])
        self.biases = np.array([m.bias for m in self.models])

    def base_matrix(self) -> np.ndarray:
        return self.thetas @ self.node_mat.T + self.biases[:, None]

    def macro_scores(
        self, sentence_id: str, event_ids: tuple[str, ...]
    ) -> tuple[np.ndarray, np.ndarray, float]:
        key = PairKey(sentence_id, event_ids)
        model = train_pair_model(key, self.corpus, self.space, self.trainer)
        member_mat = _member_matrix(self.corpus, self.space, key)
        v_on_nodes = model.theta @ self.node_mat.T + model.bias
        nodes_on_v = (self.thetas @ member_mat.T + self.biases[:, None]).max(axis=1)
        self_conf = float((model.theta @ member_mat.T + model.bias).max())
        return v_on_nodes, nodes_on_v, self_conf


class SimilarityConfidenceProvider:
    """Non-discriminative replacement: monotone transform of the negated
    Euclidean distance between pair feature vectors (always positive so
    mutual-likeness edges stay well defined; rank structure is unchanged)."""

    def __init__(self, corpus: Corpus, space: FeatureSpace, nodes: Sequence[PairKey]):
        self.corpus = corpus
        self.space = space
        self.nodes = list(nodes)
        self.node_mat = _node_matrix(corpus, space, self.nodes)

    @staticmethod
    def similarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        sq = (
            (a * a).sum(axis=-1)[..., None]
            + (b * b).sum(axis=-1)[None, ...]
            - 2.0 * (a @ b.T)
        )
        return 1.0 / (1.0 + np.sqrt(np.maximum(sq, 0.0)))

    def base_matrix(self) -> np.ndarray:
        return self.similarity(self.node_mat, self.node_mat)

    def macro_scores(
        self, sentence_id: str, event_ids: tuple[str, ...]
    ) -> tuple[np.ndarray, np.ndarray, float]:
        member_mat = _member_matrix(
            self.corpus, self.space, PairKey(sentence_id, event_ids)
        )
        sims = self.similarity(self.node_mat, member_mat).max(axis=1)
        return sims.copy(), sims.copy(), 1.0


def _node_matrix(
    corpus: Corpus, space: FeatureSpace, nodes: Sequence[PairKey]
) -> np.ndarray:
    rows = []
    for key in nodes:
        sentence = corpus.sentences_by_id[key.sentence_id]
        bucket = corpus.bucket_of[key.sentence_id]
        if len(key.event_ids) != 1:
            raise ValueError("node matrix is defined for unit pairs only")
        vec = featurize(
            sentence, corpus.events_by_id[key.event_ids[0]], bucket, space,
            corpus.events_by_id,
        )
        rows.append(vec.to_dense())
    return np.stack(rows) if rows else np.zeros((0, space.dim))


def _member_matrix(corpus: Corpus, space: FeatureSpace, key: PairKey) -> np.ndarray:
    sentence = corpus.sentences_by_id[key.sentence_id]
    bucket = corpus.bucket_of[key.sentence_id]
    rows = [
        featurize(
            sentence, corpus.events_by_id[eid], bucket, space, corpus.events_by_id
        ).to_dense()
        for eid in key.event_ids
    ]
    return np.stack(rows)


def _node_types(corpus: Corpus, key: PairKey) -> tuple[str, ...]:
    return tuple(corpus.events_by_id[eid].event_type for eid in key.event_ids)


# ---------------------------------------------------------------------------
# Macro ranking evaluator


class MacroRankEvaluator:
    """rank_fn backend: popularity score of the (possibly macro) pair node."""

    def __init__(
        self,
        provider: ModelConfidenceProvider | SimilarityConfidenceProvider,
        corpus: Corpus,
        rank_config: RankConfig,
        mode: str = "warmstart",
    ):
        if mode not in ("warmstart", "faithful"):
            raise ValueError(f"unknown evaluator mode {mode!r}")
        self.provider = provider
        self.corpus = corpus
        self.rank_config = rank_config
        self.mode = mode
        self.nodes = list(provider.nodes)
        self.conf = provider.base_matrix()
        self.node_types = tuple(_node_types(corpus, k) for k in self.nodes)
        self.graph = graph_from_confidences(
            self.nodes, self.conf, self.node_types, keep_conf=True
        )
        self.state0 = run_pair_rank(self.graph, rank_config)
        self.unit_value = {
            key: float(score) for key, score in zip(self.nodes, self.state0.rho)
        }
        self._cache: dict[tuple[str, frozenset[str]], float] = {}
        self._prepare_incremental()

    def _prepare_incremental(self) -> None:
        n = len(self.nodes)
        pos_counts = (self.conf > 0).sum(axis=1) if n else np.zeros(0, dtype=int)
        width = int(pos_counts.max()) if n and pos_counts.max() > 0 else 1
        self.row_sorted = np.full((n, width), -np.inf)
        for i in range(n):
            row = self.conf[i][self.conf[i] > 0]
            if len(row):
                self.row_sorted[i, : len(row)] = np.sort(row)[::-1]
        g = self.graph
        self.c_ij = g.conf[g.edge_i, g.edge_j] if n else np.zeros(0)
        self.c_ji = g.conf[g.edge_j, g.edge_i] if n else np.zeros(0)
        order = sorted(
            range(n), key=lambda i: (self.nodes[i].sentence_id, self.nodes[i].event_ids)
        )
        self.tie_rank = np.empty(n)
        self.tie_rank[np.array(order, dtype=np.int64)] = np.arange(n)
        self._sorted_keys = [
            (self.nodes[i].sentence_id, self.nodes[i].event_ids) for i in order
        ]

    # -- public callable ----------------------------------------------------

    def __call__(self, sentence_id: str, event_ids: Sequence[str]) -> float:
        event_ids = tuple(event_ids)
        if not event_ids:
            return 0.0
        if len(event_ids) == 1:
            return self.unit_value.get(PairKey(sentence_id, event_ids), -math.inf)
        cache_key = (sentence_id, frozenset(event_ids))
        if cache_key not in self._cache:
            self._cache[cache_key] = self._evaluate(sentence_id, event_ids)
        return self._cache[cache_key]

    # -- internals ----------------------------------------------------------

    def _evaluate(self, sentence_id: str, event_ids: tuple[str, ...]) -> float:
        v_on_nodes, nodes_on_v, self_conf = self.provider.macro_scores(
            sentence_id, event_ids
        )
        vkey = PairKey(sentence_id, event_ids)
        vtypes = _node_types(self.corpus, vkey)
        if self.mode == "faithful":
            n = len(self.nodes)
            ext = np.empty((n + 1, n + 1))
            ext[:n, :n] = self.conf
            ext[:n, n] = nodes_on_v
            ext[n, :n] = v_on_nodes
            ext[n, n] = self_conf
            graph = graph_from_confidences(
                self.nodes + [vkey],
                ext,
                list(self.node_types) + [vtypes],
                keep_conf=False,
            )
            state = run_pair_rank(graph, self.rank_config)
        else:
            graph = self._extended_graph(
                vkey, vtypes, v_on_nodes, nodes_on_v, self_conf
            )
            rho_init = np.concatenate(
                [self.state0.rho, [1.0 / (len(self.nodes) + 1)]]
            )
            state = run_pair_rank(graph, self.rank_config, rho_init=rho_init)
        return float(state.rho[-1])

    def _extended_graph(
        self,
        vkey: PairKey,
        vtypes: tuple[str, ...],
        v_on_nodes: np.ndarray,
        nodes_on_v: np.ndarray,
        self_conf: float,
    ) -> PairGraph:
        import bisect

        g = self.graph
        n = len(self.nodes)

        # v's own ranking over all n + 1 pairs with positive confidence.
        row_v = np.concatenate([v_on_nodes, [self_conf]])
        tie_pos = bisect.bisect_left(self._sorted_keys, (vkey.sentence_id, vkey.event_ids))
        tie_v = np.concatenate([self.tie_rank, [tie_pos - 0.5]])
        positive = np.flatnonzero(row_v > 0)
        rank_v = np.zeros(n + 1)
        if len(positive):
            order = positive[np.lexsort((tie_v[positive], -row_v[positive]))]
            rank_v[order] = np.arange(1, len(order) + 1)

        # Each existing model's rank of v: one past the count of strictly
        # higher scores in its positive list (ties resolve against v).
        rank_of_v = (self.row_sorted > nodes_on_v[:, None]).sum(axis=1) + 1.0

        mutual = (v_on_nodes > 0) & (nodes_on_v > 0)
        new_j = np.flatnonzero(mutual)

        # Where v enters an existing list above a neighbor, that neighbor's
        # rank in the list shifts down by one.
        inc_i = ((nodes_on_v[g.edge_i] > 0) & (nodes_on_v[g.edge_i] > self.c_ij)).astype(
            np.float64
        )
        inc_j = ((nodes_on_v[g.edge_j] > 0) & (nodes_on_v[g.edge_j] > self.c_ji)).astype(
            np.float64
        )

        edge_i = np.concatenate([g.edge_i, np.asarray(new_j, dtype=np.int64)])
        edge_j = np.concatenate(
            [g.edge_j, np.full(len(new_j), n, dtype=np.int64)]
        )
        rank_ij = np.concatenate([g.rank_ij + inc_i, rank_of_v[new_j]])
        rank_ji = np.concatenate([g.rank_ji + inc_j, rank_v[new_j]])

        return PairGraph(
            nodes=tuple(self.nodes) + (vkey,),
            node_types=self.node_types + (vtypes,),
            self_conf=np.concatenate([g.self_conf, [self_conf]]),
            edge_i=edge_i,
            edge_j=edge_j,
            rank_ij=rank_ij,
            rank_ji=rank_ji,
        )


# ---------------------------------------------------------------------------
# Orchestration


@dataclass(eq=False)
class PipelineContext:
    config: PipelineConfig
    corpus: Corpus
    truth: GroundTruth | None
    space: FeatureSpace
    models: list[PairModel]
    evaluator: MacroRankEvaluator
    corpus_hash: str

    @property
    def rank_config(self) -> RankConfig:
        return self.evaluator.rank_config


def _stage(name: str):
    class _StageGuard:
        def __enter__(self):
            logger.info("stage %s", name)
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(exc, PipelineError):
                raise PipelineError(name, exc) from exc
            return False

    return _StageGuard()


def _load_corpus_stage(
    config: PipelineConfig,
) -> tuple[Corpus, GroundTruth | None]:
    if config.synth is not None:
        sentences, events, truth = generate_synthetic_corpus(config.synth)
        if config.synth.max_macro_size > config.search.k:
            logger.warning(
                "synthetic max_macro_size %d exceeds search budget k=%d",
                config.synth.max_macro_size,
                config.search.k,
            )
        corpus = Corpus.build(sentences, events, config.corpus_config)
        return corpus, truth
    commentary_path, events_path, truth_path = config.corpus_paths
    sentences = load_commentary(commentary_path)
    events = load_events(events_path)
    corpus = Corpus.build(sentences, events, config.corpus_config)
    truth = None
    if truth_path and Path(truth_path).exists():
        truth = load_ground_truth(truth_path, list(corpus.buckets))
    return corpus, truth


def _train_models(
    corpus: Corpus,
    space: FeatureSpace,
    trainer: TrainerConfig,
    workers: int,
) -> list[PairModel]:
    keys = eligible_pairs(corpus)
    exemplar._mining_index(corpus, space)  # build the shared cache up front
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(
                pool.map(lambda k: train_pair_model(k, corpus, space, trainer), keys)
            )
    else:
        models = [train_pair_model(k, corpus, space, trainer) for k in keys]
    return models


def prepare(config: PipelineConfig) -> PipelineContext:
    """Run every stage up to (and including) the base popularity ranking."""
    with _stage("corpus"):
        corpus, truth = _load_corpus_stage(config)
        corpus_hash = corpus_digest(corpus.sentences, corpus.events)
    with _stage("features"):
        vocab = build_vocabulary(
            list(corpus.sentences), list(corpus.events), config.corpus_config
        )
        if len(vocab) == 0:
            logger.warning("vocabulary is empty; check vocab_min_freq")
        space = build_feature_space(vocab, list(corpus.events), config.string_mode)
    with _stage("models"):
        models = _train_models(corpus, space, config.trainer, config.workers)
    with _stage("rank"):
        rank_config = RankConfig(
            d=config.rank_d,
            epsilon=config.rank_epsilon,
            max_iters=config.rank_max_iters,
            seed=config.seed,
            type_frequency=corpus.type_frequencies(),
        )
        provider = ModelConfidenceProvider(corpus, space, models, config.trainer)
        evaluator = MacroRankEvaluator(
            provider, corpus, rank_config, mode=config.search_mode
        )
    return PipelineContext(
        config=config,
        corpus=corpus,
        truth=truth,
        space=space,
        models=models,
        evaluator=evaluator,
        corpus_hash=corpus_hash,
    )


def _alignment_from_search(
    search_result: SearchResult, provenance: Mapping[str, object]
) -> AlignmentResult:
    predictions = {
        sid: frozenset(macro.event_ids)
        for sid, macro in search_result.macros.items()
    }
    return AlignmentResult(predictions=predictions, provenance=dict(provenance))


def _pair_scores(
    corpus: Corpus, unit_value: Mapping[PairKey, float]
) -> dict[tuple[str, str], float]:
    scores: dict[tuple[str, str], float] = {}
    for bucket in corpus.buckets:
        for eid in bucket.event_ids:
            key = PairKey.unit(bucket.sentence_id, eid)
            scores[(bucket.sentence_id, eid)] = unit_value.get(key, -math.inf)
    return scores


def align_corpus(
    ctx: PipelineContext, search: SearchConfig | None = None
) -> tuple[AlignmentResult, SearchResult, dict[tuple[str, str], float]]:
    """Greedy macro search over every bucket using the live evaluator."""
    search = search or ctx.config.search
    with _stage("search"):
        event_times = {e.event_id: float(e.t) for e in ctx.corpus.events}
        result = greedy_macro_search(
            list(ctx.corpus.buckets), ctx.evaluator, search, event_times
        )
        if result.omitted:
            logger.info("%d sentences had no eligible pair", len(result.omitted))
    provenance = {
        "corpus_hash": ctx.corpus_hash,
        "seed": ctx.config.seed,
        "k": search.k,
        "mode": ctx.config.search_mode,
        "config": _json_safe(ctx.config.raw),
    }
    alignment = _alignment_from_search(result, provenance)
    pair_scores = _pair_scores(ctx.corpus, ctx.evaluator.unit_value)
    return alignment, result, pair_scores


def _json_safe(data: object) -> object:
    if isinstance(data, Mapping):
        return {str(k): _json_safe(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [_json_safe(v) for v in data]
    if isinstance(data, (str, int, float, bool)) or data is None:
        return data
    return str(data)


def _write_artifacts(
    out_dir: Path,
    ctx: PipelineContext,
    alignment: AlignmentResult,
    search_result: SearchResult,
    report: MetricsReport,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)

    lines = []
    for bucket in ctx.corpus.buckets:
        sid = bucket.sentence_id
        if sid not in search_result.macros:
            continue
        record = {
            "sentence_id": sid,
            "event_ids": list(search_result.macros[sid].event_ids),
            "seed_score": search_result.seed_scores[sid],
            "gains": list(search_result.gains.get(sid, ())),
        }
        lines.append(json.dumps(record, sort_keys=True))
    (out_dir / "alignment.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""))

    (out_dir / "metrics.json").write_text(
        report.to_json(provenance=_json_safe(alignment.provenance))
    )

    graph = ctx.evaluator.graph
    weights = graph.edge_weights
    edge_lines = []
    for k in range(len(graph.edge_i)):
        a = graph.nodes[int(graph.edge_i[k])]
        b = graph.nodes[int(graph.edge_j[k])]
        edge_lines.append(
            f"{a.sentence_id}:{'+'.join(a.event_ids)}\t"
            f"{b.sentence_id}:{'+'.join(b.event_ids)}\t{weights[k]:.12g}"
        )
    (out_dir / "graph.edges").write_text(
        "\n".join(edge_lines) + ("\n" if edge_lines else "")
    )

    rho_lines = [
        f"{key.sentence_id}:{'+'.join(key.event_ids)}\t{score:.12g}"
        for key, score in zip(ctx.evaluator.state0.nodes, ctx.evaluator.state0.rho)
    ]
    (out_dir / "rho.tsv").write_text("\n".join(rho_lines) + ("\n" if rho_lines else ""))

    top_lines = []
    for model in ctx.models[:10]:
        top = inspect_model(model, ctx.space, 10)
        top_lines.append(
            f"{model.key.sentence_id}:{'+'.join(model.key.event_ids)}\n"
            + "\n".join(f"  {name}\t{weight:+.6f}" for name, weight in top)
        )
    (out_dir / "topweights.txt").write_text(
        "\n\n".join(top_lines) + ("\n" if top_lines else "")
    )

    save_models(ctx.models, out_dir / "models.npz")

    space = ctx.space
    space_doc = {
        "words": list(space.vocabulary.words),
        "event_types": list(space.event_types),
        "categorical_symbols": [list(c) for c in space.categorical_symbols],
        "string_mode": space.string_mode,
    }
    (out_dir / "space.json").write_text(json.dumps(space_doc, sort_keys=True))


def run_pipeline(
    config: PipelineConfig | Mapping[str, object],
    out_dir: str | Path | None = None,
) -> tuple[AlignmentResult, MetricsReport]:
    """Ingest -> models -> ranking -> search -> metrics (+ artifacts)."""
    if not isinstance(config, PipelineConfig):
        config = parse_config(config)
    ctx = prepare(config)
    alignment, search_result, pair_scores = align_corpus(ctx)
    with _stage("metrics"):
        if ctx.truth is None:
            raise ValueError("no ground truth available; metrics require truth data")
        game_of = {s.sentence_id: s.game_id for s in ctx.corpus.sentences}
        report = compute_metrics(alignment, ctx.truth, pair_scores, game_of)
    if out_dir is not None:
        with _stage("artifacts"):
            _write_artifacts(Path(out_dir), ctx, alignment, search_result, report)
    return alignment, report


def run_sweep(
    config: PipelineConfig | Mapping[str, object],
    out_dir: str | Path | None = None,
    ks: Sequence[int] | None = None,
) -> list[tuple[int, MetricsReport]]:
    """Re-run the search stage for each budget k, reusing trained models."""
    if not isinstance(config, PipelineConfig):
        config = parse_config(config)
    ks = tuple(ks) if ks is not None else config.sweep_ks
    ctx = prepare(config)
    if ctx.truth is None:
        raise PipelineError("metrics", ValueError("sweep requires ground truth"))
    game_of = {s.sentence_id: s.game_id for s in ctx.corpus.sentences}
    table: list[tuple[int, MetricsReport]] = []
    for k in ks:
        search = replace(config.search, k=k)
        alignment, search_result, pair_scores = align_corpus(ctx, search)
        report = compute_metrics(alignment, ctx.truth, pair_scores, game_of)
        table.append((k, report))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        best_k = max(table, key=lambda row: row[1].f1)[0]
        payload = {
            "sweep": [
                {"k": k, **{m: getattr(r, m) for m in ("precision", "recall", "f1", "auc")}}
                for k, r in table
            ],
            "best_k": best_k,
        }
        (out / "sweep.json").write_text(json.dumps(payload, sort_keys=True, indent=2))
    return table


# ---------------------------------------------------------------------------
# Ablation baselines


def baseline_no_pairmodel(
    corpus: Corpus,
    space: FeatureSpace,
    rank_config: RankConfig,
    search_config: SearchConfig,
) -> tuple[AlignmentResult, dict[tuple[str, str], float]]:
    """Full pipeline with the discriminative models replaced by a
    non-discriminative feature-vector similarity; no training happens."""
    nodes = eligible_pairs(corpus)
    provider = SimilarityConfidenceProvider(corpus, space, nodes)
    evaluator = MacroRankEvaluator(provider, corpus, rank_config, mode="warmstart")
    event_times = {e.event_id: float(e.t) for e in corpus.events}
    result = greedy_macro_search(
        list(corpus.buckets), evaluator, search_config, event_times
    )
    alignment = _alignment_from_search(result, {"baseline": "no_pairmodel"})
    return alignment, _pair_scores(corpus, evaluator.unit_value)


def baseline_no_pairrank(
    corpus: Corpus,
    models: Sequence[PairModel],
    search_config: SearchConfig,
    space: FeatureSpace,
) -> tuple[AlignmentResult, dict[tuple[str, str], float]]:
    """Voting ablation: a pair's score is the number of models scoring it
    non-negatively; the greedy search runs directly on vote counts."""
    thetas = np.stack([m.theta for m in models])
    biases = np.array([m.bias for m in models])

    pairs: list[tuple[str, str]] = []
    rows = []
    for bucket in corpus.buckets:
        sentence = corpus.sentences_by_id[bucket.sentence_id]
        for eid in bucket.event_ids:
            pairs.append((bucket.sentence_id, eid))
            rows.append(
                featurize(
                    sentence, corpus.events_by_id[eid], bucket, space,
                    corpus.events_by_id,
                ).to_dense()
            )
    pair_mat = np.stack(rows) if rows else np.zeros((0, space.dim))
    conf = thetas @ pair_mat.T + biases[:, None]
    liked = conf >= 0.0
    pair_index = {p: i for i, p in enumerate(pairs)}
    votes = liked.sum(axis=0).astype(np.float64)

    def rank_fn(sentence_id: str, event_ids: Sequence[str]) -> float:
        cols = [pair_index[(sentence_id, eid)] for eid in event_ids]
        if not cols:
            return 0.0
        if len(cols) == 1:
            return float(votes[cols[0]])
        return float(liked[:, cols].any(axis=1).sum())

    event_times = {e.event_id: float(e.t) for e in corpus.events}
    result = greedy_macro_search(
        list(corpus.buckets), rank_fn, search_config, event_times
    )
    alignment = _alignment_from_search(result, {"baseline": "no_pairrank"})
    pair_scores = {p: float(votes[i]) for p, i in pair_index.items()}
    return alignment, pair_scores
