"""Popularity ranking over the pair graph.

Nodes are candidate pairs. An undirected edge connects two pairs when each
pair's model scores the other positively; its weight is the reciprocal
rank product 1/(rank_ij * rank_ji), where rank_ij is the 1-based position
of pair j among all pairs scored positively by model i, in descending
score order. Scores iterate

    rho(p) <- (1 - d) * max(self_conf(p), 0) + d * sum_q rho(q) * w(p, q)

followed by division by the corpus frequency of the pair's event type
(mean over members for macro pairs) and renormalization to sum 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .exemplar import PairKey, PairModel, eligible_pairs
from .features import FeatureSpace, featurize

__all__ = [
    "PairGraph",
    "RankState",
    "RankConfig",
    "build_pair_graph",
    "graph_from_confidences",
    "run_pair_rank",
    "scores_per_bucket",
    "node_confidences",
]

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class PairGraph:
    nodes: tuple[PairKey, ...]
    node_types: tuple[tuple[str, ...], ...]
    self_conf: np.ndarray
    edge_i: np.ndarray
    edge_j: np.ndarray
    rank_ij: np.ndarray
    rank_ji: np.ndarray
    conf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.nodes) != len(self.node_types) or len(self.nodes) != len(self.self_conf):
            raise ValueError("node arrays disagree in length")

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def edge_weights(self) -> np.ndarray:
        return 1.0 / (self.rank_ij * self.rank_ji)

    def edge_map(self) -> dict[tuple[int, int], float]:
        w = self.edge_weights
        return {
            (int(i), int(j)): float(w[k])
            for k, (i, j) in enumerate(zip(self.edge_i, self.edge_j))
        }

    def matrix(self) -> sp.csr_matrix:
        """Symmetric weight matrix (no self entries)."""
        n = self.num_nodes
        w = self.edge_weights
        rows = np.concatenate([self.edge_i, self.edge_j])
        cols = np.concatenate([self.edge_j, self.edge_i])
        data = np.concatenate([w, w])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class RankState:
    nodes: tuple[PairKey, ...]
    rho: np.ndarray
    iterations: int
    converged: bool

    def score_of(self) -> dict[PairKey, float]:
        return {k: float(r) for k, r in zip(self.nodes, self.rho)}


@dataclass(frozen=True)
class RankConfig:
    d: float = 0.5
    epsilon: float = 1e-6
    max_iters: int = 200
    seed: int = 0
    type_frequency: Mapping[str, int] | None = None
    random_init: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.d <= 1.0:
            raise ValueError("damping factor d must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def node_confidences(
    models: Sequence[PairModel],
    nodes: Sequence[PairKey],
    corpus: Corpus,
    space: FeatureSpace,
) -> np.ndarray:
    """Confidence matrix C[i, j] = score of model i on node j.

    Macro nodes score as the max over their member pairs.
    """
    thetas = np.stack([m.theta for m in models])
    biases = np.array([m.bias for m in models])
    member_vecs = []
    owner: list[int] = []
    for j, key in enumerate(nodes):
        sentence = corpus.sentences_by_id[key.sentence_id]
        bucket = corpus.bucket_of[key.sentence_id]
        for eid in key.event_ids:
            vec = featurize(
                sentence, corpus.events_by_id[eid], bucket, space, corpus.events_by_id
            )
            member_vecs.append(vec)
            owner.append(j)
    dense = np.stack([v.to_dense() for v in member_vecs])
    scores = thetas @ dense.T + biases[:, None]
    conf = np.full((len(models), len(nodes)), -np.inf)
    owner_arr = np.array(owner)
    for j in range(len(nodes)):
        cols = np.flatnonzero(owner_arr == j)
        conf[:, j] = scores[:, cols].max(axis=1)
    return conf


def graph_from_confidences(
    nodes: Sequence[PairKey],
    conf: np.ndarray,
    node_types: Sequence[tuple[str, ...]],
    keep_conf: bool = True,
) -> PairGraph:
    """Derive ranks, mutual edges, and self confidences from a score matrix."""
    n = len(nodes)
    conf = np.asarray(conf, dtype=np.float64)
    if conf.shape != (n, n):
        raise ValueError(f"confidence matrix must be {n}x{n}, got {conf.shape}")
    by_key = sorted(range(n), key=lambda i: (nodes[i].sentence_id, nodes[i].event_ids))
    tie_rank = np.empty(n, dtype=np.int64)
    tie_rank[np.array(by_key, dtype=np.int64)] = np.arange(n)
    rank = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        positive = np.flatnonzero(conf[i] > 0.0)
        if len(positive) == 0:
            continue
        order = positive[np.lexsort((tie_rank[positive], -conf[i, positive]))]
        rank[i, order] = np.arange(1, len(order) + 1)
    pos = conf > 0.0
    mutual = pos & pos.T
    np.fill_diagonal(mutual, False)
    ii, jj = np.nonzero(np.triu(mutual, k=1))
    return PairGraph(
        nodes=tuple(nodes),
        node_types=tuple(tuple(t) for t in node_types),
        self_conf=np.diag(conf).copy(),
        edge_i=ii.astype(np.int64),
        edge_j=jj.astype(np.int64),
        rank_ij=rank[ii, jj].astype(np.float64),
        rank_ji=rank[jj, ii].astype(np.float64),
        conf=conf if keep_conf else None,
    )


def build_pair_graph(
    models: Sequence[PairModel],
    corpus: Corpus,
    space: FeatureSpace,
    require_complete: bool = True,
    keep_conf: bool = True,
) -> PairGraph:
    """Score every model against every pair and assemble the mutual graph."""
    keys = [m.key for m in models]
    if require_complete:
        missing = [k for k in eligible_pairs(corpus) if k not in set(keys)]
        if missing:
            raise ValueError(
                f"{len(missing)} eligible pairs lack models (first: {missing[0]})"
            )
    conf = node_confidences(models, keys, corpus, space)
    node_types = [
        tuple(corpus.events_by_id[eid].event_type for eid in k.event_ids) for k in keys
    ]
    return graph_from_confidences(keys, conf, node_types, keep_conf=keep_conf)


def _discount_divisors(
    graph: PairGraph, type_frequency: Mapping[str, int] | None
) -> np.ndarray:
    if type_frequency is None:
        return np.ones(graph.num_nodes)
    divisors = np.empty(graph.num_nodes)
    for i, types in enumerate(graph.node_types):
        freqs = [max(1, int(type_frequency.get(t, 1))) for t in types]
        divisors[i] = sum(freqs) / len(freqs)
    return divisors


def run_pair_rank(
    graph: PairGraph, config: RankConfig, rho_init: np.ndarray | None = None
) -> RankState:
    """Iterate popularity scores to a fixed point (L1 convergence test).

    `rho_init` warm-starts the iteration (used when re-ranking a graph that
    differs from an already-converged one by a single node).
    """
    n = graph.num_nodes
    if n == 0:
        return RankState(graph.nodes, np.zeros(0), 0, True)
    if rho_init is not None:
        if rho_init.shape != (n,):
            raise ValueError(f"rho_init must have shape ({n},)")
        rho = rho_init.astype(np.float64)
        total = rho.sum()
        if total > 0:
            rho = rho / total
    elif config.random_init:
        rng = np.random.default_rng(config.seed)
        rho = rng.random(n)
        rho /= rho.sum()
    else:
        rho = np.full(n, 1.0 / n)
    weights = graph.matrix()
    self_term = (1.0 - config.d) * np.maximum(graph.self_conf, 0.0)
    divisors = _discount_divisors(graph, config.type_frequency)

    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        updated = self_term + config.d * (weights @ rho)
        updated /= divisors
        total = updated.sum()
        if total > 0:
            updated /= total
        delta = np.abs(updated - rho).sum()
        rho = updated
        if delta < config.epsilon:
            converged = True
            break
    if not converged:
        logger.warning(
            "pair rank did not converge after %d iterations (last delta above %g)",
            config.max_iters,
            config.epsilon,
        )
    return RankState(graph.nodes, rho, iterations, converged)


def scores_per_bucket(
    state: RankState, corpus: Corpus
) -> dict[str, list[tuple[PairKey, float]]]:
    """Per-sentence node scores, descending; ties broken by earliest member
    event time, then event ids."""
    per_sentence: dict[str, list[tuple[PairKey, float]]] = {
        b.sentence_id: [] for b in corpus.buckets
    }
    for key, score in zip(state.nodes, state.rho):
        if key.sentence_id in per_sentence:
            per_sentence[key.sentence_id].append((key, float(score)))

    def sort_key(item: tuple[PairKey, float]):
        key, score = item
        earliest = min(corpus.events_by_id[eid].t for eid in key.event_ids)
        return (-score, earliest, key.event_ids)

    for sid in per_sentence:
        per_sentence[sid].sort(key=sort_key)
    return per_sentence
