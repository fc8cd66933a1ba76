"""Per-pair exemplar classifiers.

Each candidate (sentence, event) pair gets its own linear max-margin model,
trained with the pair itself as the only positive (all member pairs, for a
macro pair) against automatically mined negatives: half near-sentence ×
far-event combinations, half far-sentence × near-event, with no identical
sentence/event and no sentence-event player match allowed in the negative
set. Positives are weighted so total positive mass equals total negative
mass.

The solver minimizes  0.5*||theta_aug||^2 + C * sum_i w_i * hinge_i  by
coordinate descent on the dual, with the bias handled as an extra
always-on (and therefore L2-regularized) feature.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from numba import njit

from .corpus import Corpus, Event, Sentence, player_tokens
from .features import FeatureSpace, FeatureVector, featurize

__all__ = [
    "PairKey",
    "PairModel",
    "TrainerConfig",
    "SolverError",
    "NegativeMiningError",
    "solve_soft_margin",
    "hinge_objective",
    "generate_negatives",
    "train_pair_model",
    "confidence",
    "inspect_model",
    "eligible_pairs",
    "save_models",
    "load_models",
]


class SolverError(RuntimeError):
    """The solver failed to reach the requested duality gap."""


class NegativeMiningError(RuntimeError):
    """The corpus cannot supply enough admissible negative pairs."""


@dataclass(frozen=True, order=True)
class PairKey:
    sentence_id: str
    event_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.event_ids:
            raise ValueError("PairKey needs at least one event")
        if len(set(self.event_ids)) != len(self.event_ids):
            raise ValueError("PairKey event_ids must be distinct")

    @property
    def is_macro(self) -> bool:
        return len(self.event_ids) > 1

    @classmethod
    def unit(cls, sentence_id: str, event_id: str) -> "PairKey":
        return cls(sentence_id, (event_id,))


@dataclass(frozen=True, eq=False)
class PairModel:
    key: PairKey
    theta: np.ndarray
    bias: float

    def score(self, vec: FeatureVector) -> float:
        return vec.dot(self.theta) + self.bias


@dataclass(frozen=True)
class TrainerConfig:
    C: float = 100.0
    num_negatives: int = 100
    neighborhood: int = 25
    positive_weight_mode: str = "balanced"
    seed: int = 0
    tol: float = 1e-4
    min_negatives: int = 20

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.num_negatives <= 0:
            raise ValueError("num_negatives must be positive")
        if self.positive_weight_mode not in ("balanced", "unit"):
            raise ValueError(f"unknown positive_weight_mode {self.positive_weight_mode!r}")


def _stable_seed(*parts: object) -> int:
    payload = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "big")


# ---------------------------------------------------------------------------
# Solver


@njit(cache=True)
def _dual_cd(X, y, U, tol, max_steps, seed):  # pragma: no cover - compiled
    n, d = X.shape
    alpha = np.zeros(n)
    w = np.zeros(d)
    qdiag = np.empty(n)
    for i in range(n):
        s = 0.0
        for j in range(d):
            s += X[i, j] * X[i, j]
        qdiag[i] = s
    order = np.arange(n)
    state = np.uint64(seed) * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
    if state == np.uint64(0):
        state = np.uint64(88172645463325252)
    steps = 0
    gap = np.inf
    while steps < max_steps:
        for i in range(n - 1, 0, -1):
            state ^= state << np.uint64(13)
            state ^= state >> np.uint64(7)
            state ^= state << np.uint64(17)
            j = int(state % np.uint64(i + 1))
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
        for k in range(n):
            i = order[k]
            if qdiag[i] <= 0.0:
                continue
            g = 0.0
            for j in range(d):
                g += w[j] * X[i, j]
            g = y[i] * g - 1.0
            a_old = alpha[i]
            a_new = a_old - g / qdiag[i]
            if a_new < 0.0:
                a_new = 0.0
            elif a_new > U[i]:
                a_new = U[i]
            if a_new != a_old:
                delta = (a_new - a_old) * y[i]
                for j in range(d):
                    w[j] += delta * X[i, j]
                alpha[i] = a_new
        steps += n
        wnorm = 0.0
        for j in range(d):
            wnorm += w[j] * w[j]
        hinge = 0.0
        asum = 0.0
        for i in range(n):
            m = 0.0
            for j in range(d):
                m += w[j] * X[i, j]
            viol = 1.0 - y[i] * m
            if viol > 0.0:
                hinge += U[i] * viol
            asum += alpha[i]
        primal = 0.5 * wnorm + hinge
        dual = asum - 0.5 * wnorm
        gap = primal - dual
        scale = primal if primal > 1.0 else 1.0
        if gap <= tol * scale:
            return w, gap, steps, True
    return w, gap, steps, False


def _as_dense(vec: FeatureVector | np.ndarray) -> np.ndarray:
    if isinstance(vec, np.ndarray):
        return np.asarray(vec, dtype=np.float64)
    return vec.to_dense()


def solve_soft_margin(
    positives: Sequence[tuple[FeatureVector | np.ndarray, float]],
    negatives: Sequence[tuple[FeatureVector | np.ndarray, float]],
    C: float,
    tol: float = 1e-4,
    seed: int = 0,
    max_steps: int | None = None,
) -> tuple[np.ndarray, float]:
    """Fit the weighted soft-margin separator; returns (theta, bias).

    The bias is realized as an appended always-1 feature, so it is part of
    the regularized norm (LIBLINEAR's -B convention).
    """
    if not positives or not negatives:
        raise ValueError("need at least one positive and one negative example")
    rows = []
    labels = []
    weights = []
    for vec, weight in positives:
        rows.append(_as_dense(vec))
        labels.append(1.0)
        weights.append(float(weight))
    for vec, weight in negatives:
        rows.append(_as_dense(vec))
        labels.append(-1.0)
        weights.append(float(weight))
    X = np.stack(rows)
    if not np.all(np.isfinite(X)):
        raise ValueError("feature vectors contain non-finite values")
    if not all(w > 0 and np.isfinite(w) for w in weights):
        raise ValueError("example weights must be positive and finite")
    n, d = X.shape
    X = np.hstack([X, np.ones((n, 1))])
    y = np.array(labels)
    U = C * np.array(weights)
    if max_steps is None:
        max_steps = 10 * n * (d + 1)
    w, gap, steps, converged = _dual_cd(
        X, y, U, tol, max_steps, seed & 0x7FFFFFFFFFFFFFFF
    )
    if not converged:
        raise SolverError(
            f"no convergence after {steps} coordinate steps "
            f"(duality gap {gap:.3e}, tol {tol:.1e}, n={n}, dim={d + 1})"
        )
    return w[:-1].copy(), float(w[-1])


def hinge_objective(
    theta: np.ndarray,
    bias: float,
    positives: Sequence[tuple[FeatureVector | np.ndarray, float]],
    negatives: Sequence[tuple[FeatureVector | np.ndarray, float]],
    C: float,
) -> float:
    """Primal objective value, bias included in the regularized norm."""
    total = 0.5 * (float(theta @ theta) + bias * bias)
    for sign, examples in ((1.0, positives), (-1.0, negatives)):
        for vec, weight in examples:
            margin = sign * (float(_as_dense(vec) @ theta) + bias)
            total += C * weight * max(0.0, 1.0 - margin)
    return total


# ---------------------------------------------------------------------------
# Negative mining


class _MiningIndex:
    """Per-corpus caches used to sort sentences/events by feature distance."""

    def __init__(self, corpus: Corpus, space: FeatureSpace):
        self.sentence_ids = [s.sentence_id for s in corpus.sentences]
        self.event_ids = [e.event_id for e in corpus.events]
        self.sent_slots = [space.sentence_slots(s) for s in corpus.sentences]
        self.event_slots = [space.event_slots(e) for e in corpus.events]
        self.sent_matrix = _indicator_matrix(self.sent_slots, space.dim)
        self.event_matrix = _indicator_matrix(self.event_slots, space.dim)
        self.sent_active = np.asarray(self.sent_matrix.sum(axis=1)).ravel()
        self.event_active = np.asarray(self.event_matrix.sum(axis=1)).ravel()
        self.sent_tokens = {s.sentence_id: set(s.tokens) for s in corpus.sentences}
        self.event_players = {e.event_id: player_tokens(e) for e in corpus.events}
        self.sent_pos = {sid: i for i, sid in enumerate(self.sentence_ids)}
        self.event_pos = {eid: i for i, eid in enumerate(self.event_ids)}

    def sentence_distances(self, slots: np.ndarray) -> np.ndarray:
        return _binary_distances(self.sent_matrix, self.sent_active, slots)

    def event_distances(self, slots: np.ndarray) -> np.ndarray:
        return _binary_distances(self.event_matrix, self.event_active, slots)


def _indicator_matrix(slot_lists: list[np.ndarray], dim: int) -> sp.csr_matrix:
    indptr = np.zeros(len(slot_lists) + 1, dtype=np.int64)
    for i, slots in enumerate(slot_lists):
        indptr[i + 1] = indptr[i] + len(slots)
    indices = (
        np.concatenate(slot_lists) if slot_lists else np.array([], dtype=np.int64)
    )
    data = np.ones(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(slot_lists), dim))


def _binary_distances(
    matrix: sp.csr_matrix, active: np.ndarray, slots: np.ndarray
) -> np.ndarray:
    anchor = np.zeros(matrix.shape[1])
    anchor[slots] = 1.0
    overlap = matrix @ anchor
    sq = active + len(slots) - 2.0 * overlap
    return np.sqrt(np.maximum(sq, 0.0))


_MINING_CACHE: dict[tuple[int, int], _MiningIndex] = {}


def _mining_index(corpus: Corpus, space: FeatureSpace) -> _MiningIndex:
    cache_key = (id(corpus), id(space))
    index = _MINING_CACHE.get(cache_key)
    if index is None:
        if len(_MINING_CACHE) > 8:
            _MINING_CACHE.clear()
        index = _MiningIndex(corpus, space)
        _MINING_CACHE[cache_key] = index
    return index


def _ordered(ids: list[str], dist: np.ndarray, banned: set[str], farthest: bool) -> list[str]:
    keyed = sorted(
        ((d, i) for i, d in zip(ids, dist) if i not in banned),
        key=lambda pair: (-pair[0], pair[1]) if farthest else (pair[0], pair[1]),
    )
    return [i for _, i in keyed]


def _eligible_combos(
    sids: Sequence[str], eids: Sequence[str], index: _MiningIndex
) -> list[tuple[str, str]]:
    combos = []
    for sid in sids:
        toks = index.sent_tokens[sid]
        for eid in eids:
            if toks.isdisjoint(index.event_players[eid]):
                combos.append((sid, eid))
    return combos


def _sample_half(
    s_order: list[str],
    e_order: list[str],
    quota: int,
    neighborhood: int,
    rng: random.Random,
    index: _MiningIndex,
    taken: set[tuple[str, str]],
) -> list[tuple[str, str]]:
    n = neighborhood
    while True:
        combos = [
            c
            for c in _eligible_combos(s_order[:n], e_order[:n], index)
            if c not in taken
        ]
        if len(combos) >= quota or (n >= len(s_order) and n >= len(e_order)):
            break
        n *= 2
    if len(combos) <= quota:
        picked = combos
    else:
        picked = rng.sample(combos, quota)
    taken.update(picked)
    return picked


def generate_negatives(
    key: PairKey, corpus: Corpus, space: FeatureSpace, config: TrainerConfig
) -> list[PairKey]:
    """Mine negative pairs per the near/far cross-product scheme.

    Sentences are ranked by Euclidean distance between bag-of-words blocks,
    events between event-symbol blocks; the anchor event for macro keys is
    the first member. The neighborhood is widened (doubling) whenever the
    exclusion rules leave a half short of its quota.
    """
    index = _mining_index(corpus, space)
    anchor_sentence = corpus.sentences_by_id[key.sentence_id]
    anchor_event = corpus.events_by_id[key.event_ids[0]]

    s_slots = space.sentence_slots(anchor_sentence)
    e_slots = space.event_slots(anchor_event)
    ds = index.sentence_distances(s_slots)
    de = index.event_distances(e_slots)

    banned_s = {key.sentence_id}
    banned_e = set(key.event_ids)
    near_s = _ordered(index.sentence_ids, ds, banned_s, farthest=False)
    far_s = _ordered(index.sentence_ids, ds, banned_s, farthest=True)
    near_e = _ordered(index.event_ids, de, banned_e, farthest=False)
    far_e = _ordered(index.event_ids, de, banned_e, farthest=True)

    rng = random.Random(_stable_seed(config.seed, key.sentence_id, key.event_ids))
    quota1 = config.num_negatives // 2
    quota2 = config.num_negatives - quota1
    taken: set[tuple[str, str]] = set()
    neg1 = _sample_half(near_s, far_e, quota1, config.neighborhood, rng, index, taken)
    neg2 = _sample_half(far_s, near_e, quota2, config.neighborhood, rng, index, taken)
    negatives = neg1 + neg2

    shortfall = config.num_negatives - len(negatives)
    if shortfall > 0:
        extra = [
            c for c in _eligible_combos(near_s, near_e, index) if c not in taken
        ]
        rng.shuffle(extra)
        negatives.extend(extra[:shortfall])
    if len(negatives) < config.min_negatives:
        raise NegativeMiningError(
            f"only {len(negatives)} admissible negatives for {key} "
            f"(requested {config.num_negatives}, floor {config.min_negatives})"
        )
    return [PairKey.unit(sid, eid) for sid, eid in negatives]


# ---------------------------------------------------------------------------
# Training and scoring


def _positive_vectors(
    key: PairKey, corpus: Corpus, space: FeatureSpace
) -> list[FeatureVector]:
    sentence = corpus.sentences_by_id[key.sentence_id]
    bucket = corpus.bucket_of[key.sentence_id]
    missing = [e for e in key.event_ids if e not in bucket.event_ids]
    if missing:
        raise ValueError(
            f"events {missing} not in bucket of sentence {key.sentence_id!r}"
        )
    return [
        featurize(sentence, corpus.events_by_id[eid], bucket, space, corpus.events_by_id)
        for eid in key.event_ids
    ]


def train_pair_model(
    key: PairKey, corpus: Corpus, space: FeatureSpace, config: TrainerConfig
) -> PairModel:
    pos_vecs = _positive_vectors(key, corpus, space)
    neg_keys = generate_negatives(key, corpus, space, config)
    neg_vecs = [
        featurize(
            corpus.sentences_by_id[nk.sentence_id],
            corpus.events_by_id[nk.event_ids[0]],
            None,
            space,
        )
        for nk in neg_keys
    ]
    if config.positive_weight_mode == "balanced":
        pos_weight = len(neg_vecs) / len(pos_vecs)
    else:
        pos_weight = 1.0
    theta, bias = solve_soft_margin(
        [(v, pos_weight) for v in pos_vecs],
        [(v, 1.0) for v in neg_vecs],
        C=config.C,
        tol=config.tol,
        seed=_stable_seed(config.seed, "solver", key.sentence_id, key.event_ids),
    )
    return PairModel(key, theta, bias)


def confidence(
    model: PairModel, key: PairKey, corpus: Corpus, space: FeatureSpace
) -> float:
    """Model score on a pair; macro pairs score as the max over members."""
    if model.theta.shape[0] != space.dim:
        raise ValueError(
            f"model dimension {model.theta.shape[0]} != space dimension {space.dim}"
        )
    vecs = _positive_vectors(key, corpus, space)
    return max(model.score(v) for v in vecs)


def inspect_model(
    model: PairModel, space: FeatureSpace, top_n: int
) -> list[tuple[str, float]]:
    """Top-weighted feature names, descending."""
    if top_n <= 0:
        return []
    order = sorted(range(space.dim), key=lambda i: (-model.theta[i], i))
    return [(space.feature_name(i), float(model.theta[i])) for i in order[:top_n]]


def eligible_pairs(corpus: Corpus) -> list[PairKey]:
    """Unit pairs whose sentence token-matches a player of the event."""
    keys: list[PairKey] = []
    for bucket in corpus.buckets:
        sentence = corpus.sentences_by_id[bucket.sentence_id]
        toks = set(sentence.tokens)
        for eid in bucket.event_ids:
            if not toks.isdisjoint(player_tokens(corpus.events_by_id[eid])):
                keys.append(PairKey.unit(bucket.sentence_id, eid))
    return keys


# ---------------------------------------------------------------------------
# Model store


def save_models(models: Iterable[PairModel], path: str | Path) -> None:
    models = list(models)
    keys = [
        json.dumps({"s": m.key.sentence_id, "e": list(m.key.event_ids)}) for m in models
    ]
    thetas = (
        np.stack([m.theta for m in models]) if models else np.zeros((0, 0))
    )
    biases = np.array([m.bias for m in models])
    np.savez_compressed(path, keys=np.array(keys), thetas=thetas, biases=biases)


def load_models(path: str | Path) -> list[PairModel]:
    with np.load(path, allow_pickle=False) as data:
        keys = [json.loads(k) for k in data["keys"].tolist()]
        thetas = data["thetas"]
        biases = data["biases"]
    return [
        PairModel(PairKey(k["s"], tuple(k["e"])), thetas[i].copy(), float(biases[i]))
        for i, k in enumerate(keys)
    ]
