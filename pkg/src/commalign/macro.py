"""Greedy budgeted search for the macro-event best describing a sentence.

The search is generic over a ranking callback `rank_fn(sentence_id,
event_ids) -> float` so it can run against the live pipeline (where each
evaluation trains a macro pair model and re-runs the popularity iteration)
or against stub set functions in tests. A score of -inf marks an
inadmissible candidate set.

Growth is batched: every sentence advances one merge per round, seeding
from its best-scoring unit pair, and stops when its best marginal gain is
no longer positive (configurable) or the cardinality budget is reached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Mapping, Sequence

from .corpus import Bucket

__all__ = [
    "MacroEvent",
    "SearchConfig",
    "SearchResult",
    "RankFn",
    "marginal_gain",
    "greedy_macro_search",
    "brute_force_search",
]

RankFn = Callable[[str, tuple[str, ...]], float]


@dataclass(frozen=True)
class MacroEvent:
    event_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.event_ids)) != len(self.event_ids):
            raise ValueError("macro event members must be distinct")

    def __len__(self) -> int:
        return len(self.event_ids)

    def __contains__(self, event_id: str) -> bool:
        return event_id in self.event_ids

    def merge(self, event_id: str) -> "MacroEvent":
        if event_id in self.event_ids:
            raise ValueError(f"event {event_id!r} already in macro event")
        return MacroEvent(self.event_ids + (event_id,))

    def remove(self, event_id: str) -> "MacroEvent":
        if event_id not in self.event_ids:
            raise ValueError(f"event {event_id!r} not in macro event")
        return MacroEvent(tuple(e for e in self.event_ids if e != event_id))


@dataclass(frozen=True)
class SearchConfig:
    k: int = 4
    stop_on_nonpositive_gain: bool = True
    alignment_threshold: float | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("cardinality budget k must be >= 1")


@dataclass(frozen=True)
class SearchResult:
    macros: dict[str, MacroEvent]
    gains: dict[str, tuple[float, ...]]
    seed_scores: dict[str, float]
    omitted: tuple[str, ...]


def marginal_gain(
    sentence_id: str,
    current: MacroEvent,
    candidate: str,
    rank_fn: RankFn,
    k: int | None = None,
) -> float:
    """Score gain of merging `candidate` into `current`."""
    if candidate in current:
        raise ValueError(f"candidate {candidate!r} already in macro event")
    if k is not None and len(current) + 1 > k:
        raise ValueError(f"merging would exceed cardinality budget {k}")
    grown = current.event_ids + (candidate,)
    return rank_fn(sentence_id, grown) - rank_fn(sentence_id, current.event_ids)


def _best_candidate(
    sentence_id: str,
    current: MacroEvent,
    bucket: Bucket,
    rank_fn: RankFn,
    event_times: Mapping[str, float] | None,
) -> tuple[float, str] | None:
    base = rank_fn(sentence_id, current.event_ids)
    best: tuple[float, float, str] | None = None
    for eid in bucket.event_ids:
        if eid in current:
            continue
        score = rank_fn(sentence_id, current.event_ids + (eid,))
        if score == -math.inf:
            continue
        gain = score - base
        t = event_times[eid] if event_times is not None else 0.0
        entry = (-gain, t, eid)
        if best is None or entry < best:
            best = entry
    if best is None:
        return None
    return -best[0], best[2]


def greedy_macro_search(
    buckets: Sequence[Bucket],
    rank_fn: RankFn,
    config: SearchConfig,
    event_times: Mapping[str, float] | None = None,
) -> SearchResult:
    """Batched greedy growth of one macro event per bucket.

    Round 0 seeds each bucket with its best-scoring unit pair; every later
    round merges the argmax-gain event into each still-active macro. Ties
    break on earliest event time (when provided), then event id. Buckets
    whose every unit pair scores -inf are omitted.
    """
    macros: dict[str, MacroEvent] = {}
    gains: dict[str, list[float]] = {}
    seed_scores: dict[str, float] = {}
    omitted: list[str] = []
    active: list[Bucket] = []

    for bucket in buckets:
        best: tuple[float, float, str] | None = None
        for eid in bucket.event_ids:
            score = rank_fn(bucket.sentence_id, (eid,))
            if score == -math.inf:
                continue
            t = event_times[eid] if event_times is not None else 0.0
            entry = (-score, t, eid)
            if best is None or entry < best:
                best = entry
        if best is None:
            omitted.append(bucket.sentence_id)
            continue
        score, seed = -best[0], best[2]
        if config.alignment_threshold is not None and score < config.alignment_threshold:
            omitted.append(bucket.sentence_id)
            continue
        macros[bucket.sentence_id] = MacroEvent((seed,))
        seed_scores[bucket.sentence_id] = score
        gains[bucket.sentence_id] = []
        active.append(bucket)

    for _ in range(config.k - 1):
        if not active:
            break
        still_active: list[Bucket] = []
        for bucket in active:
            sid = bucket.sentence_id
            current = macros[sid]
            if len(current) >= min(config.k, len(bucket)):
                continue
            found = _best_candidate(sid, current, bucket, rank_fn, event_times)
            if found is None:
                continue
            gain, eid = found
            if config.stop_on_nonpositive_gain and gain <= 0:
                continue
            macros[sid] = current.merge(eid)
            gains[sid].append(gain)
            still_active.append(bucket)
        active = still_active

    return SearchResult(
        macros=macros,
        gains={sid: tuple(g) for sid, g in gains.items()},
        seed_scores=seed_scores,
        omitted=tuple(omitted),
    )


def brute_force_search(
    bucket: Bucket,
    rank_fn: RankFn,
    k: int,
    max_evaluations: int = 200_000,
) -> MacroEvent:
    """Exact argmax over all candidate sets of cardinality 1..k.

    Testing oracle; ties break on lexicographically smallest sorted ids.
    """
    ids = sorted(bucket.event_ids)
    if not ids:
        raise ValueError(f"bucket of sentence {bucket.sentence_id!r} has no candidate sets")
    total = sum(math.comb(len(ids), c) for c in range(1, min(k, len(ids)) + 1))
    if total > max_evaluations:
        raise ValueError(
            f"{total} candidate sets exceed the cap of {max_evaluations}"
        )
    best: tuple[float, tuple[str, ...]] | None = None
    for c in range(1, min(k, len(ids)) + 1):
        for subset in combinations(ids, c):
            score = rank_fn(bucket.sentence_id, subset)
            if score == -math.inf:
                continue
            entry = (-score, subset)
            if best is None or entry < best:
                best = entry
    if best is None:
        raise ValueError(
            f"every candidate set of sentence {bucket.sentence_id!r} is inadmissible"
        )
    return MacroEvent(best[1])
