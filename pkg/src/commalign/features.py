"""Sparse feature vectors for (sentence, event) pairs.

A pair's vector has three blocks: a binary bag-of-words block over the
vocabulary, a binary block over event symbols (one slot for the event type
plus one per observed categorical (argument, value)), and a single slot
holding the player-match feature.

The player-match slot has two modes. In "count" mode (the default, used by
the evaluated pipeline) it holds the number of distinct player names among
the three consecutive bucket events centered on the pair's event that
token-match the sentence. In "binary" mode it holds 1 iff any of the pair's
own players token-matches the sentence. Pairs featurized without a bucket
(negative-mining combos have no temporal context) fall back to the pair's
own players in both modes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import Bucket, Event, Sentence, Vocabulary, tokenize

__all__ = [
    "FeatureSpace",
    "FeatureVector",
    "FeatureSpaceMismatch",
    "build_feature_space",
    "string_match_count",
    "featurize",
]


class FeatureSpaceMismatch(ValueError):
    """A symbol of the pair does not exist in the feature space."""


@dataclass(frozen=True, eq=False)
class FeatureSpace:
    vocabulary: Vocabulary
    event_types: tuple[str, ...]
    categorical_symbols: tuple[tuple[str, str], ...]
    string_mode: str = "count"

    def __post_init__(self) -> None:
        if self.string_mode not in ("count", "binary"):
            raise ValueError(f"unknown string_mode {self.string_mode!r}")
        object.__setattr__(
            self, "_type_index", {t: i for i, t in enumerate(self.event_types)}
        )
        object.__setattr__(
            self, "_cat_index", {c: i for i, c in enumerate(self.categorical_symbols)}
        )

    @property
    def vocab_size(self) -> int:
        return len(self.vocabulary)

    @property
    def event_offset(self) -> int:
        return self.vocab_size

    @property
    def cat_offset(self) -> int:
        return self.vocab_size + len(self.event_types)

    @property
    def string_offset(self) -> int:
        return self.cat_offset + len(self.categorical_symbols)

    @property
    def dim(self) -> int:
        return self.string_offset + 1

    def event_slots(self, event: Event) -> np.ndarray:
        """Absolute slot indices for the event type and categorical args."""
        type_index = self._type_index  # type: ignore[attr-defined]
        cat_index = self._cat_index  # type: ignore[attr-defined]
        if event.event_type not in type_index:
            raise FeatureSpaceMismatch(f"unknown event type {event.event_type!r}")
        slots = [self.event_offset + type_index[event.event_type]]
        for pair in event.categorical_args:
            if pair not in cat_index:
                raise FeatureSpaceMismatch(f"unknown categorical symbol {pair!r}")
            slots.append(self.cat_offset + cat_index[pair])
        return np.array(sorted(slots), dtype=np.int64)

    def sentence_slots(self, sentence: Sentence) -> np.ndarray:
        index = self.vocabulary.index
        slots = {index[tok] for tok in sentence.tokens if tok in index}
        return np.array(sorted(slots), dtype=np.int64)

    def feature_name(self, slot: int) -> str:
        if slot < 0 or slot >= self.dim:
            raise IndexError(f"slot {slot} outside feature space of dim {self.dim}")
        if slot < self.vocab_size:
            return f"word:{self.vocabulary.words[slot]}"
        if slot < self.cat_offset:
            return f"type:{self.event_types[slot - self.event_offset]}"
        if slot < self.string_offset:
            arg, value = self.categorical_symbols[slot - self.cat_offset]
            return f"arg:{arg}={value}"
        return "player_match"


@dataclass(frozen=True)
class FeatureVector:
    dim: int
    sentence_idx: np.ndarray
    event_idx: np.ndarray
    string_count: float

    @property
    def string_slot(self) -> int:
        return self.dim - 1

    def indices(self) -> np.ndarray:
        return np.concatenate(
            [self.sentence_idx, self.event_idx, [self.string_slot]]
        ).astype(np.int64)

    def values(self) -> np.ndarray:
        ones = np.ones(len(self.sentence_idx) + len(self.event_idx))
        return np.concatenate([ones, [float(self.string_count)]])

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[self.sentence_idx] = 1.0
        dense[self.event_idx] = 1.0
        dense[self.string_slot] = float(self.string_count)
        return dense

    def dot(self, theta: np.ndarray) -> float:
        if theta.shape[0] != self.dim:
            raise ValueError(
                f"dimension mismatch: theta has {theta.shape[0]}, vector has {self.dim}"
            )
        total = theta[self.sentence_idx].sum() + theta[self.event_idx].sum()
        return float(total + theta[self.string_slot] * self.string_count)


def build_feature_space(
    vocab: Vocabulary, events: list[Event], string_mode: str = "count"
) -> FeatureSpace:
    """Index every event type and observed categorical (argument, value) pair."""
    types = sorted({e.event_type for e in events})
    cats = sorted({pair for e in events for pair in e.categorical_args})
    return FeatureSpace(vocab, tuple(types), tuple(cats), string_mode)


def _matched_names(sentence: Sentence, events: list[Event]) -> set[str]:
    sent_tokens = set(sentence.tokens)
    matched: set[str] = set()
    for ev in events:
        for name in ev.string_args:
            if any(tok in sent_tokens for tok in tokenize(name)):
                matched.add(name.lower())
    return matched


def string_match_count(
    sentence: Sentence,
    event: Event,
    bucket: Bucket,
    events_by_id: Mapping[str, Event],
) -> int:
    """Distinct player names matching the sentence, over the 3-event window
    of consecutive bucket events centered on `event` (truncated at edges)."""
    try:
        pos = bucket.event_ids.index(event.event_id)
    except ValueError:
        raise ValueError(
            f"event {event.event_id!r} not in bucket of sentence {bucket.sentence_id!r}"
        ) from None
    window_ids = bucket.event_ids[max(0, pos - 1) : pos + 2]
    window = [events_by_id[eid] for eid in window_ids]
    return len(_matched_names(sentence, window))


def featurize(
    sentence: Sentence,
    event: Event,
    bucket: Bucket | None,
    space: FeatureSpace,
    events_by_id: Mapping[str, Event] | None = None,
) -> FeatureVector:
    """Build the pair's sparse feature vector.

    With bucket=None (mined negative combos) the player-match feature uses
    the event's own players only.
    """
    if space.string_mode == "count" and bucket is not None:
        if events_by_id is None:
            raise ValueError("events_by_id required for bucketed count-mode featurization")
        count: float = float(string_match_count(sentence, event, bucket, events_by_id))
    elif space.string_mode == "count":
        count = float(len(_matched_names(sentence, [event])))
    else:
        count = 1.0 if _matched_names(sentence, [event]) else 0.0
    return FeatureVector(
        dim=space.dim,
        sentence_idx=space.sentence_slots(sentence),
        event_idx=space.event_slots(event),
        string_count=count,
    )
