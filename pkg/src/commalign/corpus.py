"""Corpus ingestion: commentary sentences, event logs, buckets, vocabulary.

File formats are line-delimited JSON (one record per line); see the schema
section of the README for field names.
"""

from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

__all__ = [
    "Sentence",
    "Event",
    "Vocabulary",
    "Bucket",
    "GroundTruth",
    "CorpusConfig",
    "Corpus",
    "ParseError",
    "ValidationError",
    "tokenize",
    "player_tokens",
    "load_commentary",
    "load_events",
    "load_ground_truth",
    "build_vocabulary",
    "build_buckets",
    "write_commentary",
    "write_events",
    "write_ground_truth",
    "corpus_digest",
]


class ParseError(ValueError):
    """A record in an input file could not be parsed."""


class ValidationError(ValueError):
    """Parsed input violates a corpus-level constraint."""


_TOKEN_RE = re.compile(r"[^a-z0-9\s]+")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase, replace punctuation with whitespace, split.

    Idempotent: tokenizing " ".join(tokens) returns the same tokens.
    """
    return tuple(_TOKEN_RE.sub(" ", text.lower()).split())


@dataclass(frozen=True)
class Sentence:
    sentence_id: str
    game_id: str
    t: int
    text: str
    tokens: tuple[str, ...]

    @classmethod
    def from_text(cls, sentence_id: str, game_id: str, t: int, text: str) -> "Sentence":
        return cls(sentence_id, game_id, t, text, tokenize(text))


@dataclass(frozen=True)
class Event:
    event_id: str
    game_id: str
    t: int
    event_type: str
    categorical_args: tuple[tuple[str, str], ...]
    string_args: tuple[str, ...]

    @property
    def args(self) -> dict[str, str]:
        return dict(self.categorical_args)


def player_tokens(event: Event) -> frozenset[str]:
    """All tokens occurring in the event's string arguments.

    "Gerrard" matches "Steven Gerrard" because matching is per token.
    """
    toks: set[str] = set()
    for name in event.string_args:
        toks.update(tokenize(name))
    return frozenset(toks)


@dataclass(frozen=True)
class Vocabulary:
    words: tuple[str, ...]
    index: Mapping[str, int]

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Vocabulary":
        ordered = tuple(words)
        return cls(ordered, {w: i for i, w in enumerate(ordered)})


@dataclass(frozen=True)
class Bucket:
    sentence_id: str
    event_ids: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.event_ids)


@dataclass(frozen=True)
class GroundTruth:
    alignments: Mapping[str, frozenset[str]]

    def __getitem__(self, sentence_id: str) -> frozenset[str]:
        return self.alignments[sentence_id]

    def get(self, sentence_id: str, default: frozenset[str] = frozenset()) -> frozenset[str]:
        return self.alignments.get(sentence_id, default)

    def total_pairs(self) -> int:
        return sum(len(v) for v in self.alignments.values())


@dataclass(frozen=True)
class CorpusConfig:
    window_half: float = 75.0
    vocab_min_freq: int = 5
    seed: int = 0
    bucket_cap: int | None = None

    def __post_init__(self) -> None:
        if self.window_half <= 0:
            raise ValueError("window_half must be positive")


def _read_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise ParseError(f"{path}:{lineno}: record is not an object")
            yield lineno, record


def _require(record: dict, keys: tuple[str, ...], path: str | Path, lineno: int) -> None:
    missing = [k for k in keys if k not in record]
    if missing:
        raise ParseError(f"{path}:{lineno}: missing field(s) {', '.join(missing)}")


def load_commentary(path: str | Path) -> list[Sentence]:
    """Load commentary.jsonl; returns sentences sorted by (game_id, t)."""
    sentences: list[Sentence] = []
    seen: set[str] = set()
    for lineno, rec in _read_jsonl(path):
        _require(rec, ("game_id", "sentence_id", "t", "text"), path, lineno)
        sid = str(rec["sentence_id"])
        if sid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate sentence_id {sid!r}")
        seen.add(sid)
        try:
            t = int(rec["t"])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: t is not an integer") from exc
        sentences.append(Sentence.from_text(sid, str(rec["game_id"]), t, str(rec["text"])))
    sentences.sort(key=lambda s: (s.game_id, s.t, s.sentence_id))
    return sentences


def load_events(path: str | Path) -> list[Event]:
    """Load events.jsonl; returns events sorted by (game_id, t)."""
    events: list[Event] = []
    seen: set[str] = set()
    for lineno, rec in _read_jsonl(path):
        _require(rec, ("game_id", "event_id", "t", "type"), path, lineno)
        eid = str(rec["event_id"])
        if eid in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate event_id {eid!r}")
        seen.add(eid)
        try:
            t = int(rec["t"])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{path}:{lineno}: t is not an integer") from exc
        args = rec.get("args", {})
        if not isinstance(args, dict):
            raise ParseError(f"{path}:{lineno}: args must be an object")
        players = rec.get("players", [])
        if not isinstance(players, list) or not all(isinstance(p, str) for p in players):
            raise ParseError(f"{path}:{lineno}: players must be a list of strings")
        cat = tuple(sorted((str(k), str(v)) for k, v in args.items()))
        events.append(Event(eid, str(rec["game_id"]), t, str(rec["type"]), cat, tuple(players)))
    events.sort(key=lambda e: (e.game_id, e.t, e.event_id))
    return events


def build_buckets(
    sentences: list[Sentence], events: list[Event], config: CorpusConfig
) -> list[Bucket]:
    """One bucket per sentence: same-game events with |t_e - t_s| <= window_half.

    Events are ordered by event time. With bucket_cap set, the temporally
    nearest events are kept (then re-ordered by time).
    """
    by_game: dict[str, list[Event]] = {}
    for ev in events:
        by_game.setdefault(ev.game_id, []).append(ev)

    buckets: list[Bucket] = []
    for sent in sentences:
        window = [
            ev
            for ev in by_game.get(sent.game_id, [])
            if abs(ev.t - sent.t) <= config.window_half
        ]
        if config.bucket_cap is not None and len(window) > config.bucket_cap:
            window.sort(key=lambda e: (abs(e.t - sent.t), e.t, e.event_id))
            window = window[: config.bucket_cap]
        window.sort(key=lambda e: (e.t, e.event_id))
        buckets.append(Bucket(sent.sentence_id, tuple(e.event_id for e in window)))
    return buckets


def load_ground_truth(path: str | Path, buckets: list[Bucket]) -> GroundTruth:
    """Load truth.jsonl; every referenced event must lie in the sentence's bucket."""
    by_sid = {b.sentence_id: set(b.event_ids) for b in buckets}
    alignments: dict[str, frozenset[str]] = {}
    for lineno, rec in _read_jsonl(path):
        _require(rec, ("sentence_id", "event_ids"), path, lineno)
        sid = str(rec["sentence_id"])
        if sid not in by_sid:
            raise ValidationError(f"{path}:{lineno}: unknown sentence_id {sid!r}")
        if sid in alignments:
            raise ValidationError(f"{path}:{lineno}: duplicate sentence_id {sid!r}")
        eids = frozenset(str(e) for e in rec["event_ids"])
        outside = eids - by_sid[sid]
        if outside:
            raise ValidationError(
                f"{path}:{lineno}: events outside bucket of sentence {sid!r}: "
                f"{', '.join(sorted(outside))}"
            )
        alignments[sid] = eids
    return GroundTruth(alignments)


def build_vocabulary(
    sentences: list[Sentence], events: list[Event], config: CorpusConfig
) -> Vocabulary:
    """Frequent sentence words, excluding any token of any event string argument."""
    counts: Counter[str] = Counter()
    for sent in sentences:
        counts.update(sent.tokens)
    excluded: set[str] = set()
    for ev in events:
        excluded.update(player_tokens(ev))
    words = sorted(
        w for w, c in counts.items() if c >= config.vocab_min_freq and w not in excluded
    )
    return Vocabulary.from_words(words)


def sentence_record(sentence: Sentence) -> dict:
    return {
        "game_id": sentence.game_id,
        "sentence_id": sentence.sentence_id,
        "t": sentence.t,
        "text": sentence.text,
    }


def event_record(event: Event) -> dict:
    return {
        "game_id": event.game_id,
        "event_id": event.event_id,
        "t": event.t,
        "type": event.event_type,
        "args": dict(event.categorical_args),
        "players": list(event.string_args),
    }


def _write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_commentary(sentences: Iterable[Sentence], path: str | Path) -> None:
    _write_jsonl((sentence_record(s) for s in sentences), path)


def write_events(events: Iterable[Event], path: str | Path) -> None:
    _write_jsonl((event_record(e) for e in events), path)


def write_ground_truth(truth: GroundTruth, path: str | Path) -> None:
    records = (
        {"sentence_id": sid, "event_ids": sorted(eids)}
        for sid, eids in sorted(truth.alignments.items())
    )
    _write_jsonl(records, path)


def corpus_digest(sentences: Iterable[Sentence], events: Iterable[Event]) -> str:
    """Stable hash of the corpus content, for provenance records."""
    h = hashlib.sha256()
    for s in sentences:
        h.update(json.dumps(sentence_record(s), sort_keys=True).encode())
    for e in events:
        h.update(json.dumps(event_record(e), sort_keys=True).encode())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class Corpus:
    """Immutable aggregate of one loaded corpus plus its derived indexes."""

    sentences: tuple[Sentence, ...]
    events: tuple[Event, ...]
    buckets: tuple[Bucket, ...]
    config: CorpusConfig
    sentences_by_id: Mapping[str, Sentence] = field(repr=False)
    events_by_id: Mapping[str, Event] = field(repr=False)
    bucket_of: Mapping[str, Bucket] = field(repr=False)

    @classmethod
    def build(
        cls,
        sentences: list[Sentence],
        events: list[Event],
        config: CorpusConfig | None = None,
    ) -> "Corpus":
        config = config or CorpusConfig()
        buckets = build_buckets(sentences, events, config)
        return cls(
            sentences=tuple(sentences),
            events=tuple(events),
            buckets=tuple(buckets),
            config=config,
            sentences_by_id={s.sentence_id: s for s in sentences},
            events_by_id={e.event_id: e for e in events},
            bucket_of={b.sentence_id: b for b in buckets},
        )

    @property
    def event_types(self) -> tuple[str, ...]:
        return tuple(sorted({e.event_type for e in self.events}))

    def type_frequencies(self) -> dict[str, int]:
        counts: Counter[str] = Counter(e.event_type for e in self.events)
        return dict(counts)
