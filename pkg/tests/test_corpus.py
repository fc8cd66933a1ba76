from __future__ import annotations

import json
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from commalign.corpus import (
    Corpus,
    CorpusConfig,
    ParseError,
    Sentence,
    ValidationError,
    build_buckets,
    build_vocabulary,
    load_commentary,
    load_events,
    load_ground_truth,
    player_tokens,
    tokenize,
    write_commentary,
    write_events,
    write_ground_truth,
)
from commalign.synth import SynthParams, generate_synthetic_corpus


def test_tokenize_strips_punctuation_and_lowercases():
    assert tokenize("Gerrard passes to Torres.") == ("gerrard", "passes", "to", "torres")


def test_tokenize_splits_possessives_into_tokens():
    assert "malouda" in tokenize("Malouda's header hits Koscielny")


@given(st.text(max_size=200))
def test_tokenize_idempotent(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens


def _write_lines(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


def test_load_commentary_sorts_and_tokenizes(tmp_path):
    path = tmp_path / "commentary.jsonl"
    _write_lines(
        path,
        [
            {"game_id": "g1", "sentence_id": "s2", "t": 300, "text": "Late drama!"},
            {"game_id": "g1", "sentence_id": "s1", "t": 120, "text": "Gerrard passes to Torres."},
        ],
    )
    sentences = load_commentary(path)
    assert [s.sentence_id for s in sentences] == ["s1", "s2"]
    assert sentences[0].tokens == ("gerrard", "passes", "to", "torres")


def test_load_commentary_empty_file(tmp_path):
    path = tmp_path / "commentary.jsonl"
    path.write_text("")
    assert load_commentary(path) == []


def test_load_commentary_reports_line_number(tmp_path):
    path = tmp_path / "commentary.jsonl"
    path.write_text('{"game_id": "g", "sentence_id": "s", "t": 1, "text": "x"}\n{broken\n')
    with pytest.raises(ParseError, match=":2"):
        load_commentary(path)


def test_load_commentary_duplicate_id(tmp_path):
    path = tmp_path / "commentary.jsonl"
    _write_lines(
        path,
        [
            {"game_id": "g", "sentence_id": "s", "t": 1, "text": "a"},
            {"game_id": "g", "sentence_id": "s", "t": 2, "text": "b"},
        ],
    )
    with pytest.raises(ValidationError, match="duplicate"):
        load_commentary(path)


def test_load_events_parses_args_and_players(tmp_path):
    path = tmp_path / "events.jsonl"
    _write_lines(
        path,
        [
            {
                "game_id": "g",
                "event_id": "e1",
                "t": 10,
                "type": "pass",
                "args": {"qualifier": "Head Pass", "team": "Chelsea"},
                "players": ["F. Malouda"],
            }
        ],
    )
    events = load_events(path)
    assert len(events) == 1
    assert events[0].string_args == ("F. Malouda",)
    assert len(events[0].categorical_args) == 2
    assert events[0].args["qualifier"] == "Head Pass"


def test_load_events_empty_and_type_set(tmp_path):
    path = tmp_path / "events.jsonl"
    path.write_text("")
    assert load_events(path) == []
    _write_lines(
        path,
        [
            {"game_id": "g", "event_id": f"e{i}", "t": i, "type": f"type{i % 5}"}
            for i in range(20)
        ],
    )
    events = load_events(path)
    corpus = Corpus.build([], events, CorpusConfig())
    assert len(corpus.event_types) == 5


def test_load_events_rejects_bad_args(tmp_path):
    path = tmp_path / "events.jsonl"
    _write_lines(
        path, [{"game_id": "g", "event_id": "e", "t": 1, "type": "pass", "args": [1]}]
    )
    with pytest.raises(ParseError, match="args"):
        load_events(path)


def test_buckets_window_membership():
    sentences = [Sentence.from_text("s1", "g", 1000, "hello")]
    events = [
        _event("e_in_lo", "g", 925),
        _event("e_in_hi", "g", 1075),
        _event("e_out_lo", "g", 924),
        _event("e_out_hi", "g", 1076),
        _event("e_other_game", "x", 1000),
    ]
    buckets = build_buckets(sentences, events, CorpusConfig(window_half=75))
    assert buckets[0].event_ids == ("e_in_lo", "e_in_hi")


def test_buckets_empty_when_no_events_in_window():
    sentences = [Sentence.from_text("s1", "g", 50, "quiet spell")]
    buckets = build_buckets(sentences, [_event("e", "g", 500)], CorpusConfig(window_half=75))
    assert buckets[0].event_ids == ()


def test_buckets_match_exhaustive_scan_oracle(small_corpus):
    corpus, _, _, _ = small_corpus
    for bucket in corpus.buckets:
        sent = corpus.sentences_by_id[bucket.sentence_id]
        expected = sorted(
            (
                e.event_id
                for e in corpus.events
                if e.game_id == sent.game_id
                and abs(e.t - sent.t) <= corpus.config.window_half
            ),
            key=lambda eid: (corpus.events_by_id[eid].t, eid),
        )
        assert list(bucket.event_ids) == expected


def test_bucket_cap_keeps_nearest():
    sentences = [Sentence.from_text("s1", "g", 100, "x")]
    events = [_event(f"e{d}", "g", 100 + d) for d in (-60, -10, 5, 30, 70)]
    buckets = build_buckets(
        sentences, events, CorpusConfig(window_half=75, bucket_cap=2)
    )
    assert set(buckets[0].event_ids) == {"e-10", "e5"}


def test_vocabulary_excludes_player_name_tokens():
    sentences = [
        Sentence.from_text(f"s{i}", "g", i, "gerrard shoots again") for i in range(6)
    ]
    events = [_event("e", "g", 0, players=("Steven Gerrard",))]
    vocab = build_vocabulary(sentences, events, CorpusConfig(vocab_min_freq=5))
    assert "gerrard" not in vocab
    assert "shoots" in vocab


def test_vocabulary_frequency_threshold():
    sentences = [Sentence.from_text("s1", "g", 0, "rare words here")] + [
        Sentence.from_text(f"s{i}", "g", i, "common sight") for i in range(2, 8)
    ]
    vocab = build_vocabulary(sentences, [], CorpusConfig(vocab_min_freq=5))
    assert "common" in vocab and "rare" not in vocab


def test_vocabulary_matches_counting_oracle(small_corpus):
    corpus, _, _, _ = small_corpus
    vocab = build_vocabulary(
        list(corpus.sentences), list(corpus.events), corpus.config
    )
    counts = Counter(tok for s in corpus.sentences for tok in s.tokens)
    excluded = set()
    for e in corpus.events:
        excluded |= player_tokens(e)
    expected = {
        w
        for w, c in counts.items()
        if c >= corpus.config.vocab_min_freq and w not in excluded
    }
    assert set(vocab.words) == expected
    assert not set(vocab.words) & excluded
    assert list(vocab.index.values()) == list(range(len(vocab)))


def test_ground_truth_roundtrip_and_validation(tmp_path, small_corpus):
    corpus, truth, _, _ = small_corpus
    path = tmp_path / "truth.jsonl"
    write_ground_truth(truth, path)
    loaded = load_ground_truth(path, list(corpus.buckets))
    assert loaded.alignments == truth.alignments

    bad = tmp_path / "bad.jsonl"
    sid = corpus.buckets[0].sentence_id
    other_game_event = next(
        e.event_id
        for e in corpus.events
        if e.game_id != corpus.sentences_by_id[sid].game_id
    )
    bad.write_text(json.dumps({"sentence_id": sid, "event_ids": [other_game_event]}) + "\n")
    with pytest.raises(ValidationError, match=sid):
        load_ground_truth(bad, list(corpus.buckets))


def test_ground_truth_accepts_empty_sets(tmp_path, small_corpus):
    corpus, _, _, _ = small_corpus
    path = tmp_path / "truth.jsonl"
    sid = corpus.buckets[0].sentence_id
    path.write_text(json.dumps({"sentence_id": sid, "event_ids": []}) + "\n")
    loaded = load_ground_truth(path, list(corpus.buckets))
    assert loaded[sid] == frozenset()


def test_corpus_files_roundtrip(tmp_path, small_corpus):
    corpus, _, _, _ = small_corpus
    write_commentary(corpus.sentences, tmp_path / "commentary.jsonl")
    write_events(corpus.events, tmp_path / "events.jsonl")
    assert load_commentary(tmp_path / "commentary.jsonl") == list(corpus.sentences)
    assert load_events(tmp_path / "events.jsonl") == list(corpus.events)


# -- synthetic generator ----------------------------------------------------


def test_synth_deterministic_for_seed():
    params = SynthParams(games=2, sentences_per_game=10, seed=42)
    first = generate_synthetic_corpus(params)
    second = generate_synthetic_corpus(params)
    assert first[0] == second[0]
    assert first[1] == second[1]
    assert first[2].alignments == second[2].alignments


def test_synth_seed_changes_output():
    a = generate_synthetic_corpus(SynthParams(games=1, sentences_per_game=10, seed=1))
    b = generate_synthetic_corpus(SynthParams(games=1, sentences_per_game=10, seed=2))
    assert a[0] != b[0]


def test_synth_unit_truth_without_macros_or_distractors():
    params = SynthParams(
        games=2, sentences_per_game=15, distractor_rate=0.0, macro_rate=0.0, seed=3
    )
    sentences, _, truth = generate_synthetic_corpus(params)
    assert all(len(truth[s.sentence_id]) == 1 for s in sentences)


def test_synth_truth_counts_match_clause_regeneration_oracle():
    """Non-distractor sentences join one clause per described event with '; '."""
    params = SynthParams(
        games=3, sentences_per_game=20, macro_rate=0.4, max_macro_size=4,
        distractor_rate=0.2, seed=9,
    )
    sentences, _, truth = generate_synthetic_corpus(params)
    n_distractors = 0
    for s in sentences:
        described = truth[s.sentence_id]
        if not described:
            n_distractors += 1
            assert ";" not in s.text
        else:
            assert s.text.count(";") + 1 == len(described)
    assert 0 < n_distractors < len(sentences)


def test_synth_truth_events_fall_in_buckets():
    params = SynthParams(games=2, sentences_per_game=12, macro_rate=0.3, seed=4)
    sentences, events, truth = generate_synthetic_corpus(params)
    corpus = Corpus.build(sentences, events, CorpusConfig(window_half=75))
    for bucket in corpus.buckets:
        assert truth[bucket.sentence_id] <= set(bucket.event_ids)


def test_synth_type_skew_controls():
    params = SynthParams(
        games=4, sentences_per_game=25, event_rate=0.12,
        common_type_share=0.75, described_common_share=0.05, seed=6,
    )
    _, events, truth = generate_synthetic_corpus(params)
    share = sum(e.event_type == "pass" for e in events) / len(events)
    truth_ids = {eid for eids in truth.alignments.values() for eid in eids}
    by_id = {e.event_id: e for e in events}
    truth_share = sum(by_id[eid].event_type == "pass" for eid in truth_ids) / len(truth_ids)
    assert share > 0.45
    assert truth_share < 0.15


def _event(event_id, game_id, t, players=()):
    from commalign.corpus import Event

    return Event(event_id, game_id, t, "pass", (), tuple(players))
