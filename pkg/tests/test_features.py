from __future__ import annotations

import numpy as np
import pytest

from commalign.corpus import (
    Bucket,
    Corpus,
    CorpusConfig,
    Event,
    Sentence,
    Vocabulary,
    build_vocabulary,
)
from commalign.features import (
    FeatureSpaceMismatch,
    build_feature_space,
    featurize,
    string_match_count,
)


def _sentence(text, sid="s1", t=100):
    return Sentence.from_text(sid, "g", t, text)


def _event(eid, t, etype="pass", args=(), players=()):
    return Event(eid, "g", t, etype, tuple(sorted(args)), tuple(players))


@pytest.fixture()
def tiny():
    vocab = Vocabulary.from_words(["ball", "header", "pass", "shot", "wide"])
    events = [
        _event("e1", 90, "foul", [("qualifier", "Head Pass"), ("team", "Chelsea")], ["F. Malouda"]),
        _event("e2", 100, "pass", [("qualifier", "Cross")], ["L. Koscielny"]),
        _event("e3", 110, "shot", [("team", "Chelsea")], ["D. Drogba"]),
        _event("e4", 120, "miss", [], ["B. Sagna"]),
    ]
    space = build_feature_space(vocab, events)
    bucket = Bucket("s1", ("e1", "e2", "e3", "e4"))
    by_id = {e.event_id: e for e in events}
    return vocab, events, space, bucket, by_id


def test_space_slots_match_set_union_oracle(tiny):
    vocab, events, space, _, _ = tiny
    types = {e.event_type for e in events}
    cats = {pair for e in events for pair in e.categorical_args}
    assert len(space.event_types) == len(types)
    assert len(space.categorical_symbols) == len(cats)
    assert space.dim == len(vocab) + len(types) + len(cats) + 1


def test_same_categorical_value_shares_slot():
    vocab = Vocabulary.from_words([])
    events = [
        _event("a", 0, "pass", [("qualifier", "Head Pass")]),
        _event("b", 1, "foul", [("qualifier", "Head Pass")]),
    ]
    space = build_feature_space(vocab, events)
    slot_a = [s for s in space.event_slots(events[0]) if s >= space.cat_offset]
    slot_b = [s for s in space.event_slots(events[1]) if s >= space.cat_offset]
    assert slot_a == slot_b


def test_values_namespaced_by_argument_name():
    vocab = Vocabulary.from_words([])
    events = [
        _event("a", 0, "pass", [("qualifier", "Pass")]),
        _event("b", 1, "pass", [("outcome", "Pass")]),
    ]
    space = build_feature_space(vocab, events)
    assert len(space.categorical_symbols) == 2


def test_string_match_counts_window_players(tiny):
    _, events, _, bucket, by_id = tiny
    sentence = _sentence("malouda with a header towards koscielny")
    # window of e1 (bucket edge): e1, e2 -> both players mentioned
    assert string_match_count(sentence, events[0], bucket, by_id) == 2
    # window of e3: e2, e3, e4 -> only koscielny mentioned
    assert string_match_count(sentence, events[2], bucket, by_id) == 1


def test_string_match_zero_when_no_players_mentioned(tiny):
    _, events, _, bucket, by_id = tiny
    sentence = _sentence("a looping shot goes wide")
    for event in events:
        assert string_match_count(sentence, event, bucket, by_id) == 0


def test_string_match_requires_bucket_membership(tiny):
    _, events, _, bucket, by_id = tiny
    outside = _event("e9", 500, "pass", [], ["X. Unknown"])
    with pytest.raises(ValueError, match="not in bucket"):
        string_match_count(_sentence("text"), outside, bucket, by_id)


def test_string_match_against_cross_product_oracle(small_corpus):
    corpus, _, _, _ = small_corpus
    from commalign.corpus import tokenize

    checked = 0
    for bucket in corpus.buckets[:40]:
        sentence = corpus.sentences_by_id[bucket.sentence_id]
        for pos, eid in enumerate(bucket.event_ids):
            event = corpus.events_by_id[eid]
            window = bucket.event_ids[max(0, pos - 1) : pos + 2]
            names = set()
            for wid in window:
                for name in corpus.events_by_id[wid].string_args:
                    if any(tok in sentence.tokens for tok in tokenize(name)):
                        names.add(name.lower())
            got = string_match_count(sentence, event, bucket, corpus.events_by_id)
            assert got == len(names)
            checked += 1
    assert checked > 100


def test_featurize_sets_expected_blocks(tiny):
    _, events, space, bucket, by_id = tiny
    sentence = _sentence("malouda with a header but the pass goes wide")
    vec = featurize(sentence, events[0], bucket, space, by_id)
    # vocabulary hits: header, pass, wide
    assert len(vec.sentence_idx) == 3
    # event block: 1 type slot + 2 categorical slots
    assert len(vec.event_idx) == 3
    assert vec.string_count == 1.0
    dense = vec.to_dense()
    assert dense.sum() == pytest.approx(3 + 3 + 1)


def test_featurize_zero_vocabulary_sentence(tiny):
    _, events, space, bucket, by_id = tiny
    vec = featurize(_sentence("nothing matches here"), events[3], bucket, space, by_id)
    assert len(vec.sentence_idx) == 0


def test_featurize_active_event_slots_invariant(small_corpus):
    corpus, _, space, _ = small_corpus
    for bucket in corpus.buckets[:20]:
        sentence = corpus.sentences_by_id[bucket.sentence_id]
        for eid in bucket.event_ids:
            event = corpus.events_by_id[eid]
            vec = featurize(sentence, event, bucket, space, corpus.events_by_id)
            assert len(vec.event_idx) == 1 + len(event.categorical_args)


def test_featurize_is_pure(tiny):
    _, events, space, bucket, by_id = tiny
    sentence = _sentence("malouda passes")
    a = featurize(sentence, events[0], bucket, space, by_id)
    b = featurize(sentence, events[0], bucket, space, by_id)
    assert np.array_equal(a.indices(), b.indices())
    assert np.array_equal(a.values(), b.values())


def test_featurize_unknown_symbol_errors(tiny):
    _, _, space, bucket, by_id = tiny
    alien = _event("e1", 90, "unseen_type")
    with pytest.raises(FeatureSpaceMismatch):
        featurize(_sentence("x"), alien, None, space)


def test_dot_product_matches_dense_oracle(small_corpus):
    corpus, _, space, _ = small_corpus
    rng = np.random.default_rng(0)
    theta = rng.normal(size=space.dim)
    bucket = next(b for b in corpus.buckets if len(b) >= 2)
    sentence = corpus.sentences_by_id[bucket.sentence_id]
    for eid in bucket.event_ids:
        vec = featurize(sentence, corpus.events_by_id[eid], bucket, space, corpus.events_by_id)
        assert vec.dot(theta) == pytest.approx(float(vec.to_dense() @ theta), abs=1e-12)
    # pairwise dot of two featurized pairs equals brute-force overlap count
    e1, e2 = bucket.event_ids[:2]
    v1 = featurize(sentence, corpus.events_by_id[e1], bucket, space, corpus.events_by_id)
    v2 = featurize(sentence, corpus.events_by_id[e2], bucket, space, corpus.events_by_id)
    assert float(v1.to_dense() @ v2.to_dense()) == pytest.approx(
        len(set(v1.indices()[:-1]) & set(v2.indices()[:-1]))
        + v1.string_count * v2.string_count
    )


def test_string_count_monotone_when_player_token_appended(tiny):
    _, events, space, bucket, by_id = tiny
    base = _sentence("the ball breaks loose")
    richer = _sentence("the ball breaks loose for drogba")
    for event in events:
        v0 = featurize(base, event, bucket, space, by_id)
        v1 = featurize(richer, event, bucket, space, by_id)
        assert v1.string_count >= v0.string_count


def test_binary_string_mode(tiny):
    vocab, events, _, bucket, by_id = tiny
    space_bin = build_feature_space(vocab, events, string_mode="binary")
    sentence = _sentence("malouda and koscielny collide")
    v1 = featurize(sentence, events[0], bucket, space_bin, by_id)
    assert v1.string_count == 1.0
    v2 = featurize(_sentence("no names at all"), events[0], bucket, space_bin, by_id)
    assert v2.string_count == 0.0
