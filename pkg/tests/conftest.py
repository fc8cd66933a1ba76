from __future__ import annotations

import pytest

from commalign.corpus import Corpus, CorpusConfig, build_vocabulary
from commalign.features import build_feature_space
from commalign.synth import SynthParams, generate_synthetic_corpus


@pytest.fixture(scope="session")
def small_corpus():
    """3 games x 12 sentences; enough structure for graph/search tests."""
    params = SynthParams(
        games=3, sentences_per_game=12, macro_rate=0.25, max_macro_size=3, seed=11
    )
    sentences, events, truth = generate_synthetic_corpus(params)
    config = CorpusConfig(vocab_min_freq=2)
    corpus = Corpus.build(sentences, events, config)
    vocab = build_vocabulary(sentences, events, config)
    space = build_feature_space(vocab, events)
    return corpus, truth, space, params
