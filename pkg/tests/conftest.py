import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mmtopic.corpus import (
    Corpus,
    MultimodalDocument,
    SyntheticSpec,
    Vocabulary,
    generate_synthetic,
    vectorize,
)


def make_corpus(token_lists, *, text_dim=4, image_dim=3, seed=0,
                vocabulary=None) -> Corpus:
    """Small corpus with random embeddings over the given token lists."""
    rng = np.random.default_rng(seed)
    if vocabulary is None:
        terms = sorted({t for tokens in token_lists for t in tokens})
        vocabulary = Vocabulary.from_terms(terms)
    docs = []
    for i, tokens in enumerate(token_lists):
        docs.append(MultimodalDocument(
            id=f"d{i}",
            tokens=tuple(tokens),
            bow=vectorize(tokens, vocabulary),
            text_embedding=rng.standard_normal(text_dim),
            image_embedding=rng.standard_normal(image_dim),
            image_ref=f"img{i}",
        ))
    return Corpus(vocabulary=vocabulary, documents=tuple(docs))


@pytest.fixture(scope="session")
def tiny_planted():
    """A small planted corpus shared by the faster model tests."""
    spec = SyntheticSpec(num_topics_true=3, vocab_size=60, docs=150, doc_length=25,
                         embed_dim_text=8, embed_dim_image=8,
                         topic_word_concentration=0.5, embedding_noise=0.02, seed=11)
    return generate_synthetic(spec)


@pytest.fixture
def tiny_corpus():
    return make_corpus([
        ["apple", "banana", "apple", "cherry"],
        ["banana", "cherry", "durian"],
        ["apple", "durian", "durian", "cherry", "banana"],
        ["cherry", "apple", "banana"],
    ])
