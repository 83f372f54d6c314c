import pytest

from pearl_lab.models import LatencyProfile, train_ngram
from pearl_lab.textdata import corpus_sequences, load_corpus_text


@pytest.fixture(scope="session")
def corpus_seqs():
    return corpus_sequences(load_corpus_text("bundled"))


@pytest.fixture(scope="session")
def ngram_pair(corpus_seqs):
    """A byte-level 2-gram draft and 3-gram target trained once per session."""
    draft = train_ngram(corpus_seqs, order=2, vocab_size=257, latency=LatencyProfile(1.0))
    target = train_ngram(corpus_seqs, order=3, vocab_size=257, latency=LatencyProfile(3.0))
    return draft, target
