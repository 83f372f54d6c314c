"""N-gram training and serialization, synthetic pairs, and overlap estimation."""

import numpy as np
import pytest

from pearl_lab.core import ProbDist, one_hot, uniform_dist
from pearl_lab.models import (
    ConstDistModel,
    EmptyCorpus,
    InvalidAlpha,
    LatencyProfile,
    NGramModel,
    ScriptedModel,
    compute_c,
    estimate_alpha,
    make_alpha_pair,
    train_ngram,
)


class TestLatencyProfile:
    def test_default_unit_time(self):
        assert LatencyProfile().forward_time == 1.0

    @pytest.mark.parametrize("bad", [0.0, -1.0])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            LatencyProfile(bad)


class TestNGramTraining:
    def test_hand_counted_probabilities(self):
        # Bigram over vocab 4: context (0,) sees 1 twice; (1,) sees 2 and 3 once.
        model = train_ngram([[0, 1, 2, 0, 1, 3]], order=2, smoothing_lambda=0.5, vocab_size=4)
        lam, v = 0.5, 4
        d0 = model.next_dist([9, 9, 0])
        np.testing.assert_allclose(
            d0.probs,
            [(0 + lam) / (2 + lam * v), (2 + lam) / (2 + lam * v), lam / (2 + lam * v), lam / (2 + lam * v)],
        )
        d1 = model.next_dist([1])
        np.testing.assert_allclose(
            d1.probs,
            [lam / (2 + lam * v), lam / (2 + lam * v), (1 + lam) / (2 + lam * v), (1 + lam) / (2 + lam * v)],
        )

    def test_unseen_context_is_uniform(self):
        model = train_ngram([[0, 1, 2]], order=3, smoothing_lambda=0.5, vocab_size=5)
        assert model.next_dist([3, 4]) == uniform_dist(5)

    def test_short_prefix_is_uniform(self):
        model = train_ngram([[0, 1, 2]], order=3, smoothing_lambda=0.5, vocab_size=5)
        assert model.next_dist([]) == uniform_dist(5)
        assert model.next_dist([0]) == uniform_dist(5)

    def test_windows_do_not_cross_sequences(self):
        model = train_ngram([[0, 1, 2], [3, 4, 5]], order=3, smoothing_lambda=0.5, vocab_size=6)
        assert model.next_dist([1, 2]) == uniform_dist(6)  # would see 3 if windows crossed
        assert model.next_dist([2, 3]) == uniform_dist(6)

    def test_distributions_are_cached(self):
        model = train_ngram([[0, 1, 0, 1]], order=2, smoothing_lambda=0.5, vocab_size=3)
        assert model.next_dist([0]) is model.next_dist([2, 0])

    def test_empty_corpus_raises(self):
        with pytest.raises(EmptyCorpus):
            train_ngram([], order=2)
        with pytest.raises(EmptyCorpus):
            train_ngram([[0]], order=2)  # no full window anywhere

    def test_rejects_order_zero(self):
        with pytest.raises(ValueError):
            train_ngram([[0, 1, 2]], order=0)

    def test_unigram_ignores_context(self):
        model = train_ngram([[0, 0, 0, 1]], order=1, smoothing_lambda=0.5, vocab_size=2)
        # One empty context holding all four observations.
        np.testing.assert_allclose(model.next_dist([]).probs, [3.5 / 5.0, 1.5 / 5.0])
        assert model.next_dist([1, 1]) == model.next_dist([])


class TestNGramSerialization:
    def roundtrip(self, model: NGramModel) -> NGramModel:
        return NGramModel.from_bytes(model.to_bytes())

    def test_roundtrip_preserves_everything(self, corpus_seqs):
        model = train_ngram(corpus_seqs[:100], order=3, smoothing_lambda=0.25, vocab_size=257)
        back = self.roundtrip(model)
        assert back.order == model.order
        assert back.vocab_size == model.vocab_size
        assert back.smoothing == model.smoothing
        assert set(back.counts) == set(model.counts)
        for ctx in model.counts:
            np.testing.assert_array_equal(back.counts[ctx], model.counts[ctx])

    def test_roundtrip_preserves_next_dist(self, corpus_seqs):
        model = train_ngram(corpus_seqs[:50], order=2, vocab_size=257)
        back = self.roundtrip(model)
        probe = corpus_seqs[0][:3]
        assert back.next_dist(probe) == model.next_dist(probe)

    def test_save_load_file(self, tmp_path, corpus_seqs):
        model = train_ngram(corpus_seqs[:20], order=2, vocab_size=257)
        path = str(tmp_path / "m.bin")
        model.save(path)
        back = NGramModel.load(path)
        assert back.next_dist(corpus_seqs[0][:1]) == model.next_dist(corpus_seqs[0][:1])

    def test_bad_magic_rejected(self):
        with pytest.raises(ValueError):
            NGramModel.from_bytes(b"NOPE!!" + b"\x00" * 32)

    def test_trailing_bytes_rejected(self, corpus_seqs):
        blob = train_ngram(corpus_seqs[:10], order=2, vocab_size=257).to_bytes()
        with pytest.raises(ValueError):
            NGramModel.from_bytes(blob + b"\x00")

    def test_truncated_blob_rejected(self, corpus_seqs):
        blob = train_ngram(corpus_seqs[:10], order=2, vocab_size=257).to_bytes()
        with pytest.raises(ValueError):
            NGramModel.from_bytes(blob[:-3])


class TestAlphaPair:
    @pytest.mark.parametrize("alpha", [0.0, 0.3, 0.8, 1.0])
    def test_exact_overlap(self, alpha):
        pair = make_alpha_pair(alpha, vocab_size=64)
        # The target is a point mass, so sum(min(p, q)) is exactly q[0] = alpha.
        est = estimate_alpha(pair.draft, pair.target, [[], [1, 2], [5]])
        assert est == pytest.approx(alpha, abs=1e-12)

    def test_draft_mass_spreads_rest(self):
        pair = make_alpha_pair(0.7, vocab_size=8)
        q = pair.draft.next_dist([]).probs
        assert q[0] == pytest.approx(0.7)
        np.testing.assert_allclose(q[1:], (1 - 0.7) / 7)

    @pytest.mark.parametrize("bad", [-0.1, 1.5])
    def test_rejects_bad_alpha(self, bad):
        with pytest.raises(InvalidAlpha):
            make_alpha_pair(bad)

    def test_latencies_carried(self):
        pair = make_alpha_pair(0.5, draft_time=0.5, target_time=2.5)
        assert compute_c(pair.draft.latency, pair.target.latency) == pytest.approx(5.0)


class TestEstimateAlpha:
    def test_identical_models_give_one(self):
        m = ConstDistModel(ProbDist([0.2, 0.3, 0.5]))
        assert estimate_alpha(m, m, [[], [0]]) == pytest.approx(1.0)

    def test_hand_value(self):
        draft = ConstDistModel(ProbDist([0.2, 0.5, 0.3]))
        target = ConstDistModel(ProbDist([0.5, 0.3, 0.2]))
        # sum(min(p, q)) = 0.2 + 0.3 + 0.2
        assert estimate_alpha(draft, target, [[]]) == pytest.approx(0.7)

    def test_requires_prefixes(self):
        m = ConstDistModel(ProbDist([0.5, 0.5]))
        with pytest.raises(ValueError):
            estimate_alpha(m, m, [])


class TestScriptedModel:
    def test_table_lookup_by_prefix_length(self):
        model = ScriptedModel({0: one_hot(4, 1), 2: one_hot(4, 3)}, vocab_size=4)
        assert model.next_dist([]) == one_hot(4, 1)
        assert model.next_dist([0, 0]) == one_hot(4, 3)

    def test_missing_length_raises(self):
        model = ScriptedModel({0: one_hot(4, 1)}, vocab_size=4)
        with pytest.raises(KeyError, match="prefix length 3"):
            model.next_dist([1, 2, 3])
