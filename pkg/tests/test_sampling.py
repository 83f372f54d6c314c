"""Accept/resample rule: acceptance ratios, chain verification, output law."""

import numpy as np
import pytest
from scipy import stats

from pearl_lab.core import ProbDist, RandomStream, ZeroDraftProb, one_hot, residual_dist, sample
from pearl_lab.sampling import VerifyResult, accept_prob, verify_chain


class TestAcceptProb:
    def test_target_dominates_accepts(self):
        p = ProbDist([0.6, 0.4])
        q = ProbDist([0.4, 0.6])
        assert accept_prob(p, q, 0) == 1.0

    def test_ratio_when_draft_overshoots(self):
        p = ProbDist([0.6, 0.4])
        q = ProbDist([0.4, 0.6])
        assert accept_prob(p, q, 1) == pytest.approx(0.4 / 0.6)

    def test_equal_probs_accept(self):
        p = ProbDist([0.5, 0.5])
        assert accept_prob(p, p, 1) == 1.0

    def test_zero_draft_prob_raises(self):
        p = ProbDist([0.5, 0.5, 0.0])
        q = ProbDist([0.5, 0.0, 0.5])
        with pytest.raises(ZeroDraftProb):
            accept_prob(p, q, 1)


class TestVerifyChain:
    def test_identical_dists_accept_everything(self):
        d = ProbDist([0.3, 0.3, 0.4])
        rng = RandomStream(1)
        res = verify_chain([0, 1, 2], [d, d, d], [d, d, d], rng)
        assert res == VerifyResult(accepted_count=3, correction=None, examined=3)

    def test_certain_rejection_at_first_slot(self):
        q = one_hot(4, 1)
        p = one_hot(4, 3)
        res = verify_chain([1], [q], [p], rng=RandomStream(0))
        assert res.accepted_count == 0
        assert res.correction == 3
        assert res.examined == 1

    def test_rejection_midway(self):
        d = ProbDist([0.5, 0.5])
        q_bad = one_hot(2, 0)
        p_bad = one_hot(2, 1)
        res = verify_chain([0, 0, 0], [d, q_bad, d], [d, p_bad, d], RandomStream(5))
        assert res.accepted_count == 1
        assert res.correction == 1
        assert res.examined == 2

    def test_length_mismatch_raises(self):
        d = ProbDist([0.5, 0.5])
        with pytest.raises(ValueError):
            verify_chain([0, 1], [d], [d, d], RandomStream(0))
        with pytest.raises(ValueError):
            verify_chain([0], [d], [d, d], RandomStream(0))

    def test_empty_chain_accepts_vacuously(self):
        res = verify_chain([], [], [], RandomStream(0))
        assert res == VerifyResult(0, None, 0)

    def test_draw_consumption(self):
        # One uniform per examined slot, plus one sample on rejection.
        d = ProbDist([0.5, 0.5])
        rng = RandomStream(3)
        verify_chain([0, 1], [d, d], [d, d], rng)
        assert rng.n_draws == 2
        q_bad, p_bad = one_hot(2, 0), one_hot(2, 1)
        rng = RandomStream(3)
        verify_chain([0, 0], [d, q_bad], [d, p_bad], rng)
        assert rng.n_draws == 3  # two accept draws, one correction sample


class TestOutputLaw:
    """One verified slot must reproduce the target law exactly.

    P(out = x) = min(p, q)(x) + (1 - sum(min(p, q))) * residual(x) = p(x),
    so empirical frequencies of draft-accept-or-correct must match p.
    """

    P = [0.5, 0.3, 0.2]
    Q = [0.2, 0.5, 0.3]

    def _one_slot(self, rng: RandomStream) -> int:
        p, q = ProbDist(self.P), ProbDist(self.Q)
        y = sample(q, rng)
        res = verify_chain([y], [q], [p], rng)
        return y if res.accepted_count == 1 else res.correction

    def test_identity_is_exact(self):
        p = np.array(self.P)
        q = np.array(self.Q)
        overlap = np.minimum(p, q)
        resid = np.clip(p - q, 0.0, None)
        resid /= resid.sum()
        np.testing.assert_allclose(overlap + (1 - overlap.sum()) * resid, p, atol=1e-12)

    def test_empirical_law_matches_target(self):
        rng = RandomStream(42)
        n = 100_000
        counts = np.bincount([self._one_slot(rng) for _ in range(n)], minlength=3)
        np.testing.assert_allclose(counts / n, self.P, atol=5e-3)
        chi2 = stats.chisquare(counts, f_exp=np.array(self.P) * n)
        assert chi2.pvalue > 1e-3, f"law mismatch: p={chi2.pvalue}"

    def test_residual_used_on_rejection_matches_hand_value(self):
        p, q = ProbDist(self.P), ProbDist(self.Q)
        r = residual_dist(p, q)
        np.testing.assert_allclose(r.probs, [1.0, 0.0, 0.0], atol=1e-12)
