"""Backend parity and statistical agreement of the Monte Carlo kernels."""

import numpy as np
import pytest

from pearl_lab import kernels, theory
from pearl_lab.models import InvalidAlpha


@pytest.fixture
def backend_env(monkeypatch):
    def set_backend(name):
        if name is None:
            monkeypatch.delenv("PEARL_LAB_BACKEND", raising=False)
        else:
            monkeypatch.setenv("PEARL_LAB_BACKEND", name)

    return set_backend


class TestBackendSelection:
    def test_default_prefers_numba(self, backend_env):
        backend_env(None)
        want = "numba" if kernels.HAS_NUMBA else "numpy"
        assert kernels.active_backend() == want

    def test_explicit_numpy(self, backend_env):
        backend_env("numpy")
        assert kernels.active_backend() == "numpy"

    def test_invalid_name_raises(self, backend_env):
        backend_env("cuda")
        with pytest.raises(RuntimeError):
            kernels.active_backend()


class TestBackendParity:
    """Both backends consume one shared uniform table, so outputs are identical."""

    @pytest.mark.parametrize("alpha,gamma", [(0.3, 1), (0.5, 4), (0.8, 3), (0.95, 8)])
    def test_sd_bit_identical(self, backend_env, alpha, gamma):
        if not kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        backend_env("numba")
        a = kernels.sd_step_finalized(alpha, gamma, 20_000, seed=5)
        backend_env("numpy")
        b = kernels.sd_step_finalized(alpha, gamma, 20_000, seed=5)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("alpha,gamma", [(0.3, 2), (0.7, 4), (0.9, 6)])
    def test_pearl_bit_identical(self, backend_env, alpha, gamma):
        if not kernels.HAS_NUMBA:
            pytest.skip("numba unavailable")
        backend_env("numba")
        fin_a, modes_a = kernels.pearl_step_finalized(alpha, gamma, 20_000, seed=5)
        backend_env("numpy")
        fin_b, modes_b = kernels.pearl_step_finalized(alpha, gamma, 20_000, seed=5)
        np.testing.assert_array_equal(fin_a, fin_b)
        np.testing.assert_array_equal(modes_a, modes_b)

    def test_seed_reproducibility(self):
        a = kernels.sd_step_finalized(0.6, 3, 1_000, seed=9)
        b = kernels.sd_step_finalized(0.6, 3, 1_000, seed=9)
        c = kernels.sd_step_finalized(0.6, 3, 1_000, seed=10)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestDraftThenVerifyKernel:
    @pytest.mark.parametrize("alpha,gamma", [(0.0, 3), (0.5, 2), (0.8, 4), (0.9, 8)])
    def test_mean_matches_closed_form(self, alpha, gamma):
        fin = kernels.sd_step_finalized(alpha, gamma, 200_000, seed=0)
        want = theory.sd_expected_tokens(alpha, gamma)
        assert float(fin.mean()) == pytest.approx(want, rel=0.01)

    def test_bounds(self):
        fin = kernels.sd_step_finalized(0.7, 4, 10_000, seed=1)
        assert fin.min() >= 1 and fin.max() <= 5

    def test_alpha_one_always_full_block(self):
        fin = kernels.sd_step_finalized(1.0, 3, 1_000, seed=0)
        assert np.all(fin == 4)

    def test_rejects_bad_alpha(self):
        with pytest.raises(InvalidAlpha):
            kernels.sd_step_finalized(1.5, 3, 10, seed=0)


class TestTwoPhaseKernel:
    @pytest.mark.parametrize("alpha,gamma", [(0.5, 2), (0.7, 4), (0.9, 6)])
    def test_mean_matches_stationary_form(self, alpha, gamma):
        fin, _ = kernels.pearl_step_finalized(alpha, gamma, 300_000, seed=0)
        want = theory.pearl_steady_state_tokens(alpha, gamma)
        assert float(fin.mean()) == pytest.approx(want, rel=0.01)

    @pytest.mark.parametrize("alpha,gamma", [(0.6, 3), (0.8, 5)])
    def test_mode_occupancy_matches_chain(self, alpha, gamma):
        # Stationary share of post-verify steps: alpha / (1 + alpha - alpha^gamma).
        _, modes = kernels.pearl_step_finalized(alpha, gamma, 300_000, seed=2)
        want = alpha / (1.0 + alpha - alpha**gamma)
        assert float(modes.mean()) == pytest.approx(want, rel=0.02)

    def test_first_step_is_preverify(self):
        _, modes = kernels.pearl_step_finalized(0.9, 4, 10, seed=3)
        assert modes[0] == 0

    def test_bounds(self):
        fin, modes = kernels.pearl_step_finalized(0.8, 4, 10_000, seed=1)
        assert fin.min() >= 1 and fin.max() <= 4
        assert fin[modes == 0].max() == 1  # pre-verify always finalizes one


class TestSegmentKernel:
    @pytest.mark.parametrize("alpha", [0.5, 0.8, 0.9])
    def test_mean_matches_geometric(self, alpha):
        runs = kernels.segment_accept_runs(alpha, 200_000, seed=0)
        assert float(runs.mean()) == pytest.approx(alpha / (1 - alpha), rel=0.02)

    @pytest.mark.parametrize("alpha,k", [(0.8, 3), (0.9, 5)])
    def test_tail_probability(self, alpha, k):
        runs = kernels.segment_accept_runs(alpha, 200_000, seed=1)
        assert float((runs >= k).mean()) == pytest.approx(alpha**k, rel=0.02)

    def test_alpha_zero_all_empty(self):
        assert not kernels.segment_accept_runs(0.0, 100, seed=0).any()

    def test_alpha_one_rejected(self):
        with pytest.raises(InvalidAlpha):
            kernels.segment_accept_runs(1.0, 10, seed=0)
