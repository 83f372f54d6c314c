"""Step pricing, trace simulation, and the gamma sweep plumbing."""

import numpy as np
import pytest

from pearl_lab.engines import EngineConfig, StepTrace, decode_pearl, decode_sd
from pearl_lab.models import make_alpha_pair
from pearl_lab.simulator import (
    SWEEP_CSV_HEADER,
    MismatchedEngine,
    TimingParams,
    simulate_counts,
    simulate_run,
    sweep_gamma,
    sweep_rows,
    time_ar_step,
    time_pearl_step,
    time_sd_step,
    write_sweep_csv,
)


class TestStepTimes:
    def test_arithmetic(self):
        p = TimingParams(t=2.0, c=3.0)
        assert time_ar_step(p) == 6.0
        assert time_sd_step(4, p) == 4 * 2.0 + 6.0
        assert time_pearl_step(4, p) == max(4 * 2.0, 6.0)
        assert time_pearl_step(2, p) == 6.0  # target side dominates

    def test_target_time_property(self):
        assert TimingParams(t=0.5, c=4.0).target_time == 2.0

    @pytest.mark.parametrize("kwargs", [dict(t=0.0), dict(c=0.0), dict(t=-1.0)])
    def test_rejects_nonpositive(self, kwargs):
        with pytest.raises(ValueError):
            TimingParams(**{"t": 1.0, "c": 1.0, **kwargs})


class TestSimulateRun:
    def _sd_steps(self):
        return [
            StepTrace(0, "sd", (1, 1, 1), 3, None, 4, 3.0, 3.0),
            StepTrace(1, "sd", (1, 1, 1), 0, 7, 1, 3.0, 3.0),
        ]

    def test_sd_pricing(self):
        params = TimingParams(t=1.0, c=3.0)
        rep = simulate_run(self._sd_steps(), params, "sd")
        assert rep.total_time == 2 * (3 * 1.0 + 3.0)
        assert rep.finalized_tokens == 5
        assert rep.tokens_per_time == pytest.approx(5 / 12)
        # Speedup against one token per c*t.
        assert rep.speedup_vs_ar == pytest.approx((5 / 12) * 3.0)

    def test_ar_speedup_is_one(self):
        steps = [StepTrace(i, "ar", (), 0, None, 1, 0.0, 3.0) for i in range(7)]
        rep = simulate_run(steps, TimingParams(t=1.0, c=3.0), "ar")
        assert rep.speedup_vs_ar == pytest.approx(1.0)

    def test_pearl_overlap_pricing(self):
        steps = [StepTrace(0, "pre_verify", (1, 1, 1, 1), 1, None, 1, 4.0, 3.0)]
        rep = simulate_run(steps, TimingParams(t=1.0, c=3.0), "pearl")
        assert rep.total_time == 4.0  # max(gamma * t, c * t)

    def test_engine_kind_mismatch(self):
        with pytest.raises(MismatchedEngine):
            simulate_run(self._sd_steps(), TimingParams(), "pearl")

    def test_unknown_kind(self):
        with pytest.raises(MismatchedEngine):
            simulate_run(self._sd_steps(), TimingParams(), "warp")

    def test_empty_trace_rejected(self):
        with pytest.raises(ValueError):
            simulate_run([], TimingParams(), "sd")

    def test_matches_simulate_counts_on_real_trace(self):
        pair = make_alpha_pair(0.7, vocab_size=16)
        params = TimingParams(t=1.0, c=4.0)
        cfg = EngineConfig(gamma=3, max_new_tokens=96, seed=6)
        sd = decode_sd(pair.draft, pair.target, [], cfg)
        fin = np.array([tr.finalized_delta for tr in sd.steps])
        assert simulate_run(sd.steps, params, "sd") == simulate_counts(fin, 3, params, "sd")
        pearl = decode_pearl(pair.draft, pair.target, [], cfg, concurrent=False)
        fin = np.array([tr.finalized_delta for tr in pearl.steps])
        assert simulate_run(pearl.steps, params, "pearl") == simulate_counts(
            fin, 3, params, "pearl"
        )


class TestSweep:
    def test_one_row_per_gamma(self):
        rows = sweep_rows(0.6, 3.0, [1, 2, 3], n_steps=5_000, seed=4)
        assert [r.gamma for r in rows] == [1, 2, 3]
        assert all(r.alpha == 0.6 and r.c == 3.0 for r in rows)
        # gamma = 1 steps always finalize exactly one token, so no spread.
        assert rows[0].speedup_stderr == 0.0
        assert all(r.speedup_stderr > 0 for r in rows[1:])

    def test_reproducible(self):
        a = sweep_rows(0.7, 2.0, [1, 4], n_steps=5_000, seed=4)
        assert a == sweep_rows(0.7, 2.0, [1, 4], n_steps=5_000, seed=4)
        assert a != sweep_rows(0.7, 2.0, [1, 4], n_steps=5_000, seed=5)

    def test_sweep_gamma_dict_view(self):
        rows = sweep_rows(0.6, 3.0, [2, 5], n_steps=5_000, seed=1)
        d = sweep_gamma(0.6, 3.0, [2, 5], n_steps=5_000, seed=1)
        assert d == {r.gamma: r.speedup_mean for r in rows}

    def test_csv_layout(self, tmp_path):
        rows = sweep_rows(0.6, 3.0, [1, 2], n_steps=2_000, seed=0)
        path = tmp_path / "sweep.csv"
        write_sweep_csv(rows, str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(SWEEP_CSV_HEADER)
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "1"
        assert float(first[3]) == pytest.approx(rows[0].speedup_mean, abs=1e-6)
