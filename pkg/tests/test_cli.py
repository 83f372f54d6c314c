"""Config validation paths, CLI exit codes, and end-to-end artifact layout."""

import csv
import json
import xml.etree.ElementTree as ET

import pytest

from pearl_lab.cli import main
from pearl_lab.config import (
    ConfigError,
    NGramSpec,
    SyntheticSpec,
    load_run_config,
    load_sweep_config,
    load_train_config,
)
from pearl_lab.engines import read_trace_jsonl
from pearl_lab.models import NGramModel
from pearl_lab.simulator import SWEEP_CSV_HEADER


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


RUN_DOC = {
    "engine": "pearl",
    "gamma": 3,
    "max_new_tokens": 32,
    "seed": 7,
    "model": {"synthetic": {"alpha": 0.7, "vocab": 32}},
    "timing": {"t": 1.0, "c": 3.0},
}


class TestRunConfig:
    def test_loads_synthetic(self, tmp_path):
        cfg = load_run_config(write_json(tmp_path / "r.json", RUN_DOC))
        assert cfg.engine == "pearl"
        assert cfg.gamma == 3
        assert cfg.model == SyntheticSpec(alpha=0.7, vocab=32)
        assert cfg.timing.c == 3.0

    def test_loads_ngram(self, tmp_path):
        doc = dict(RUN_DOC, model={"ngram": {"corpus": "bundled", "draft_order": 2, "target_order": 3}})
        cfg = load_run_config(write_json(tmp_path / "r.json", doc))
        assert cfg.model == NGramSpec(corpus="bundled", draft_order=2, target_order=3)

    def test_unknown_key_has_json_path(self, tmp_path):
        doc = dict(RUN_DOC, typo_key=1)
        with pytest.raises(ConfigError) as exc:
            load_run_config(write_json(tmp_path / "r.json", doc))
        assert "$" in exc.value.path

    def test_engine_enum_enforced(self, tmp_path):
        doc = dict(RUN_DOC, engine="beam")
        with pytest.raises(ConfigError):
            load_run_config(write_json(tmp_path / "r.json", doc))

    def test_missing_gamma_for_block_engines(self, tmp_path):
        doc = {k: v for k, v in RUN_DOC.items() if k != "gamma"}
        with pytest.raises(ConfigError) as exc:
            load_run_config(write_json(tmp_path / "r.json", doc))
        assert exc.value.path == "$.gamma"

    def test_ar_needs_no_gamma(self, tmp_path):
        doc = {k: v for k, v in RUN_DOC.items() if k != "gamma"}
        doc["engine"] = "ar"
        assert load_run_config(write_json(tmp_path / "r.json", doc)).gamma is None

    def test_model_must_be_single_variant(self, tmp_path):
        doc = dict(
            RUN_DOC,
            model={
                "synthetic": {"alpha": 0.5},
                "ngram": {"corpus": "bundled", "draft_order": 2, "target_order": 3},
            },
        )
        with pytest.raises(ConfigError):
            load_run_config(write_json(tmp_path / "r.json", doc))

    def test_alpha_range_enforced(self, tmp_path):
        doc = dict(RUN_DOC, model={"synthetic": {"alpha": 1.5}})
        with pytest.raises(ConfigError) as exc:
            load_run_config(write_json(tmp_path / "r.json", doc))
        assert "alpha" in exc.value.path

    def test_malformed_json_reports_config_error(self, tmp_path):
        path = tmp_path / "r.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_run_config(str(path))


class TestOtherConfigs:
    def test_sweep_defaults(self, tmp_path):
        doc = {"alphas": [0.5], "cs": [3.0], "gammas": [1, 2], "seed": 3}
        cfg = load_sweep_config(write_json(tmp_path / "s.json", doc))
        assert cfg.steps == 100_000
        assert cfg.gammas == (1, 2)

    def test_sweep_alpha_upper_bound(self, tmp_path):
        doc = {"alphas": [1.0], "cs": [3.0], "gammas": [1], "seed": 3}
        with pytest.raises(ConfigError):
            load_sweep_config(write_json(tmp_path / "s.json", doc))

    def test_train_config(self, tmp_path):
        doc = {"corpus": "bundled", "orders": [2, 3]}
        cfg = load_train_config(write_json(tmp_path / "t.json", doc))
        assert cfg.orders == (2, 3)
        assert cfg.smoothing == 0.5


class TestExitCodes:
    def test_invalid_config_is_2(self, tmp_path, capsys):
        path = write_json(tmp_path / "bad.json", {"engine": "pearl"})
        assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_missing_config_file_is_3(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", "x"]) == 3

    def test_missing_prompts_file_is_3(self, tmp_path):
        doc = dict(RUN_DOC, prompts=str(tmp_path / "ghost.txt"))
        path = write_json(tmp_path / "r.json", doc)
        assert main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 3

    def test_missing_out_dir_is_2(self, tmp_path):
        path = write_json(tmp_path / "r.json", RUN_DOC)
        assert main(["run", "--config", path]) == 2


class TestRunCommand:
    def _run(self, tmp_path, doc, extra=()):
        cfg = write_json(tmp_path / "run.json", doc)
        out = tmp_path / "out"
        code = main(["run", "--config", cfg, "--out", str(out), *extra])
        assert code == 0
        return out

    def test_synthetic_artifacts(self, tmp_path):
        out = self._run(tmp_path, RUN_DOC)
        steps = read_trace_jsonl(str(out / "trace_000.jsonl"))
        assert steps and steps[0].kind in ("pre_verify", "post_verify")
        with open(out / "summary.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        assert rows[0]["engine"] == "pearl"
        assert int(rows[0]["new_tokens"]) == 32
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["total_new_tokens"] == 32
        assert summary["engine"] == "pearl"
        for svg in ("finalized_per_step.svg", "run_hist.svg"):
            ET.fromstring((out / svg).read_text())  # well-formed XML

    def test_prompt_file_and_text_output(self, tmp_path):
        prompts = tmp_path / "p.txt"
        prompts.write_text("the world\ngood people\n")
        doc = dict(
            RUN_DOC,
            engine="sd",
            model={"ngram": {"corpus": "bundled", "draft_order": 2, "target_order": 3}},
            prompts=str(prompts),
            max_new_tokens=16,
        )
        out = self._run(tmp_path, doc)
        lines = (out / "outputs.txt").read_text().splitlines()
        assert len(lines) == 2
        assert (out / "trace_001.jsonl").exists()

    def test_seed_override_changes_step_pattern(self, tmp_path):
        # Synthetic-pair outputs are constant (losslessness pins them to the
        # point mass), so the seed shows up in the acceptance pattern instead.
        out_a = self._run(tmp_path, RUN_DOC)
        base = (out_a / "trace_000.jsonl").read_text()
        cfg = write_json(tmp_path / "run2.json", RUN_DOC)
        out_b = tmp_path / "out_b"
        assert main(["run", "--config", cfg, "--out", str(out_b), "--seed", "8"]) == 0
        assert (out_b / "trace_000.jsonl").read_text() != base

    def test_parallel_prompts_identical_artifacts(self, tmp_path):
        prompts = tmp_path / "p.txt"
        prompts.write_text("a\nb\nc\nd\n")
        doc = dict(RUN_DOC, prompts=str(prompts), max_new_tokens=16)
        serial = self._run(tmp_path, doc)
        cfg = write_json(tmp_path / "run.json", doc)
        fanned = tmp_path / "out_fan"
        assert main(["run", "--config", cfg, "--out", str(fanned), "--parallel-prompts", "4"]) == 0
        assert (serial / "summary.csv").read_text() == (fanned / "summary.csv").read_text()
        assert (serial / "outputs.txt").read_text() == (fanned / "outputs.txt").read_text()

    def test_ar_engine_smoke(self, tmp_path):
        doc = {k: v for k, v in RUN_DOC.items() if k != "gamma"}
        doc["engine"] = "ar"
        out = self._run(tmp_path, doc)
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["acceptance"] is None
        assert summary["sim_speedup"] == pytest.approx(1.0)
        assert not (out / "run_hist.csv").exists()

    def test_greedy_runs_are_identical(self, tmp_path):
        doc = dict(RUN_DOC, greedy=True)
        a = self._run(tmp_path, doc)
        cfg = write_json(tmp_path / "run.json", doc)
        b = tmp_path / "b"
        assert main(["run", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "outputs.txt").read_text() == (b / "outputs.txt").read_text()


class TestSweepCommand:
    def test_artifacts(self, tmp_path):
        doc = {
            "alphas": [0.6, 0.8],
            "cs": [3.0],
            "gammas": [1, 2, 3, 4],
            "steps": 4000,
            "seed": 2,
        }
        cfg = write_json(tmp_path / "s.json", doc)
        out = tmp_path / "out"
        assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
        lines = (out / "sweep.csv").read_text().strip().splitlines()
        assert lines[0] == ",".join(SWEEP_CSV_HEADER)
        assert len(lines) == 1 + 2 * 4
        ET.fromstring((out / "sweep_c3.svg").read_text())


class TestTrainCommand:
    def test_models_are_loadable(self, tmp_path):
        doc = {"corpus": "bundled", "orders": [2], "out_dir": str(tmp_path / "m")}
        cfg = write_json(tmp_path / "t.json", doc)
        assert main(["train", "--config", cfg]) == 0
        model = NGramModel.load(str(tmp_path / "m" / "ngram_order2.bin"))
        assert model.order == 2
        assert model.next_dist([101]).probs.shape == (257,)
