import json
import shutil
from pathlib import Path

import pytest

from yocausal.cli import main, run_toy_e2e

GOLDEN = Path(__file__).parent / "fixtures" / "golden"


def make_config(tmp_path, **extra):
    out = tmp_path / "out"
    cfg = {"catalog": str(tmp_path / "catalog.jsonl"), "output_dir": str(out)}
    cfg.update(extra)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, out


def stage_golden_inputs(tmp_path):
    path, out = make_config(tmp_path)
    (out / "losses").mkdir(parents=True)
    (out / "labels").mkdir(parents=True)
    shutil.copy(GOLDEN / "catalog.jsonl", tmp_path / "catalog.jsonl")
    shutil.copy(GOLDEN / "catalog.jsonl", out / "catalog.validated.jsonl")
    shutil.copy(GOLDEN / "losses_alpha.jsonl", out / "losses" / "alpha.jsonl")
    shutil.copy(GOLDEN / "losses_beta.jsonl", out / "losses" / "beta.jsonl")
    shutil.copy(GOLDEN / "labels.jsonl", out / "labels" / "stub.jsonl")
    return path, out


class TestReportGolden:
    def test_report_matches_golden_bytes(self, tmp_path):
        cfg, out = stage_golden_inputs(tmp_path)
        for sub in ("rsi", "cci", "aggregate", "report"):
            assert main(["--config", str(cfg), sub]) == 0
        produced = (out / "report.txt").read_bytes()
        assert produced == (GOLDEN / "report.golden.txt").read_bytes()

    def test_report_idempotent(self, tmp_path):
        cfg, out = stage_golden_inputs(tmp_path)
        for sub in ("rsi", "cci", "aggregate", "report"):
            main(["--config", str(cfg), sub])
        first = (out / "report.txt").read_bytes()
        for sub in ("rsi", "cci", "aggregate", "report"):
            main(["--config", str(cfg), sub])
        assert (out / "report.txt").read_bytes() == first


class TestReportWithAnnotations:
    def test_human_baseline_and_borda_table(self, tmp_path):
        from yocausal.lineio import append_line

        cfg, out = stage_golden_inputs(tmp_path)
        ann = out / "annotations"
        ann.mkdir()
        # two human judgments on riverside videos (one correct, one unknown)
        append_line(
            ann / "direction_judgments.jsonl",
            {"annotator_id": "h1", "video_id": "riverside-00", "shown_order": "A", "choice": "B",
             "replays_a": 1, "replays_b": 1, "prompt_shown": "p", "timestamp": 0.0},
        )
        append_line(
            ann / "direction_judgments.jsonl",
            {"annotator_id": "h1", "video_id": "riverside-01", "shown_order": "A", "choice": "unknown",
             "replays_a": 1, "replays_b": 1, "prompt_shown": "p", "timestamp": 0.0},
        )
        append_line(
            ann / "preference_rankings.jsonl",
            {"annotator_id": "h1", "prompt_id": "p1", "ranks": {"alpha": 1, "beta": 2}},
        )
        for sub in ("rsi", "cci", "aggregate", "report"):
            main(["--config", str(cfg), sub])
        text = (out / "report.txt").read_text()
        assert "human" in text
        assert "0.7500" in text  # (1 + 0.5) / 2 on the riverside subset
        assert "Borda" in text and "1.0000" in text  # alpha's mean Borda of N-1 = 1


class TestDependencyChecks:
    def test_rsi_without_probe_names_probe(self, tmp_path, capsys):
        cfg, out = make_config(tmp_path)
        shutil.copy(GOLDEN / "catalog.jsonl", tmp_path / "catalog.jsonl")
        with pytest.raises(SystemExit):
            main(["--config", str(cfg), "rsi"])
        assert "probe" in capsys.readouterr().err

    def test_cci_without_partition_names_partition(self, tmp_path, capsys):
        cfg, out = stage_golden_inputs(tmp_path)
        shutil.rmtree(out / "labels")
        with pytest.raises(SystemExit):
            main(["--config", str(cfg), "cci"])
        assert "partition" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(SystemExit):
            main(["--config", str(bad), "ingest"])
        assert "JSON" in capsys.readouterr().err

    def test_missing_config_key(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"catalog": "x"}))
        with pytest.raises(SystemExit):
            main(["--config", str(path), "ingest"])
        assert "output_dir" in capsys.readouterr().err


class TestToyE2E:
    def test_tiny_run_deterministic(self, tmp_path):
        kwargs = dict(seed=7, train_n=8, eval_n=4, epochs=1, bootstrap_resamples=200, log=lambda *_: None)
        run_toy_e2e(tmp_path / "run1", **kwargs)
        run_toy_e2e(tmp_path / "run2", **kwargs)
        assert (tmp_path / "run1" / "report.txt").read_bytes() == (tmp_path / "run2" / "report.txt").read_bytes()
        assert (tmp_path / "run1" / "summary.json").read_bytes() == (tmp_path / "run2" / "summary.json").read_bytes()

    def test_tiny_run_summary_shape(self, tmp_path):
        summary = run_toy_e2e(
            tmp_path / "run", seed=3, train_n=8, eval_n=4, epochs=0, bootstrap_resamples=200, log=lambda *_: None
        )
        assert summary["rsi_palindrome"]["overall"] == 0.0  # exact ties under strict inequality
        assert set(summary["rsi_irreversible"]["per_subset"]) == {"shatter", "smoke"}
        assert summary["cci"]["cci"] == pytest.approx(
            summary["cci"]["rsi_c"]["overall"] - summary["cci"]["rsi_nc"]["overall"]
        )
        out = tmp_path / "run"
        assert (out / "losses").exists() and (out / "report.txt").exists()


class TestStagePipeline:
    def test_ingest_probe_rsi_with_toy_checkpoint(self, tmp_path):
        from yocausal import catalog as cat
        from yocausal.lineio import write_lines
        from yocausal.probe import build_toy_catalog, toy_train
        from yocausal.probe.synthetic import CAPTIONS, toy_generate

        # toy checkpoint
        data = [(c, CAPTIONS["smoke"]) for c in toy_generate("smoke", 6, seed=70)]
        adapter = toy_train(data, epochs=0, seed=71)
        ckpt = tmp_path / "toy.pt"
        adapter.save(ckpt)

        catalog = build_toy_catalog(tmp_path / "videos", {"smoke": ("smoke", 3), "drift": ("drift", 3)}, seed=72)
        cat.save_manifest(tmp_path / "catalog.jsonl", catalog)
        spec = adapter.spec
        registry = tmp_path / "models.jsonl"
        write_lines(
            registry,
            [
                {
                    "model_id": spec.model_id,
                    "family": spec.family,
                    "params_billions": spec.params_billions,
                    "release_date": spec.release_date,
                    "operating_space": spec.operating_space,
                    "resolution_mode": {"fixed": list(spec.resolution_mode.sizes[0])},
                    "frame_window": spec.frame_window,
                    "target_fps": spec.target_fps,
                    "diffusion_steps_T": spec.diffusion_steps_T,
                    "adapter": {"type": "toy", "checkpoint": str(ckpt)},
                }
            ],
        )
        cfg, out = make_config(tmp_path, model_registry=str(registry), probe={"K": 3, "base_seed": 1})
        assert main(["--config", str(cfg), "ingest"]) == 0
        assert main(["--config", str(cfg), "preprocess"]) == 0
        assert (out / "preprocessed" / spec.model_id / "smoke-0000.npz").exists()
        assert main(["--config", str(cfg), "probe"]) == 0
        losses = out / "losses" / f"{spec.model_id}.jsonl"
        assert losses.exists()
        n_lines = len(losses.read_text().strip().splitlines())
        assert n_lines == 12  # 6 videos x 2 directions
        # probe again: no new work
        assert main(["--config", str(cfg), "probe"]) == 0
        assert len(losses.read_text().strip().splitlines()) == n_lines
        assert main(["--config", str(cfg), "rsi", "--bootstrap-resamples", "200"]) == 0
        rep = json.loads((out / "reports" / f"rsi_{spec.model_id}.json").read_text())
        assert set(rep["per_subset"]) == {"smoke", "drift"}
        assert main(["--config", str(cfg), "entropy", "--bootstrap-resamples", "200"]) == 0
        assert (out / "symmetric_subset.txt").exists()
