from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

from emoflow import pipeline
from emoflow.cli import main
from emoflow.pipeline import ConfigError, load_config, run_pipeline
from conftest import write_mini_corpus

STUB = str(Path(__file__).parent / "stub_scorer.py")


def _read_manifest(config_path: Path) -> dict:
    cfg = load_config(config_path)
    return json.loads(cfg.out_path("manifest.json").read_text())


# ---------------------------------------------------------------------------
# run_pipeline


def test_run_writes_manifest_with_ten_plus_artifacts(mini_config, capsys):
    assert main(["run", "--config", str(mini_config)]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert len(printed["artifacts"]) >= 10
    cfg = load_config(mini_config)
    for entry in printed["artifacts"]:
        assert cfg.out_path(entry["path"]).is_file()
    assert printed == _read_manifest(mini_config)


def test_run_twice_same_manifest(mini_config):
    assert main(["run", "--config", str(mini_config)]) == 0
    cfg = load_config(mini_config)
    first = cfg.out_path("manifest.json").read_bytes()
    assert main(["run", "--config", str(mini_config)]) == 0
    assert cfg.out_path("manifest.json").read_bytes() == first


def test_stage_chain_reproduces_run(tmp_path):
    run_cfg = write_mini_corpus(tmp_path / "mono")
    staged_cfg = write_mini_corpus(tmp_path / "staged")
    assert main(["run", "--config", str(run_cfg)]) == 0
    for stage in ("ingest", "score", "aggregate", "te", "plot"):
        assert main([stage, "--config", str(staged_cfg)]) == 0
    mono_out = load_config(run_cfg).out_path("")
    staged_out = load_config(staged_cfg).out_path("")
    mono_files = {p.name: p.read_bytes() for p in Path(mono_out).iterdir() if p.name != "manifest.json"}
    staged_files = {p.name: p.read_bytes() for p in Path(staged_out).iterdir()}
    assert mono_files == staged_files


def test_score_stage_is_deterministic(mini_config):
    assert main(["ingest", "--config", str(mini_config)]) == 0
    cfg = load_config(mini_config)
    assert main(["score", "--config", str(mini_config)]) == 0
    first = cfg.out_path("scored_social.jsonl").read_bytes()
    assert main(["score", "--config", str(mini_config)]) == 0
    assert cfg.out_path("scored_social.jsonl").read_bytes() == first


def test_crossover_report_statuses(mini_config):
    assert main(["run", "--config", str(mini_config)]) == 0
    cfg = load_config(mini_config)
    report = json.loads(cfg.out_path("crossover.json").read_text())
    assert report["channels"]["social"]["status"] == "crossed"
    assert report["channels"]["news"]["status"] == "none"
    assert report["earlier_channel"] is None


def test_windowed_te_report_and_plots(tmp_path):
    config = write_mini_corpus(
        tmp_path, windows=[["2024-08-01", "2024-08-08"], ["2024-08-09", "2024-08-16"]]
    )
    assert main(["run", "--config", str(config)]) == 0
    cfg = load_config(config)
    report = json.loads(cfg.out_path("te_report.json").read_text())
    assert len(report) == 24  # 8 full-span + 8 per window
    assert cfg.out_path("te_window_1.svg").is_file()
    assert cfg.out_path("te_window_2.svg").is_file()
    windows = {(r["window_start"], r["window_end"]) for r in report}
    assert ("2024-08-01", "2024-08-08") in windows


def test_too_short_te_window_skipped_with_labels_intact(tmp_path):
    # A single-day window cannot host lag-1 triples; the other window must
    # still be reported under its own dates.
    config = write_mini_corpus(
        tmp_path, windows=[["2024-08-02", "2024-08-02"], ["2024-08-03", "2024-08-10"]]
    )
    assert main(["run", "--config", str(config)]) == 0
    cfg = load_config(config)
    report = json.loads(cfg.out_path("te_report.json").read_text())
    windows = {(r["window_start"], r["window_end"]) for r in report}
    assert ("2024-08-02", "2024-08-02") not in windows
    assert ("2024-08-03", "2024-08-10") in windows
    assert len(report) == 16


def test_te_window_outside_series_exits_3(tmp_path, capsys):
    config = write_mini_corpus(tmp_path, windows=[["2024-09-01", "2024-09-10"]])
    assert main(["run", "--config", str(config)]) == 3
    assert "outside the series span" in _stderr_error(capsys)["message"]


def test_significance_fields_present_when_enabled(tmp_path):
    config = write_mini_corpus(tmp_path, significance={"enabled": True, "n_surrogates": 29, "seed": 5})
    assert main(["run", "--config", str(config)]) == 0
    cfg = load_config(config)
    report = json.loads(cfg.out_path("te_report.json").read_text())
    for row in report:
        assert 0.0 < row["p_x_to_y"] <= 1.0
        assert 0.0 < row["p_y_to_x"] <= 1.0


def test_external_scorer_pipeline_matches_lexicon_artifact_names(tmp_path):
    lex_cfg = write_mini_corpus(tmp_path / "lex")
    ext_cfg = write_mini_corpus(
        tmp_path / "ext", scorer={"external": [sys.executable, STUB], "timeout": 30.0}
    )
    assert main(["run", "--config", str(lex_cfg)]) == 0
    assert main(["run", "--config", str(ext_cfg)]) == 0
    lex_names = [e["path"] for e in _read_manifest(lex_cfg)["artifacts"]]
    ext_names = [e["path"] for e in _read_manifest(ext_cfg)["artifacts"]]
    assert lex_names == ext_names
    lex_hashes = {e["path"]: e["sha256"] for e in _read_manifest(lex_cfg)["artifacts"]}
    ext_hashes = {e["path"]: e["sha256"] for e in _read_manifest(ext_cfg)["artifacts"]}
    assert lex_hashes["scored_social.jsonl"] != ext_hashes["scored_social.jsonl"]


def test_te_input_smoothed_flag(tmp_path):
    config = write_mini_corpus(tmp_path, te_input="smoothed")
    assert main(["run", "--config", str(config)]) == 0
    cfg = load_config(config)
    report = json.loads(cfg.out_path("te_report.json").read_text())
    # Smoothed series starts at the first full window's last day.
    assert report[0]["window_start"] == "2024-08-07"


# ---------------------------------------------------------------------------
# CLI error contract


def _stderr_error(capsys) -> dict:
    err = capsys.readouterr().err.strip().splitlines()[-1]
    return json.loads(err)["error"]


def test_missing_input_file_exits_2_naming_path(tmp_path, capsys):
    config = write_mini_corpus(tmp_path)
    (tmp_path / "news.jsonl").unlink()
    assert main(["run", "--config", str(config)]) == 2
    error = _stderr_error(capsys)
    assert error["kind"] == "config"
    assert error["path"].endswith("news.jsonl")


def test_both_scorers_selected_exits_2(tmp_path, capsys):
    config = write_mini_corpus(
        tmp_path, scorer={"lexicon": "lexicon.json", "external": ["x"]}
    )
    assert main(["run", "--config", str(config)]) == 2
    assert "exactly one scorer" in _stderr_error(capsys)["message"]


def test_no_scorer_selected_exits_2(tmp_path, capsys):
    config = write_mini_corpus(tmp_path, scorer={})
    assert main(["run", "--config", str(config)]) == 2


def test_missing_config_file_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "nope.json")]) == 2
    assert _stderr_error(capsys)["kind"] == "config"


def test_invalid_config_json_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", "--config", str(path)]) == 2


def test_stage_without_prior_artifacts_exits_3(mini_config, capsys):
    assert main(["te", "--config", str(mini_config)]) == 3
    error = _stderr_error(capsys)
    assert error["kind"] == "runtime"
    assert "daily_social.csv" in error["message"]


def test_plot_without_te_report_exits_3(mini_config, capsys):
    assert main(["ingest", "--config", str(mini_config)]) == 0
    assert main(["score", "--config", str(mini_config)]) == 0
    assert main(["aggregate", "--config", str(mini_config)]) == 0
    assert main(["plot", "--config", str(mini_config)]) == 3
    assert "te_report.json" in _stderr_error(capsys)["message"]


def test_cli_overrides_reach_te_report(tmp_path):
    config = write_mini_corpus(tmp_path)
    assert main(["run", "--config", str(config), "--bins", "4", "--lag", "2"]) == 0
    cfg = load_config(config)
    report = json.loads(cfg.out_path("te_report.json").read_text())
    assert all(r["n_bins"] == 4 and r["lag"] == 2 for r in report)


def test_bad_te_window_dates_exit_2(tmp_path, capsys):
    config = write_mini_corpus(tmp_path, windows=[["2024-08-09", "2024-08-01"]])
    assert main(["run", "--config", str(config)]) == 2
    assert "reversed" in _stderr_error(capsys)["message"]


def test_synth_subcommand_writes_fixture(tmp_path, capsys):
    assert main(["synth", "--kind", "driver", "--out", str(tmp_path / "f"), "--seed", "9"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert Path(out["config"]).is_file()


# ---------------------------------------------------------------------------
# ingest details


def test_ingest_report_counts_diagnostics(tmp_path):
    config = write_mini_corpus(tmp_path)
    social = tmp_path / "social.jsonl"
    social.write_text(social.read_text() + "garbage line\n")
    assert main(["ingest", "--config", str(config)]) == 0
    cfg = load_config(config)
    report = json.loads(cfg.out_path("ingest_report.json").read_text())
    assert report["social"]["diagnostics"] == 1
    assert report["social"]["retained"] == report["social"]["parsed"] - 0
    assert report["news"]["diagnostics"] == 0


def test_ingest_rejects_mislabeled_channel_file(tmp_path, capsys):
    config = write_mini_corpus(tmp_path)
    news = tmp_path / "news.jsonl"
    social_text = (tmp_path / "social.jsonl").read_text()
    news.write_text(social_text)
    assert main(["ingest", "--config", str(config)]) == 3
    assert "expected 'news'" in _stderr_error(capsys)["message"]
