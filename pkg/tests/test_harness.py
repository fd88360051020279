import json
import logging

import pandas as pd
import pytest

import report_engine
import run_lab
import sweep_engine
from gradlab.utils import InvalidConfig, InvalidMethod

SMALL = """\
INPUT_DIM=4
FEATURE_DIM=8
TASKS=2
SAMPLES=32
OVERLAP=0.5
NOISE=0.1
ITERS=100
CADENCE=10
SEEDS=0,1,2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "lab.env"
    path.write_text(SMALL)
    return path


def lab(*argv) -> int:
    return run_lab.main([str(a) for a in argv])


def test_run_writes_trajectories_and_summary(tmp_path, config_file, capsys):
    out = tmp_path / "runs"
    assert lab("run", "--config", config_file, "--method", "baseline", "--out", out) == 0

    run_dir = out / "baseline_param"
    finals = []
    for seed in (0, 1, 2):
        lines = (run_dir / f"seed_{seed}.jsonl").read_text().splitlines()
        assert len(lines) == 11
        record = json.loads(lines[0])
        assert set(record) == {"iter", "losses", "gds", "gms", "fd", "fd_degenerate", "weights"}
        assert record["iter"] == 0 and len(record["losses"]) == 2
        final = json.loads(lines[-1])
        assert final["final"] is True and final["iter"] == 100
        finals.append(final["losses"])

    summary = pd.read_csv(run_dir / "summary.csv")
    assert len(summary) == 1
    assert list(summary.columns[-3:]) == ["loss_1", "loss_2", "total"]
    assert summary["total"][0] == pytest.approx(summary["loss_1"][0] + summary["loss_2"][0])
    assert summary["loss_1"][0] == pytest.approx(sum(f[0] for f in finals) / 3)
    assert not (run_dir / "FAILED").exists()
    assert "baseline" in capsys.readouterr().out


def test_rerun_is_byte_identical(tmp_path, config_file):
    for name in ("a", "b"):
        assert lab("run", "--config", config_file, "--method", "pcgrad", "--level", "feature", "--out", tmp_path / name) == 0
    for file in ("seed_0.jsonl", "seed_1.jsonl", "seed_2.jsonl", "summary.csv"):
        first = (tmp_path / "a" / "pcgrad_feature" / file).read_bytes()
        assert first == (tmp_path / "b" / "pcgrad_feature" / file).read_bytes()


def test_config_records_every_default(tmp_path, config_file):
    assert lab("run", "--config", config_file, "--iters", 30, "--out", tmp_path) == 0
    settings = dict(
        line.split("=", 1) for line in (tmp_path / "baseline_param" / "config.txt").read_text().splitlines()
    )
    assert settings["ITERS"] == "30"
    assert settings["SAMPLES"] == "32"
    assert settings["CAGRAD_C"] == "0.4"
    assert settings["UNCERTAINTY_LR_S"] == ""


def test_unknown_method_exits_2(tmp_path, caplog):
    with caplog.at_level(logging.ERROR):
        assert lab("run", "--method", "foo", "--out", tmp_path) == 2
    assert "Registered" in caplog.text


def test_invalid_config_exits_2(tmp_path):
    bad = tmp_path / "bad.env"
    bad.write_text("ITERATIONS=10\n")
    assert lab("run", "--config", bad, "--out", tmp_path) == 2
    bad.write_text("OVERLAP=2\n")
    assert lab("run", "--config", bad, "--out", tmp_path) == 2
    assert lab("run", "--config", tmp_path / "missing.env") == 2


def test_divergent_run_exits_3_and_marks_failure(tmp_path, config_file, caplog):
    with caplog.at_level(logging.CRITICAL):
        assert lab("run", "--config", config_file, "--iters", 300, "--out", tmp_path, "--seeds", "4") == 0
    diverging = tmp_path / "diverging.env"
    diverging.write_text(SMALL + "LR=1000000\n")
    with caplog.at_level(logging.CRITICAL):
        assert lab("run", "--config", diverging, "--iters", 300, "--out", tmp_path, "--seeds", "4") == 3
    assert "seed 4" in caplog.text
    assert (tmp_path / "baseline_param" / "FAILED").exists()
    assert not (tmp_path / "baseline_param" / "summary.csv").exists()


def test_sweep_and_report(tmp_path, config_file, capsys):
    out = tmp_path / "sweep"
    assert lab("sweep", "--config", config_file, "--methods", "baseline,pcgrad,gradnorm", "--iters", 60, "--out", out) == 0

    manifest = sweep_engine.read_manifest(out)
    assert manifest["cell"].tolist() == ["baseline_param", "pcgrad_param", "pcgrad_feature", "gradnorm_param"]
    assert set(manifest["status"]) == {"ok"}

    assert lab("report", "--config", config_file, "--out", out) == 0
    matrix = pd.read_csv(out / "report.csv", index_col="indicator")
    assert matrix.index.tolist() == ["GDS", "GMS", "FD"]
    assert matrix.columns.tolist() == ["loss_1", "loss_2", "total"]
    assert ((matrix >= 0.5) & (matrix <= 1.0)).all().all()

    text = (out / "report.txt").read_text()
    assert "(rep) pcgrad" in text
    assert "Surrogate gap" in text
    assert text in capsys.readouterr().out


def test_report_needs_only_the_trajectories(tmp_path, config_file):
    out = tmp_path / "sweep"
    assert lab("sweep", "--config", config_file, "--methods", "baseline,pcgrad,dwa", "--iters", 40, "--out", out) == 0
    assert lab("report", "--out", out) == 0
    expected = {name: (out / name).read_bytes() for name in ("report.csv", "report.txt")}

    for summary in out.glob("*/summary.csv"):
        summary.unlink()
    assert not list(out.glob("*/summary.csv"))
    assert lab("report", "--out", out) == 0
    for name, content in expected.items():
        assert (out / name).read_bytes() == content


def test_pretrained_start_from_config(tmp_path, config_file):
    assert lab("run", "--config", config_file, "--iters", 20, "--seeds", "0", "--out", tmp_path) == 0
    pretrained = tmp_path / "pretrained.env"
    pretrained.write_text(SMALL + "INIT=pretrained\n")
    assert lab("run", "--config", pretrained, "--iters", 20, "--seeds", "0", "--out", tmp_path / "pre") == 0
    settings = dict(line.split("=", 1) for line in (tmp_path / "pre" / "baseline_param" / "config.txt").read_text().splitlines())
    assert settings["INIT"] == "pretrained"
    random_start = json.loads((tmp_path / "baseline_param" / "seed_0.jsonl").read_text().splitlines()[0])
    warm_start = json.loads((tmp_path / "pre" / "baseline_param" / "seed_0.jsonl").read_text().splitlines()[0])
    assert random_start["losses"] != warm_start["losses"]
    pretrained.write_text(SMALL + "INIT=warm\n")
    assert lab("run", "--config", pretrained, "--out", tmp_path / "bad") == 2


def test_sweep_of_one_method_equals_run(tmp_path, config_file):
    assert lab("run", "--config", config_file, "--method", "rgw", "--out", tmp_path / "run") == 0
    assert lab("sweep", "--config", config_file, "--methods", "rgw", "--levels", "param", "--out", tmp_path / "sweep") == 0
    for file in ("seed_0.jsonl", "seed_2.jsonl", "summary.csv"):
        assert (tmp_path / "run" / "rgw_param" / file).read_bytes() == (tmp_path / "sweep" / "rgw_param" / file).read_bytes()


def test_parallel_sweep_matches_serial(tmp_path, config_file):
    args = ("--config", config_file, "--methods", "pcgrad,dwa", "--iters", 30)
    assert lab("sweep", *args, "--out", tmp_path / "serial", "--jobs", 1) == 0
    assert lab("sweep", *args, "--out", tmp_path / "parallel", "--jobs", 2) == 0
    for cell in ("pcgrad_param", "pcgrad_feature", "dwa_param"):
        assert (tmp_path / "serial" / cell / "seed_1.jsonl").read_bytes() == (
            tmp_path / "parallel" / cell / "seed_1.jsonl"
        ).read_bytes()


def test_failed_cells_do_not_stop_the_sweep(tmp_path, config_file):
    diverging = tmp_path / "diverging.env"
    diverging.write_text(SMALL + "LR=1000000\nITERS=300\n")
    out = tmp_path / "sweep"
    assert lab("sweep", "--config", diverging, "--methods", "baseline,mgda", "--levels", "param", "--out", out) == 0
    manifest = sweep_engine.read_manifest(out)
    assert set(manifest["status"]) == {"failed"}
    assert manifest["detail"].str.contains("Non-finite").all()
    assert lab("report", "--out", out) == 2


def test_empty_grid_exits_2(tmp_path, config_file):
    assert lab("sweep", "--config", config_file, "--methods", "pcgrad", "--levels", "", "--out", tmp_path) == 2


def test_default_roster_has_24_cells():
    config = sweep_engine.RunConfig.from_settings(sweep_engine.resolve_settings())
    from gradlab.core import applicable_cells

    assert len(applicable_cells(config.methods, config.levels)) == 24


def test_run_config_validation():
    settings = sweep_engine.resolve_settings()
    with pytest.raises(InvalidMethod):
        sweep_engine.RunConfig.from_settings({**settings, "METHOD": "foo"})
    with pytest.raises(InvalidConfig):
        sweep_engine.RunConfig.from_settings({**settings, "SEEDS": ""})
    with pytest.raises(InvalidConfig):
        sweep_engine.RunConfig.from_settings({**settings, "CADENCE": "0"})
    config = sweep_engine.RunConfig.from_settings({**settings, "CAGRAD_C": "0.5", "NASH_MAX_ITERS": "50"})
    assert config.hyperparams == {"cagrad": {"c": 0.5}, "nash": {"max_iters": 50}}


@pytest.mark.parametrize(
    "indicator, expected",
    [([3.0, 2.0], 1.0), ([2.0, 3.0], 1.0), ([1.0, 3.0, 2.0], 2 / 3)],
)
def test_similarity_matrix_examples(indicator, expected):
    labels = ["m1", "m2", "m3"][: len(indicator)]
    scores = pd.DataFrame({"GDS": indicator}, index=labels)
    performance = pd.DataFrame({"total": [1.0, 2.0, 3.0][: len(indicator)]}, index=labels)
    matrix = report_engine.similarity_matrix(scores, performance)
    assert matrix.loc["GDS", "total"] == pytest.approx(expected)


def test_selftest_passes(capsys):
    assert lab("selftest", "--instances", 30) == 0
    out = capsys.readouterr().out
    for check in (
        "mgda_min_norm", "nash_residual", "ranking_pair_enumeration", "cosreg_fd_stencil", "gradvac_zero_target_pcgrad",
    ):
        assert check in out
