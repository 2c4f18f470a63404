import csv
import json

import pytest
from click.testing import CliRunner

from morbidity_model import __version__
from morbidity_model.cli import cli

TINY_INI = """
[model]
num_diseases = 2
covariates = intercept, sex, age
num_cohorts = 2
kernels = partition, contiguity, distance:0

[sampler]
chains = 2
warmup = 100
sampling = 60
max_depth = 5
seed = 3

[simulation]
num_locations = 4
num_regions = 2
num_cohorts = 2
respondents_per_cell = 5
num_distance_kernels = 1
seed = 2
"""

BIAS_INI = """
[model]
num_diseases = 1
covariates = intercept, sex, age
num_cohorts = 4
variant = fe

[simulation]
num_locations = 4
num_regions = 1
num_cohorts = 4
respondents_per_cell = 60
seed = 3
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_INI, encoding="utf-8")
    return str(path)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_simulate_is_reproducible(runner, tiny_config, tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        result = runner.invoke(cli, ["-c", tiny_config, "simulate", str(out)])
        assert result.exit_code == 0, result.output
    assert len(_rows(first / "respondents.csv")) == 4 * 2 * 5
    assert (first / "respondents.csv").read_bytes() == (second / "respondents.csv").read_bytes()
    manifest = json.loads((first / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "simulate"
    assert "respondents.csv" in manifest["output_digests"]


def test_unknown_config_key(runner, tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(TINY_INI.replace("chains = 2", "chainz = 2"), encoding="utf-8")
    result = runner.invoke(cli, ["-c", str(path), "simulate", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "chainz" in result.output


def test_unknown_config_section(runner, tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(TINY_INI + "\n[plots]\nwidth = 3\n", encoding="utf-8")
    result = runner.invoke(cli, ["-c", str(path), "simulate", str(tmp_path / "out")])
    assert result.exit_code == 2
    assert "plots" in result.output


def test_worker_override_must_be_numeric(runner, tmp_path):
    result = runner.invoke(cli, ["simulate", str(tmp_path / "out")], env={"MORBIDITY_WORKERS": "many"})
    assert result.exit_code == 2
    assert "MORBIDITY_WORKERS" in result.output


def test_loo_without_a_fit(runner, tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = runner.invoke(cli, ["loo", str(empty)])
    assert result.exit_code == 4


def test_check_gradients(runner, tmp_path):
    out = tmp_path / "grad"
    result = runner.invoke(cli, ["check-gradients", "--model", "fe", "--points", "2", "--floor", "1e-2",
                                 "-o", str(out)])
    assert result.exit_code == 0, result.output
    assert "All gradients within" in result.output
    rows = _rows(out / "gradient_check.csv")
    assert [row["variant"] for row in rows] == ["fe"]


def test_check_gradients_default_floor(runner, tmp_path):
    out = tmp_path / "grad"
    result = runner.invoke(cli, ["check-gradients", "--model", "fe", "--points", "1", "--tolerance", "1", "-o", str(out)])
    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["extra"]["floor"] == 1e-8


def test_check_gradients_reports_failure(runner):
    result = runner.invoke(cli, ["check-gradients", "--model", "il", "--points", "1", "--tolerance", "0"])
    assert result.exit_code == 3


def test_bias_demo(runner, tmp_path):
    config = tmp_path / "bias.ini"
    config.write_text(BIAS_INI, encoding="utf-8")
    out = tmp_path / "bias"
    result = runner.invoke(cli, ["-c", str(config), "bias-demo", "--drift", "-0.4", "-o", str(out)])
    assert result.exit_code == 0, result.output
    report = json.loads((out / "bias.json").read_text(encoding="utf-8"))
    assert report["difference"] == pytest.approx(report["by_survey_year"]["slope"] - report["by_cohort"]["slope"])
    assert report["num_respondents"] == 4 * 4 * 60


@pytest.mark.slow
def test_fit_and_evaluate(runner, tiny_config, tmp_path):
    data = tmp_path / "data"
    assert runner.invoke(cli, ["-c", tiny_config, "simulate", str(data)]).exit_code == 0

    runs = {}
    for model in ("fe", "full-st"):
        runs[model] = tmp_path / model
        result = runner.invoke(cli, ["-c", tiny_config, "fit", str(data), str(runs[model]), "--model", model])
        assert result.exit_code == 0, result.output
        assert (runs[model] / "draws_chain1.csv").exists()
        assert len(_rows(runs[model] / "pointwise_chain0.csv")) == 60

    for kind in ("loo", "waic"):
        result = runner.invoke(cli, ["-c", tiny_config, kind, str(runs["fe"])])
        assert result.exit_code == 0, result.output
        report = json.loads((runs["fe"] / kind / "elpd_report.json").read_text(encoding="utf-8"))
        assert report["num_points"] == 40
        assert report["ic"] == pytest.approx(-2.0 * report["elpd"])

    out = tmp_path / "compare"
    result = runner.invoke(cli, ["-c", tiny_config, "compare", str(runs["fe"]), str(runs["full-st"]), "-o", str(out)])
    assert result.exit_code == 0, result.output
    table = _rows(out / "compare.csv")
    assert sorted(row["model"] for row in table) == ["fe", "full_st"]
    assert float(table[0]["delta_elpd_loo"]) == 0.0

    result = runner.invoke(cli, ["ppc", str(runs["full-st"]), "--max-draws", "50"])
    assert result.exit_code == 0, result.output
    assert len(_rows(runs["full-st"] / "ppc" / "ppc.csv")) == 4 * 2

    result = runner.invoke(cli, ["predict", str(runs["full-st"]), "--quantity", "or", "--predictor", "sex",
                                 "--profile", "cohort=1"])
    assert result.exit_code == 0, result.output
    rows = _rows(runs["full-st"] / "predict" / "predict_or.csv")
    assert len(rows) == 4
    assert all(row["cohort"] == "1" for row in rows)

    result = runner.invoke(cli, ["predict", str(runs["fe"]), "--profile", "income=3"])
    assert result.exit_code == 2


def test_simulate_fit_evaluate_smoke(runner, tmp_path):
    config = tmp_path / "smoke.ini"
    config.write_text(TINY_INI.replace("warmup = 100", "warmup = 30").replace("sampling = 60", "sampling = 20")
                      .replace("max_depth = 5", "max_depth = 3"), encoding="utf-8")
    data, run_dir = tmp_path / "data", tmp_path / "run"

    result = runner.invoke(cli, ["-c", str(config), "simulate", str(data)])
    assert result.exit_code == 0, result.output
    result = runner.invoke(cli, ["-c", str(config), "fit", str(data), str(run_dir), "--model", "full-st"])
    assert result.exit_code == 0, result.output
    assert len(_rows(run_dir / "pointwise_chain1.csv")) == 20

    for kind in ("loo", "waic"):
        result = runner.invoke(cli, ["-c", str(config), kind, str(run_dir)])
        assert result.exit_code == 0, result.output
        report = json.loads((run_dir / kind / "elpd_report.json").read_text(encoding="utf-8"))
        assert report["num_points"] == 40
        assert report["num_draws"] == 40


def test_fit_on_data_that_is_not_utf8(runner, tiny_config, tmp_path):
    data = tmp_path / "data"
    assert runner.invoke(cli, ["-c", tiny_config, "simulate", str(data)]).exit_code == 0
    with open(data / "respondents.csv", "ab") as f:
        f.write(b"\xff\n")
    result = runner.invoke(cli, ["-c", tiny_config, "fit", str(data), str(tmp_path / "run")])
    assert result.exit_code == 4
