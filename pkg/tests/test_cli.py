import json

import pytest
from click.testing import CliRunner

from cli import EXIT_DOMAIN, EXIT_NUMERICAL, EXIT_OK, RunConfig, Subcommand, cli, dispatch, main
from bound_curves import BoundKind, evaluate
from services.export import parse_curve_csv


@pytest.fixture
def runner():
    return CliRunner()


def _data(result):
    assert result.exit_code == EXIT_OK, result.output
    payload = json.loads(result.stdout)
    assert payload["ok"] is True
    return payload["data"]


def test_constants(runner):
    data = _data(runner.invoke(cli, ["constants"]))
    assert data["kappa"] == pytest.approx(0.4098623, abs=1e-7)
    assert data["vartheta"] == pytest.approx(1.1286942, abs=1e-7)
    assert "theta_two_equal" in data["breakpoints"]


def test_curve_csv(runner, constants):
    result = runner.invoke(cli, ["curve", "--from", "0.4", "--to", "0.46", "--points", "7"])
    assert result.exit_code == EXIT_OK
    rows = parse_curve_csv(result.stdout)
    assert len(rows) == 7
    for row in rows:
        expected = evaluate(BoundKind.NEW, row["x"], constants.kappa)
        if expected is None:
            assert row["N"] is None
        else:
            assert row["N"] == pytest.approx(expected, abs=1e-12)
    assert rows[0]["f_KMM"] is None


def test_curve_json_with_replacement_kappa(runner):
    data = _data(runner.invoke(cli, ["curve", "--format", "json", "--points", "3", "--kappa", "0.41"]))
    assert data["kappa"] == 0.41
    assert len(data["samples"]) == 3


def test_optimize(runner):
    data = _data(runner.invoke(cli, ["optimize", "--theta", "1.2"]))
    assert data["branch"] == "THREE_EQUAL"
    assert len(data["argmax"]) == 3
    assert data["angle_spent"] == pytest.approx(1.2, abs=1e-12)


def test_optimize_with_truncation_check(runner):
    data = _data(runner.invoke(cli, ["optimize", "--theta", "0.6", "--check-truncation", "--steps", "400"]))
    assert data["truncation"]["passed"] is True
    assert len(data["truncation"]["prefixes"]) == 2


def test_brute(runner):
    data = _data(runner.invoke(cli, ["brute", "--theta", "0.6", "--n", "1", "--steps", "2000"]))
    assert data["difference"] == pytest.approx(0.0, abs=1e-6)


def test_verify_appendix_single_lemma(runner):
    data = _data(runner.invoke(cli, ["verify-appendix", "--lemma", "a4", "--grid", "1000"]))
    assert [r["lemma"] for r in data["reports"]] == ["a4"]
    assert data["reports"][0]["passed"] is True


def test_verify_remark_am(runner):
    data = _data(runner.invoke(cli, ["verify-remark-am", "--x", "0.45"]))
    assert data["improvement"] > 0.0
    assert data["max_w"] == pytest.approx(0.45, abs=1e-12)


def test_experiment_is_reproducible(runner, tmp_path):
    csv_path = tmp_path / "trials.csv"
    args = ["experiment", "--trials", "5", "--dim", "4", "--dim", "6", "--seed", "3", "--csv", str(csv_path)]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.stdout == second.stdout
    data = _data(first)
    assert data["seed"] == 3
    assert data["dims"] == [4, 6]
    assert data["violations"] == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "seed,dim,ratio,measured,bound,slack"
    assert len(lines) == 6


def test_path_uniform(runner):
    data = _data(runner.invoke(cli, ["path", "--ratio", "0.4", "--pieces", "4"]))
    assert data["passed"] is True
    assert len(data["steps"]) == 4


def test_path_optimal(runner):
    data = _data(runner.invoke(cli, ["path", "--ratio", "0.45", "--optimal"]))
    assert data["passed"] is True
    assert data["partition"][-1] == 0.45


def test_sharpness(runner):
    data = _data(runner.invoke(cli, ["sharpness", "--ratio", "0.2", "--seeds", "5"]))
    assert data["tightness"] <= 1.0 + 1e-9
    assert data["seeds"] == 5


def test_output_file(runner, tmp_path):
    target = tmp_path / "constants.json"
    result = runner.invoke(cli, ["constants", "--output", str(target)])
    assert result.exit_code == EXIT_OK
    assert json.loads(target.read_text())["ok"] is True


def test_main_domain_error(capsys):
    assert main(["optimize", "--theta", "3"]) == EXIT_DOMAIN
    err = json.loads(capsys.readouterr().err)
    assert err["ok"] is False
    assert err["error"]["code"] == "domain_error"


def test_main_conflicting_partition_flags(capsys):
    assert main(["path", "--ratio", "0.4", "--pieces", "4", "--optimal"]) == EXIT_DOMAIN
    assert "only one of" in json.loads(capsys.readouterr().err)["error"]["message"]


def test_main_usage_error(capsys):
    assert main(["no-such-command"]) == EXIT_DOMAIN
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "usage_error"


def test_main_config_error(monkeypatch, capsys):
    monkeypatch.setenv("SUBSPACE_WORKERS", "0")
    assert main(["constants"]) == EXIT_DOMAIN
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "config_error"


def test_main_success(capsys):
    assert main(["brute", "--theta", "0.6", "--n", "1", "--steps", "200"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["ok"] is True


def test_dispatch_numerical_failure(monkeypatch, capsys):
    import cli as cli_module
    from core_math import RootFindingError

    def failing(tol):
        raise RootFindingError("no convergence")

    monkeypatch.setattr(cli_module, "compute_constants", failing)
    assert dispatch(RunConfig(Subcommand.CONSTANTS)) == EXIT_NUMERICAL
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "root_not_converged"


def test_dispatch_unexpected_exception(monkeypatch, capsys):
    import cli as cli_module

    def broken(tol):
        raise KeyError("boom")

    monkeypatch.setattr(cli_module, "compute_constants", broken)
    assert dispatch(RunConfig(Subcommand.CONSTANTS)) == EXIT_NUMERICAL
    assert json.loads(capsys.readouterr().err)["error"]["code"] == "internal_error"
