"""Tests for the command-line entry point."""

import json

import pytest

from g2flow.cli.main import EXIT_CONFIG, EXIT_OK, build_parser, main


def test_version(capsys):
    assert main(["version"]) == EXIT_OK
    assert "g2flow v" in capsys.readouterr().out


def test_no_command():
    assert main([]) == EXIT_CONFIG


def test_parser_lists_commands():
    parser = build_parser()
    args = parser.parse_args(["scan", "--jobs", "4", "--set", "scan.n_f=8", "--set", "scan.n_g=8"])
    assert args.command == "scan"
    assert args.jobs == 4
    assert args.set == ["scan.n_f=8", "scan.n_g=8"]


def test_malformed_config_writes_nothing(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("this is not an assignment\n")
    out = tmp_path / "out"
    assert main(["taubnut", "--config", str(config), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_bad_jobs(tmp_path):
    out = tmp_path / "out"
    assert main(["taubnut", "--jobs", "0", "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_taubnut_command(tmp_path):
    out = tmp_path / "out"
    code = main(
        ["taubnut", "--out", str(out), "--set", "taubnut.random_cases=3", "--set", "taubnut.n_eta=20"]
    )
    assert code == EXIT_OK
    assert (out / "taubnut_closed_form.csv").exists()
    assert (out / "taubnut_residuals.csv").exists()
    sidecar = json.loads((out / "taubnut_closed_form.json").read_text())
    assert sidecar["rows"] == 20
    assert sidecar["asd"]["family"] == "two_parameter"
    lines = (out / "taubnut_residuals.csv").read_text().splitlines()
    assert lines[0] == "m,C,D,residual,charge_drift"
    assert len(lines) == 4


@pytest.mark.slow
def test_metric_command(tmp_path):
    out = tmp_path / "out"
    assert main(["metric", "--out", str(out)]) == EXIT_OK
    header = (out / "metric.csv").read_text().splitlines()[0]
    assert header == "t,a,b,adot,bdot,A1,A3,B1,B3,H"
    sidecar = json.loads((out / "metric.json").read_text())
    assert sidecar["kind"] == "alc"
    assert sidecar["ell"] > 0.0
    assert sidecar["r0"] == 1.0
    assert sidecar["abar"] == 1.0 / 128.0
    assert sidecar["t_max"] == 400.0
    assert sidecar["rel_tol"] == 1e-10
    assert {"bbar", "fit_err", "config_hash"} <= set(sidecar)


@pytest.mark.slow
def test_instanton_command(tmp_path):
    out = tmp_path / "out"
    code = main(
        [
            "instanton", "--out", str(out), "--t-max", "100",
            "--set", "instanton.f1_ratio=1.0", "--set", "instanton.g1_ratio=0.4",
        ]
    )
    assert code == EXIT_OK
    header = (out / "instanton.csv").read_text().splitlines()[0]
    assert header == "t,fplus,gplus,Fplus,Gplus"
    sidecar = json.loads((out / "instanton.json").read_text())
    assert sidecar["verdict"] == "incomplete"
    assert sidecar["ell"] > 0.0
    assert sidecar["f1"] == pytest.approx(sidecar["ell"] ** -2)
    assert sidecar["g1"] == pytest.approx(0.4 * sidecar["ell"] ** -2)
    assert {"Ginf", "lambda_fit", "config_hash"} <= set(sidecar)
