import json
import math
import os

import pytest

from outimes.cli import main

pytestmark = pytest.mark.filterwarnings("ignore:.*httpx.*:UserWarning")


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_simulate_reproduces_figure_setting(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    base = [
        "simulate", "--lambda", "0.5", "--sigma", "0.25",
        "--t-end", "25", "--dt", "0.01", "--seed", "42",
    ]
    code_a, _, _ = run_cli(capsys, base + ["--out", str(out_a)])
    code_b, _, _ = run_cli(capsys, base + ["--out", str(out_b)])
    assert code_a == 0 and code_b == 0
    content = out_a.read_bytes()
    assert content == out_b.read_bytes()
    lines = content.decode().splitlines()
    assert lines[0] == "t,x"
    assert len(lines) == 2502
    assert lines[1].startswith("0,0")


def test_simulate_rejects_zero_dt(capsys):
    code, _, err = run_cli(
        capsys,
        ["simulate", "--lambda", "0.5", "--sigma", "0.25", "--t-end", "25", "--dt", "0"],
    )
    assert code == 2


def test_expect_full_line_prints_horizon(capsys):
    code, out, _ = run_cli(
        capsys,
        ["expect", "--method", "direct", "--lambda", "0.5", "--sigma", "1",
         "--t-end", "7", "--a", "-inf", "--b", "inf"],
    )
    assert code == 0
    assert out.strip() == "7"


def test_expect_split_vs_direct(capsys):
    args = ["expect", "--lambda", "0.5", "--sigma", "1", "--t-end", "16",
            "--a", "-0.1", "--b", "0.1"]
    code, out_direct, _ = run_cli(capsys, args + ["--method", "direct"])
    code2, out_split, _ = run_cli(capsys, args + ["--method", "split"])
    assert code == 0 and code2 == 0
    direct, split = float(out_direct), float(out_split)
    assert abs(split - direct) <= 1e-6 * abs(direct)


def test_expect_guard_exit_code(capsys):
    code, _, err = run_cli(
        capsys,
        ["expect", "--method", "direct", "--lambda", "2", "--sigma", "1",
         "--t-end", "10", "--a", "-1", "--b", "1"],
    )
    assert code == 3
    assert "precision guard" in err


def test_expect_requires_exactly_one_lambda_form(capsys):
    code, _, err = run_cli(
        capsys,
        ["expect", "--sigma", "1", "--t-end", "7", "--a", "0", "--b", "1"],
    )
    assert code == 2


def test_expect_sweep_csv(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    code, _, _ = run_cli(
        capsys,
        ["expect", "--lambda-range", "0.02:0.98:0.02", "--sigma", "1", "--t-end", "16",
         "--a", "-0.1", "--b", "0.1", "--method", "split", "--out", str(out)],
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "lambda,expectation"
    assert len(lines) == 50
    values = [tuple(map(float, line.split(","))) for line in lines[1:]]
    assert values[0][0] == pytest.approx(0.02)
    assert values[-1][0] == pytest.approx(0.98)
    # stiffer reversion concentrates the process near 0, so occupancy of the
    # small central window grows with lambda
    expectations = [v for _, v in values]
    assert all(x < y for x, y in zip(expectations, expectations[1:]))


def test_generate_estimate_roundtrip(tmp_path, capsys):
    observations = tmp_path / "obs.csv"
    code, _, _ = run_cli(
        capsys,
        ["generate", "--lambda", "0.15", "--sigma", "0.9", "--method", "direct",
         "--out", str(observations)],
    )
    assert code == 0
    lines = observations.read_text().splitlines()
    assert lines[0] == "t_end,a,b,g"
    assert len(lines) == 9
    code, out, _ = run_cli(
        capsys, ["estimate", "--observations", str(observations), "--json"]
    )
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"lambda_star", "sigma_star", "residual", "iterations", "converged"}
    assert abs(report["lambda_star"] - 0.15) <= 1e-3
    assert abs(report["sigma_star"] - 0.90) <= 1e-3
    assert report["converged"] is True


def test_estimate_plain_report_and_trace(tmp_path, capsys):
    observations = tmp_path / "obs.csv"
    trace = tmp_path / "trace.csv"
    run_cli(
        capsys,
        ["generate", "--lambda", "0.5", "--sigma", "0.75", "--method", "direct",
         "--t-end", "10", "--out", str(observations)],
    )
    code, out, _ = run_cli(
        capsys,
        ["estimate", "--observations", str(observations), "--trace", str(trace)],
    )
    assert code == 0
    assert out.splitlines()[0].startswith("lambda_star = 0.5")
    assert "converged   = true" in out
    trace_lines = trace.read_text().splitlines()
    assert trace_lines[0] == "lambda,sigma,residual"
    assert len(trace_lines) > 2


def test_estimate_empty_file(tmp_path, capsys):
    observations = tmp_path / "empty.csv"
    observations.write_text("")
    code, _, err = run_cli(capsys, ["estimate", "--observations", str(observations)])
    assert code == 2
    assert "empty" in err


def test_estimate_malformed_line_number(tmp_path, capsys):
    observations = tmp_path / "bad.csv"
    observations.write_text("t_end,a,b,g\n10,-0.5,0.5,1.0\n10,zzz,0.5,1.0\n")
    code, _, err = run_cli(capsys, ["estimate", "--observations", str(observations)])
    assert code == 2
    assert "line 3" in err


def test_estimate_single_observation_warns_but_runs(tmp_path, capsys):
    observations = tmp_path / "one.csv"
    observations.write_text("t_end,a,b,g\n10,-0.5,0.5,3.2\n")
    code, out, err = run_cli(capsys, ["estimate", "--observations", str(observations)])
    assert code == 0
    assert "underdetermined" in err
    assert "lambda_star" in out


def test_generate_monte_carlo_windows(tmp_path, capsys):
    out = tmp_path / "mc.csv"
    code, _, _ = run_cli(
        capsys,
        ["generate", "--lambda", "0.5", "--sigma", "1", "--t-end", "2",
         "--window", "-1:-0.5", "--window", "-inf:0", "--method", "monte-carlo",
         "--n-samples", "200", "--dt", "0.01", "--seed", "3", "--out", str(out)],
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 3
    assert lines[2].split(",")[1] == "-inf"


def test_reproduce_table_seed_moves_only_mc_columns(capsys):
    base = ["reproduce-table", "--n-samples", "400", "--dt", "0.02", "--json"]
    code_a, out_a, _ = run_cli(capsys, base + ["--seed", "1"])
    code_b, out_b, _ = run_cli(capsys, base + ["--seed", "2"])
    assert code_a == 0 and code_b == 0
    rows_a = json.loads(out_a)["rows"]
    rows_b = json.loads(out_b)["rows"]
    assert len(rows_a) == 5
    for row_a, row_b in zip(rows_a, rows_b):
        assert row_a["lambda_direct"] == row_b["lambda_direct"]
        assert row_a["sigma_direct"] == row_b["sigma_direct"]
        assert abs(row_a["lambda_direct"] - row_a["lambda_true"]) <= 1e-3
        assert abs(row_a["sigma_direct"] - row_a["sigma_true"]) <= 1e-3
        assert (row_a["lambda_mc"], row_a["sigma_mc"]) != (row_b["lambda_mc"], row_b["sigma_mc"])


def test_reproduce_table_plain_layout(capsys):
    code, out, _ = run_cli(
        capsys, ["reproduce-table", "--n-samples", "300", "--dt", "0.02", "--seed", "4"]
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split() == [
        "lambda_true", "sigma_true", "lambda_direct", "sigma_direct", "lambda_mc", "sigma_mc",
    ]
    assert len(lines) == 6
    assert lines[1].startswith("0.25")


def test_unknown_command_usage_error(capsys):
    assert main(["frobnicate"]) == 2
