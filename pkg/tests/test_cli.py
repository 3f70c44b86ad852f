"""Command-line interface end to end."""

import csv
import io
import json

import pytest

from reservesim.cli import main

from conftest import job, phase, scenario
from reservesim import save_scenario


@pytest.fixture
def tiny_file(tmp_path, tiny_scenario):
    path = tmp_path / "tiny.json"
    save_scenario(tiny_scenario, path)
    return path


class TestExitCodes:
    def test_missing_scenario_is_usage_error(self):
        assert main(["run"]) == 1

    def test_unknown_flag_is_usage_error(self):
        assert main(["run", "--frobnicate", "x.json"]) == 1

    def test_unreadable_file_is_usage_error(self, tmp_path):
        assert main(["run", str(tmp_path / "missing.json")]) == 1

    def test_bad_json_is_usage_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", str(bad)]) == 1

    def test_help_is_success(self):
        assert main(["--help"]) == 0


class TestGenRun:
    def test_gen_then_run(self, tmp_path, capsys):
        out = tmp_path / "s.json"
        assert main(["gen", str(out), "--seed", "9", "--jobs", "6"]) == 0
        assert json.loads(out.read_text())["version"] == 1
        assert main(["run", "--scheduler", "fcfs", str(out)]) == 0
        assert "makespan=" in capsys.readouterr().out

    def test_config_override_changes_digest(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        main(["gen", str(a), "--seed", "1"])
        main(["gen", str(b), "--seed", "1", "--theta", "0.5"])
        assert json.loads(a.read_text())["config"]["theta"] != json.loads(
            b.read_text()
        )["config"]["theta"]

    def test_run_writes_trace_and_summary(self, tiny_file, tmp_path):
        trace = tmp_path / "t.jsonl"
        summary = tmp_path / "s.csv"
        code = main(
            ["run", str(tiny_file), "--trace", str(trace), "--summary-csv", str(summary)]
        )
        assert code == 0
        assert trace.exists() and summary.exists()
        rows = list(csv.DictReader(io.StringIO(summary.read_text())))
        assert len(rows) == 1 and rows[0]["scheduler"] == "dynamic"


class TestSweepReport:
    def test_sweep_row_cardinality(self, tmp_path, capsys):
        for seed in range(3):
            main(["gen", str(tmp_path / f"s{seed}.json"), "--seed", str(seed), "--jobs", "4"])
        out = tmp_path / "sweep.csv"
        code = main(
            ["sweep", str(tmp_path / "s*.json"), "--schedulers", "fcfs,dynamic", "--output", str(out)]
        )
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        assert len(rows) == 6  # 3 scenarios x 2 schedulers

    def test_sweep_output_is_order_stable(self, tmp_path, capsys):
        main(["gen", str(tmp_path / "s.json"), "--seed", "2", "--jobs", "4"])
        capsys.readouterr()  # drop the gen confirmation line
        pattern = str(tmp_path / "s.json")
        main(["sweep", pattern, "--schedulers", "static,fcfs,dynamic"])
        first = capsys.readouterr().out
        main(["sweep", pattern, "--schedulers", "dynamic,fcfs,static"])
        assert capsys.readouterr().out == first

    def test_report_emits_comparison_and_plot_data(self, tiny_file, tmp_path, capsys):
        traces = []
        for name in ("fcfs", "dynamic"):
            path = tmp_path / f"{name}.jsonl"
            main(["run", str(tiny_file), "--scheduler", name, "--trace", str(path)])
            traces.append(str(path))
        csv_out = tmp_path / "cmp.csv"
        plots = tmp_path / "plots"
        code = main(["report", *traces, "--csv", str(csv_out), "--plot-data-dir", str(plots)])
        assert code == 0
        assert "avg_wait" in capsys.readouterr().out
        assert csv_out.exists()
        assert (plots / "per_job_fcfs.csv").exists()
        assert (plots / "per_job_dynamic.csv").exists()


class TestOracleCommands:
    def test_solve_with_enumeration(self, tiny_file, capsys):
        assert main(["oracle", "solve", str(tiny_file), "--enumerate"]) == 0
        out = capsys.readouterr().out
        assert "agree" in out

    def test_check_clean_trace(self, tiny_file, tmp_path, capsys):
        trace = tmp_path / "t.jsonl"
        main(["run", str(tiny_file), "--trace", str(trace)])
        assert main(["oracle", "check", str(tiny_file), str(trace)]) == 0
        assert "feasible" in capsys.readouterr().out

    def test_example_reconstruction_prints_target_numbers(self, tmp_path, capsys):
        out = tmp_path / "example.json"
        assert main(["oracle", "example", "--output", str(out)]) == 0
        text = capsys.readouterr().out
        assert "makespan=40" in text and "(0, 9, 28, 27)" in text
        assert out.exists()
