import json
import subprocess
import sys

import pytest

from tacheck.cli import EXIT_BUDGET, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, main
from tacheck.models import read_data


def test_check_bvb_exit_zero(tmp_path):
    out = tmp_path / "report"
    assert main(["check", "--model", "bvb", "--suite", "bv", "--params", "4,1,1", "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "report.json").read_text())
    assert len(report["verdicts"]) == 7 and all(v["result"] == "holds" for v in report["verdicts"])
    assert "bv_term" in (out / "report.txt").read_text()


def test_check_unsafe_writes_counterexample(tmp_path):
    out = tmp_path / "cex"
    code = main(
        [
            "check", "--model", "simplified", "--suite", "consensus", "--params", "6,2,2",
            "--allow-unsafe-params", "--property", "inv1_0", "--out", str(out),
        ]
    )
    assert code == EXIT_VIOLATION
    cex = json.loads((out / "counterexample_inv1_0_6_2_2.json").read_text())
    assert cex["result"] == "safety-counterexample" and cex["trace"]


def test_check_unsafe_without_override_is_usage_error():
    assert main(["check", "--model", "simplified", "--params", "6,2,2"]) == EXIT_USAGE


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "--model", "nonesuch", "--params", "4,1,1"],
        ["check", "--model", "bvb", "--params", "4,1"],
        ["check", "--model", "bvb"],
        ["check", "--model", "bvb", "--suite", "nonesuch", "--params", "4,1,1"],
        ["check", "--model", "bvb", "--property", "nonesuch", "--params", "4,1,1"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_budget_exhaustion_exit(tmp_path):
    assert main(["check", "--model", "bvb", "--params", "4,1,1", "--budget", "5"]) == EXIT_BUDGET


def test_budget_from_environment(monkeypatch):
    monkeypatch.setenv("TACHECK_BUDGET", "5")
    assert main(["check", "--model", "bvb", "--params", "4,1,1"]) == EXIT_BUDGET


def test_model_and_suite_from_files(tmp_path):
    ta_file = tmp_path / "bvb.ta"
    ta_file.write_text(read_data("bvb.ta"))
    props = tmp_path / "just.props"
    props.write_text("j: [](locV0 == 0) -> [](locC0 == 0);\n")
    out = tmp_path / "r.json"
    assert main(["check", "--model", str(ta_file), "--suite", str(props), "--params", "4,1,1", "--json", str(out)]) == 0
    assert [v["name"] for v in json.loads(out.read_text())["verdicts"]] == ["j"]


def test_json_output_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        main(["check", "--model", "bvb", "--params", "4,1,0", "4,1,1", "--json", str(path)])
    assert a.read_bytes() == b.read_bytes()
    assert "millis" not in a.read_text()


def test_config_file_with_flag_precedence(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"model": "bvb", "params": ["4,1,1"], "budget": 5}))
    assert main(["--config", str(config), "check"]) == EXIT_BUDGET
    assert main(["--config", str(config), "check", "--budget", "100000"]) == EXIT_OK


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["--config", str(bad), "check"]) == EXIT_USAGE
    assert main(["--config", str(tmp_path / "missing.json"), "check"]) == EXIT_USAGE


def test_simulate_estimate_cycle(tmp_path):
    out = tmp_path / "trace.json"
    code = main(
        [
            "simulate", "--adversary", "estimate-cycle", "--scheduler", "estimate-cycle",
            "--max-rounds", "4", "--abstract", "--out", str(out),
        ]
    )
    assert code == EXIT_OK
    trace = json.loads(out.read_text())
    assert trace["decisions"] == {}
    assert trace["snapshots"]["1"]["2"]["est"] == 1


def test_simulate_scheduler_script_file(tmp_path):
    script = tmp_path / "s.json"
    script.write_text(json.dumps({"steps": [{"op": "start", "process": 1}]}))
    assert main(["simulate", "--scheduler", str(script), "--max-rounds", "1"]) == EXIT_BUDGET


def test_simulate_bad_inputs():
    assert main(["simulate", "--inputs", "0,1"]) == EXIT_USAGE
    assert main(["simulate", "--adversary", "nonesuch"]) == EXIT_USAGE


def test_explore_and_report(tmp_path, capsys):
    graph = tmp_path / "graph.json"
    assert main(["explore", "--model", "bvb", "--params", "4,1,1", "--restrict", "V1=0", "--out", str(graph)]) == 0
    doc = json.loads(graph.read_text())
    assert doc["complete"] and len(doc["initials"]) == 1
    report = tmp_path / "report.json"
    main(["check", "--model", "bvb", "--params", "4,1,1", "--json", str(report)])
    capsys.readouterr()
    assert main(["report", str(report), str(graph)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "bv_term" in text and "bvb" in text


def test_export_dot(tmp_path):
    out = tmp_path / "bvb.dot"
    assert main(["export", "--model", "bvb", "--out", str(out)]) == EXIT_OK
    assert out.read_text().startswith('digraph "bvb"')


def test_console_script_entry_point():
    result = subprocess.run(
        [sys.executable, "-m", "tacheck.cli", "export", "--model", "bvb"], capture_output=True, text=True
    )
    assert result.returncode == 0 and result.stdout.count("->") == 19
