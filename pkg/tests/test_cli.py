"""CLI tests: commands, exit codes, schema validity, replay stability."""

from __future__ import annotations

import csv
import io
import json

import jsonschema

from partialagreement.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_bounds_smg_example(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--n", "8", "--m", "2", "--t", "4", "--g", "4")
    assert code == 0
    r10 = next(line for line in out.splitlines() if line.startswith("R10"))
    assert " 6 " in r10


def test_bounds_async_example(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--n", "7", "--m", "3", "--t", "5", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    r5 = next(r for r in payload["reports"] if r["row"] == "R5" and r["variant"] == "base")
    assert r5["sufficient_k"] == 3 and r5["necessary_k"] == 3


def test_bounds_smallest_example(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--n", "2", "--m", "2", "--t", "1", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    r1 = next(r for r in payload["reports"] if r["row"] == "R1")
    assert r1["sufficient_k"] == r1["necessary_k"] == 1


def test_bounds_invalid_spec_exits_64(capsys):
    code, _, err = run_cli(capsys, "bounds", "--n", "1", "--m", "2", "--t", "0")
    assert code == 64
    assert "n must be" in err


def test_usage_error_exits_64(capsys):
    code, _, err = run_cli(capsys, "explore", "--alg", "nope", "--n", "3")
    assert code == 64


def test_run_min_flood_no_crash(capsys):
    code, out, _ = run_cli(
        capsys,
        "run", "--alg", "min-flood", "--n", "3", "--t", "1", "--ell", "1",
        "--inputs", "2,1,0", "--no-crash", "--format", "json",
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["trace"]["decisions"] == [0, 0, 0]
    assert payload["verdict"]["passed"]


def test_run_seeded_max_wait_and_replay(capsys):
    code, out, _ = run_cli(
        capsys,
        "run", "--alg", "max-wait", "--n", "3", "--t", "1", "--m", "3",
        "--inputs", "1,0,2", "--seed", "7", "--format", "json",
    )
    assert code == 0
    first = json.loads(out)
    code, out, _ = run_cli(capsys, "run", "--replay", json.dumps(first["replay"]), "--format", "json")
    assert code == 0
    second = json.loads(out)
    assert second["trace"] == first["trace"]


def test_run_smg_composition(capsys):
    code, out, _ = run_cli(
        capsys,
        "run", "--alg", "smg-comp", "--n", "8", "--g", "4", "--k", "6",
        "--inputs", "0,1,0,1,0,1,0,1", "--format", "json",
    )
    assert code == 0
    payload = json.loads(out)
    decisions = payload["trace"]["decisions"]
    top = max(decisions.count(v) for v in set(decisions))
    assert top >= 6


def test_explore_pass_and_violation_exit_codes(capsys):
    code, out, _ = run_cli(
        capsys,
        "explore", "--alg", "no-comm", "--n", "4", "--m", "2", "--t", "1",
        "--k", "2", "--inputs", "all",
    )
    assert code == 0
    code, out, _ = run_cli(
        capsys,
        "explore", "--alg", "no-comm", "--n", "4", "--m", "2", "--t", "1",
        "--k", "3", "--inputs", "all",
    )
    assert code == 1


def test_explore_budget_exit_code(capsys):
    code, _, _ = run_cli(
        capsys,
        "explore", "--alg", "max-wait", "--n", "3", "--m", "2", "--t", "1",
        "--k", "2", "--max-runs", "4",
    )
    assert code == 2


def test_explore_report_validates_against_schema(capsys):
    import importlib.resources as resources

    code, out, _ = run_cli(
        capsys,
        "explore", "--alg", "no-comm", "--n", "3", "--m", "2", "--t", "1",
        "--k", "2", "--format", "json",
    )
    assert code == 0
    schema = json.loads(
        resources.files("partialagreement.schemas")
        .joinpath("exploration_report.schema.json")
        .read_text()
    )
    jsonschema.validate(json.loads(out), schema)


def test_reduce_command_notes_oracle(capsys):
    code, out, _ = run_cli(
        capsys,
        "reduce", "--alg", "reduce-set", "--n", "4", "--m", "2", "--t", "1",
        "--validity", "strong",
    )
    assert code == 0
    assert "conditional construction verified against oracle" in out


def test_table_csv_stable_columns(capsys):
    code, out, _ = run_cli(capsys, "table", "--n-range", "2:5", "--m", "2", "--t", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert rows
    assert list(rows[0].keys()) == [
        "n", "m", "t", "k", "ell", "g", "model", "row", "variant",
        "sufficient_k", "necessary_k", "rounds_lower", "rounds_upper", "assumptions",
    ]
    r1 = [r for r in rows if r["row"] == "R1" and r["n"] == "4"]
    assert r1 and r1[0]["sufficient_k"] == "2"


def test_out_file_written(tmp_path, capsys):
    path = tmp_path / "report.json"
    code, _, _ = run_cli(
        capsys,
        "explore", "--alg", "no-comm", "--n", "3", "--m", "2", "--t", "1",
        "--k", "2", "--out", str(path),
    )
    assert code == 0
    payload = json.loads(path.read_text())
    assert payload["algorithm"] == "no-comm"


def test_env_var_budget_default(monkeypatch, capsys):
    monkeypatch.setenv("PARTIAL_AGREEMENT_BUDGET", "4")
    code, _, _ = run_cli(
        capsys,
        "explore", "--alg", "max-wait", "--n", "3", "--m", "2", "--t", "1", "--k", "2",
    )
    assert code == 2  # tiny default budget from the environment cuts the search
