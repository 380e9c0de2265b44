import csv
import io
import json
import subprocess
import sys

import pytest

from abscon.cli import (
    EXIT_NO_SOLUTION, EXIT_OK, EXIT_UNSAT, EXIT_USAGE, FIELDS, ResultRecord, RunConfig,
    better_counts, delta_lb, exit_code, format_record, main, read_manifest, run_check,
)

TINY = {
    "a.fjs": "2 1\n1 1 1 3\n1 1 1 4\n",
    "b.fjs": "1 2\n2 1 1 3 2 1 4 2 2\n",
    "c.fjs": "2 2\n1 1 1 3\n1 1 2 4\n",
}


@pytest.fixture
def tiny(tmp_path):
    for name, text in TINY.items():
        (tmp_path / name).write_text(text)
    return tmp_path


def _records(out: str):
    return [json.loads(line) for line in out.strip().splitlines()]


def test_solve_tiny_optimal(tiny, capsys):
    rc = main(["solve", "--instance", str(tiny / "a.fjs"), "--timeout", "10",
               "--lower-bound", "7"])
    (rec,) = _records(capsys.readouterr().out)
    assert rc == EXIT_OK
    assert rec["status"] == "Optimal" and rec["best_makespan"] == 7
    assert rec["delta_lb_percent"] == 0.0
    assert set(rec) == set(FIELDS)


def test_solve_csv_has_header(tiny, capsys):
    main(["solve", "--instance", str(tiny / "b.fjs"), "--timeout", "10", "--domain", "fjs2",
          "--output", "csv"])
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 1
    assert rows[0]["best_makespan"] == "5" and rows[0]["delta_lb_percent"] == ""


def test_solve_prints_schedule(tiny, capsys):
    main(["solve", "--instance", str(tiny / "c.fjs"), "--timeout", "10", "--schedule"])
    sched = json.loads(capsys.readouterr().err)
    assert sched["makespan"] == 4


def test_solve_missing_file(tmp_path, capsys):
    rc = main(["solve", "--instance", str(tmp_path / "nope.fjs"), "--timeout", "5"])
    assert rc == EXIT_USAGE
    assert "nope.fjs" in capsys.readouterr().err


def test_solve_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.fjs"
    bad.write_text("1 3\n1 1 4 2\n")
    assert main(["solve", "--instance", str(bad), "--timeout", "5"]) == EXIT_USAGE
    assert "bad.fjs" in capsys.readouterr().err


def test_solve_unsat_horizon(tiny, capsys):
    rc = main(["solve", "--instance", str(tiny / "a.fjs"), "--timeout", "5", "--horizon", "6"])
    assert rc == EXIT_UNSAT
    assert _records(capsys.readouterr().out)[0]["status"] == "Unsat"


@pytest.mark.parametrize("argv", [
    ["solve", "--instance", "x.fjs", "--timeout", "0.5"],
    ["solve", "--instance", "x.fjs", "--timeout", "5", "--domain", "cp-sat"],
    ["solve", "--instance", "x.fjs"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_exit_codes():
    rec = ResultRecord("i", "fjs1", "Timeout")
    assert exit_code(rec) == EXIT_NO_SOLUTION
    rec.best_makespan = 10
    assert exit_code(rec) == EXIT_OK
    assert exit_code(ResultRecord("i", "fjs1", "Error")) == EXIT_USAGE


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig("x.fjs", timeout=0)
    with pytest.raises(ValueError):
        RunConfig("x.fjs", horizon=0)
    with pytest.raises(ValueError):
        RunConfig("x.fjs", strategy="random")
    assert RunConfig("x.fjs").domain == "fjs1"


def test_delta_lb():
    assert delta_lb(None, 10) is None
    assert delta_lb(12, None) is None
    assert delta_lb(12, 10) == 20.0
    assert delta_lb(1204, 1000) == 20.4


def test_format_record_nulls():
    rec = ResultRecord("i", "fjs1", "Timeout", total_time_ms=1.5)
    assert json.loads(format_record(rec, "jsonl"))["best_makespan"] is None
    line = format_record(rec, "csv")
    assert line.split(",")[FIELDS.index("best_makespan")] == ""


def test_manifest_parsing(tmp_path):
    m = tmp_path / "m.txt"
    m.write_text("# comment\na.fjs 7\n\nsub/b.fjs  # trailing\n")
    assert read_manifest(m) == [(str(tmp_path / "a.fjs"), 7), (str(tmp_path / "sub/b.fjs"), None)]
    m.write_text("a.fjs 7 9\n")
    with pytest.raises(ValueError):
        read_manifest(m)


def test_bench_shape(tiny, tmp_path, capsys):
    manifest = tiny / "manifest.txt"
    manifest.write_text("a.fjs 7\nb.fjs\nc.fjs 4\n")
    out = tmp_path / "out.jsonl"
    rc = main(["bench", "--manifest", str(manifest), "--timeout", "10",
               "--domains", "fjs1,fjs2", "--out", str(out)])
    assert rc == EXIT_OK
    recs = [json.loads(line) for line in out.read_text().splitlines()]
    assert len(recs) == 6
    assert [(r["instance"], r["domain"]) for r in recs[:2]] == [("a", "fjs1"), ("a", "fjs2")]
    assert all(r["delta_lb_percent"] is None for r in recs if r["instance"] == "b")
    summary = capsys.readouterr().out
    assert "strictly better" in summary
    # equal bounds everywhere: the pairwise matrix is all zero
    assert "fjs1  -  0" in summary and "fjs2  0  -" in summary


def test_bench_records_errors_and_continues(tiny, tmp_path, capsys):
    manifest = tiny / "manifest.txt"
    manifest.write_text("a.fjs\nmissing.fjs\n")
    out = tmp_path / "out.csv"
    main(["bench", "--manifest", str(manifest), "--timeout", "10", "--domains", "fjs1",
          "--out", str(out), "--output", "csv"])
    rows = list(csv.DictReader(out.open()))
    assert [r["status"] for r in rows] == ["Optimal", "Error"]
    assert "missing" in capsys.readouterr().err


def test_bench_bad_domains(tiny, tmp_path):
    manifest = tiny / "manifest.txt"
    manifest.write_text("a.fjs\n")
    assert main(["bench", "--manifest", str(manifest), "--timeout", "10",
                 "--domains", "nope", "--out", str(tmp_path / "o")]) == EXIT_USAGE


def test_better_counts_are_strict():
    recs = [ResultRecord("i1", "fjs1", "Timeout", best_makespan=10),
            ResultRecord("i1", "fjs2", "Timeout", best_makespan=10),
            ResultRecord("i2", "fjs1", "Timeout", best_makespan=9),
            ResultRecord("i2", "fjs2", "Timeout", best_makespan=11),
            ResultRecord("i3", "fjs1", "Timeout"),
            ResultRecord("i3", "fjs2", "Timeout", best_makespan=30)]
    c = better_counts(recs, ["fjs1", "fjs2"])
    assert c[("fjs1", "fjs2")] == 1 and c[("fjs2", "fjs1")] == 1


def test_check_suites(capsys):
    assert main(["check", "--suite", "octagon", "--suite", "ipc"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "PASS octagon" in out and "PASS ipc" in out


def test_check_empty_suite_is_usage_error(capsys):
    assert main(["check", "--suite", ""]) == EXIT_USAGE


def test_check_detects_injected_fault():
    # run in a child process: the fault patches the octagon module in place
    proc = subprocess.run([sys.executable, "-m", "abscon", "check", "--suite", "octagon",
                           "--inject-fault"], capture_output=True, text=True)
    assert proc.returncode == EXIT_USAGE
    assert "FAIL octagon" in proc.stdout


def test_run_check_writes_to_stream():
    buf = io.StringIO()
    assert run_check(["sharing"], seed=3, out=buf) == EXIT_OK
    assert buf.getvalue().startswith("PASS sharing")
