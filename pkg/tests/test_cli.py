import csv
import subprocess
import sys

import pytest

from congestion_lab.cli import SUMMARY_COLUMNS, main
from congestion_lab.metrics import SweepPoint, knee_cliff
from congestion_lab.scenario_file import export_scenario
from congestion_lab.builtins import get_builtin


def read(path):
    return path.read_bytes()


def test_run_writes_outputs_and_prints_aggregate(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["run", "myth-fastlink", "--out", str(out), "--timeseries", "--trace"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == ",".join(SUMMARY_COLUMNS)
    assert printed[1].startswith("myth-fastlink,*,")
    rows = list(csv.DictReader(open(out / "summary.csv")))
    assert [r["conn"] for r in rows] == ["c1", "*"]
    assert float(rows[1]["completion_s"]) == pytest.approx(417.61, rel=1e-6)
    header = (out / "timeseries.csv").read_text().splitlines()[0]
    assert header == "t_s,entity,metric,value"
    assert (out / "trace.log").stat().st_size > 0


def test_summary_only_by_default(tmp_path, capsys):
    assert main(["run", "myth-balanced", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["summary.csv"]


def test_same_seed_byte_identical(tmp_path, capsys):
    for d in ("r1", "r2"):
        args = ["run", "myth-fastlink", "--seed", "42", "--out", str(tmp_path / d), "--timeseries", "--trace"]
        assert main(args) == 0
    for f in ("summary.csv", "timeseries.csv", "trace.log"):
        assert read(tmp_path / "r1" / f) == read(tmp_path / "r2" / f)


def test_seed_changes_stochastic_output(tmp_path, capsys):
    main(["run", "fairness-fifo", "--seed", "1", "--out", str(tmp_path / "a")])
    main(["run", "fairness-fifo", "--seed", "2", "--out", str(tmp_path / "b")])
    assert read(tmp_path / "a" / "summary.csv") != read(tmp_path / "b" / "summary.csv")


def test_missing_file_exits_2(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.scn")]) == 2
    assert "missing.scn" in capsys.readouterr().err


def test_invalid_file_exits_2(tmp_path, capsys):
    f = tmp_path / "bad.scn"
    f.write_text(export_scenario(get_builtin("myth-fastlink")).replace("bandwidth 19200.0", "bandwidth -5", 1))
    assert main(["run", str(f), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "bandwidth must be positive" in err and "line" in err


def test_event_budget_exits_3(tmp_path, capsys):
    f = tmp_path / "small.scn"
    text = export_scenario(get_builtin("myth-fastlink")).replace("max_events 20000000", "max_events 100")
    f.write_text(text)
    assert main(["run", str(f), "--out", str(tmp_path)]) == 3
    assert "budget" in capsys.readouterr().err


def test_trace_starts_with_source_wakeup(tmp_path, capsys):
    assert main(["run", "myth-balanced", "--trace", "--out", str(tmp_path)]) == 0
    first = (tmp_path / "trace.log").read_text().splitlines()[0].split("\t")
    assert first[0] == "0.000000000" and first[1] == "source-wakeup"


def sweep_file(tmp_path):
    f = tmp_path / "k.scn"
    f.write_text(export_scenario(get_builtin("knee-open")).replace("duration 60.0", "duration 3.0"))
    return str(f)


def test_sweep_rows_and_knee_comment(tmp_path, capsys):
    values = "0.1,0.3,0.5,0.7,0.9,1.1,1.3,1.5,1.7"
    assert main(["sweep", sweep_file(tmp_path), "--param", "run.load", "--values", values,
                 "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    data = [ln for ln in lines[1:] if not ln.startswith("#")]
    comments = dict(ln[2:].split(",") for ln in lines if ln.startswith("#"))
    assert len(data) == 9
    pts = [SweepPoint(*map(float, ln.split(","))) for ln in data]
    loads = [p.offered_load for p in pts]
    assert loads == sorted(loads)
    knee, cliff = knee_cliff(pts)
    assert float(comments["knee"]) == knee
    assert comments["cliff"] == ("none" if cliff is None else format(cliff, ".9g"))


def test_sweep_from_section(tmp_path, capsys):
    f = tmp_path / "k.scn"
    text = export_scenario(get_builtin("knee-open")).replace("duration 60.0", "duration 1.0")
    f.write_text(text.replace("values 0.1,", "values ").split("values")[0] + "values 0.5,1.0,1.5\n")
    assert main(["sweep", str(f), "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 1 + 3 + 2


@pytest.mark.parametrize("args", [
    ["--param", "run.load", "--values", ""],
    ["--param", "run.bogus", "--values", "1,2"],
    ["--param", "run.load", "--values", "1,x"],
    ["--param", "run.load"],
])
def test_sweep_input_errors_exit_2(tmp_path, capsys, args):
    assert main(["sweep", sweep_file(tmp_path), "--out", str(tmp_path)] + args) == 2


def test_list_and_export(capsys):
    assert main(["list"]) == 0
    names = [ln.split("\t")[0] for ln in capsys.readouterr().out.splitlines()]
    assert "myth-fastlink" in names and "knee-open" in names
    assert main(["export", "myth-balanced"]) == 0
    assert "[topology]" in capsys.readouterr().out
    assert main(["export", "nope"]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "congestion_lab", "run", "myth-balanced-halved",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.splitlines()[1].startswith("myth-balanced-halved,*,")
    r = subprocess.run([sys.executable, "-m", "congestion_lab", "frobnicate"], capture_output=True)
    assert r.returncode == 2
