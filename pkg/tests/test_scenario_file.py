import pytest

from congestion_lab import simulate
from congestion_lab.builtins import builtin_scenarios
from congestion_lab.cli import render_outputs
from congestion_lab.scenario_file import ScenarioFileError, export_scenario, parse_scenario

MINIMAL = """\
# two nodes, one link
[topology]
node A B
link A B bandwidth 1e6 delay 0.001

[connections]
conn c1 A B workload file packets 10

[run]
name minimal
duration 5
"""


def test_minimal_file():
    sc = parse_scenario(MINIMAL)
    assert sc.name == "minimal"
    assert sc.nodes == ["A", "B"]
    assert sc.links[0].bandwidth == 1e6
    assert sc.conns[0].packets == 10
    assert sc.run.duration == 5.0
    assert simulate(sc).summary().aggregate.unique_delivered == 10


def error_for(text):
    with pytest.raises(ScenarioFileError) as ei:
        parse_scenario(text)
    return ei.value


def test_undeclared_node_names_node_and_line():
    e = error_for(MINIMAL.replace("link A B", "link A C"))
    assert e.line == 4
    assert "'C'" in str(e) and "line 4" in str(e)


def test_negative_bandwidth():
    e = error_for(MINIMAL.replace("1e6", "-5"))
    assert e.line == 4
    assert e.reason == "bandwidth must be positive"


def test_missing_route_points_at_connection():
    e = error_for(MINIMAL.replace("node A B", "node A B Z").replace("conn c1 A B", "conn c1 A Z"))
    assert e.line == 7
    assert "no route" in str(e)


@pytest.mark.parametrize("old,new,line", [
    ("delay 0.001", "delay 0.001 colour red", 4),
    ("duration 5", "duration 5\nbogus 1", 12),
    ("[run]", "[runs]", 9),
    ("workload file", "workload file packets", 7),
    ("packets 10", "packets 10.5", 7),
    ("duration 5", "duration five", 11),
    ("1e6", "0x10", 4),
    ("1e6", "nan", 4),
    ("node A B", "nodes A B", 3),
])
def test_parse_errors_carry_line_numbers(old, new, line):
    e = error_for(MINIMAL.replace(old, new))
    assert e.line == line


def test_duplicate_keys_are_errors():
    error_for(MINIMAL.replace("delay 0.001", "delay 0.001 delay 0.002"))
    error_for(MINIMAL.replace("duration 5", "duration 5\nduration 6"))


def test_missing_section():
    with pytest.raises(ScenarioFileError, match=r"missing section \[connections\]"):
        parse_scenario(MINIMAL.replace("[connections]\nconn c1 A B workload file packets 10\n", ""))


def test_keywords_and_controller_params():
    sc = parse_scenario(MINIMAL.replace(
        "delay 0.001", "delay 0.001 buffer inf mark off choke on service rr drop head").replace(
        "packets 10", "packets 10 scheme linear param.every 4 cache off"))
    ln, c = sc.links[0], sc.conns[0]
    assert ln.buffer == float("inf") and ln.mark == float("inf") and ln.choke
    assert (ln.service, ln.drop) == ("rr", "head")
    assert c.params == {"every": 4} and c.cache is False


def test_sweep_section():
    sc = parse_scenario(MINIMAL + "\n[sweep]\nparam conn.c1.packets\nvalues 5,10,20\n")
    assert sc.sweep.param == "conn.c1.packets"
    assert sc.sweep.values == [5, 10, 20]
    e = error_for(MINIMAL + "\n[sweep]\nparam conn.c1.colour\nvalues 1\n")
    assert "unknown parameter" in str(e)


@pytest.mark.parametrize("name", list(builtin_scenarios()))
def test_export_round_trip(name):
    sc = builtin_scenarios()[name]()
    text = export_scenario(sc)
    again = parse_scenario(text)
    assert again == sc
    assert export_scenario(again) == export_scenario(parse_scenario(export_scenario(again)))


@pytest.mark.parametrize("name", ["myth-fastlink-repaired", "fairness-rr", "compare-choke"])
def test_round_trip_gives_identical_run(name):
    sc = builtin_scenarios()[name]()
    if sc.run.stop == "duration":
        sc.run.duration = 3.0
    again = parse_scenario(export_scenario(sc))
    a = render_outputs(sc.name, simulate(sc, trace=True, timeseries=True))
    b = render_outputs(again.name, simulate(again, trace=True, timeseries=True))
    assert a == b
