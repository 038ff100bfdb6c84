"""
Command-line front end.

    congestion-lab run <file|builtin> [--seed N] [--out DIR] [--timeseries] [--trace]
    congestion-lab sweep <file|builtin> [--param PATH --values v1,v2,...]
    congestion-lab list
    congestion-lab export <builtin>

Exit status: 0 on success, 2 for bad input (parse or validation errors,
missing files, unknown parameters), 3 when a run fails.
"""

import argparse
import csv
import io
import math
import os
import sys

from .builtins import builtin_scenarios
from .engine import EventBudgetExceeded
from .metrics import knee_cliff
from .scenario import ScenarioError, Simulation, run_sweep
from .scenario_file import export_scenario, load_scenario

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 2, 3

SUMMARY_COLUMNS = ("scenario", "conn", "sent", "unique_delivered", "retransmitted", "goodput_bps",
                   "throughput_bps", "mean_delay_s", "completion_s", "fairness_index")
TIMESERIES_COLUMNS = ("t_s", "entity", "metric", "value")
SWEEP_COLUMNS = ("offered_load", "throughput_bps", "mean_delay_s", "power")


class InputError(Exception):
    """Bad command-line input; reported with exit status 2."""


def num(x):
    """Fixed 9-significant-digit rendering used in every CSV."""
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".9g")


def resolve(target):
    """A built-in name or a path to a scenario file."""
    table = builtin_scenarios()
    if target in table:
        return table[target]()
    if not os.path.exists(target):
        raise InputError(f"{target}: no such file or built-in scenario")
    try:
        return load_scenario(target)
    except UnicodeDecodeError as e:
        raise InputError(f"{target}: not UTF-8 text ({e.reason})") from None
    except ScenarioError as e:
        raise InputError(f"{target}: {e}") from None


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_rows(name, summary):
    rows = []
    for f in summary.flows + [summary.aggregate]:
        fair = num(summary.fairness) if f is summary.aggregate else ""
        rows.append([name, f.conn, num(f.packets_sent), num(f.unique_delivered),
                     num(f.retransmission_count), num(f.goodput), num(f.throughput),
                     num(f.mean_delay), num(f.completion_time), fair])
    return rows


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def render_outputs(name, result):
    """File name -> text for summary.csv and, when recorded, timeseries.csv and trace.log."""
    rows = summary_rows(name, result.summary())
    out = {"summary.csv": _csv_text(SUMMARY_COLUMNS, rows)}
    if result.timeseries is not None:
        ts = [[num(t), ent, metric, num(v)] for t, ent, metric, v in result.timeseries]
        out["timeseries.csv"] = _csv_text(TIMESERIES_COLUMNS, ts)
    if result.trace is not None:
        out["trace.log"] = "".join(line + "\n" for line in result.trace)
    return out


def cmd_run(args):
    sc = resolve(args.target)
    if args.seed is not None:
        sc = sc.with_seed(args.seed)
    try:
        res = Simulation(sc, trace=args.trace, timeseries=args.timeseries).run()
    except ScenarioError as e:
        raise InputError(str(e)) from None
    os.makedirs(args.out, exist_ok=True)
    for fname, text in render_outputs(sc.name, res).items():
        _write(os.path.join(args.out, fname), text)
    print(_csv_text(SUMMARY_COLUMNS, summary_rows(sc.name, res.summary())[-1:]), end="")
    return EXIT_OK


def _values(text):
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            out.append(float(tok))
        except ValueError:
            raise InputError(f"--values: {tok!r} is not a number") from None
    return out


def cmd_sweep(args):
    sc = resolve(args.target)
    if args.seed is not None:
        sc = sc.with_seed(args.seed)
    if args.param is None and args.values is None:
        if sc.sweep is None:
            raise InputError(f"{sc.name}: no [sweep] section; give --param and --values")
        param, values = sc.sweep.param, list(sc.sweep.values)
    elif args.param is None or args.values is None:
        raise InputError("--param and --values go together")
    else:
        param, values = args.param, _values(args.values)
    if not values:
        raise InputError("--values: empty value list")
    try:
        points, _ = run_sweep(sc, param, values)
    except ScenarioError as e:
        raise InputError(str(e)) from None
    rows = [[num(p.offered_load), num(p.throughput), num(p.mean_delay), num(p.power)] for p in points]
    text = _csv_text(SWEEP_COLUMNS, rows)
    text += "".join(f"# {k},{v}\n" for k, v in _knee_rows(points))
    os.makedirs(args.out, exist_ok=True)
    _write(os.path.join(args.out, "sweep.csv"), text)
    print(text, end="")
    return EXIT_OK


def _knee_rows(points):
    try:
        knee, cliff = knee_cliff(points)
    except ValueError:
        return [("knee", "nan"), ("cliff", "nan")]
    return [("knee", num(knee)), ("cliff", "none" if cliff is None else num(cliff))]


def cmd_list(args):
    for name, make in builtin_scenarios().items():
        print(f"{name}\t{make().description}")
    return EXIT_OK


def cmd_export(args):
    table = builtin_scenarios()
    if args.name not in table:
        raise InputError(f"{args.name}: unknown built-in scenario (see 'list')")
    text = export_scenario(table[args.name]())
    if args.out:
        _write(args.out, text)
    else:
        print(text, end="")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="congestion-lab",
                                 description="Packet-level congestion control simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("target", help="scenario file or built-in scenario name")
        p.add_argument("--seed", type=int, default=None,
                       help="random seed (default: the scenario's, which defaults to 1)")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--format", choices=["csv"], default="csv", help="output format")

    p = sub.add_parser("run", help="run one scenario")
    common(p)
    p.add_argument("--timeseries", action="store_true", help="also write timeseries.csv")
    p.add_argument("--trace", action="store_true", help="also write trace.log")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario once per parameter value")
    common(p)
    p.add_argument("--param", help="dotted parameter path, e.g. run.load or conn.c1.window")
    p.add_argument("--values", help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("export", help="print a built-in scenario as a scenario file")
    p.add_argument("name")
    p.add_argument("--out", default=None, help="write to this file instead of stdout")
    p.set_defaults(func=cmd_export)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as e:
        print(f"congestion-lab: {e}", file=sys.stderr)
        return EXIT_INPUT
    except EventBudgetExceeded as e:
        print(f"congestion-lab: run failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except (RuntimeError, ArithmeticError, OSError) as e:
        print(f"congestion-lab: run failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
