"""
Canned experiments.

Constants the source material leaves open (file size, window, timer values,
buffer sizes) are reconstructions chosen so that each phenomenon shows up at
desk scale; they live here as data and can be exported, edited and re-run
as scenario files.
"""

from .scenario import ConnSpec, LinkSpec, RunSpec, Scenario, SweepSpec

SLOW = 19_200.0
FAST = 1_000_000.0
PKT = 8000.0


def myth_buffers(buffer=float("inf"), scheme="none"):
    """Greedy source at twice the bottleneck rate with a naive fixed timeout.

    With an unbounded router buffer the queueing delay outgrows the timeout
    and most forwarded packets end up being duplicates.  ``buffer=20,
    scheme="cute"`` is the repaired variant.
    """
    cute = scheme == "cute"
    name = "myth-buffers" if not cute else "myth-buffers-cute"
    return Scenario(
        name=name,
        description="infinite router memory does not prevent collapse"
        if not cute else "finite buffer plus timeout-driven window control",
        nodes=["S", "R", "D"],
        links=[
            LinkSpec("S", "R", 10 * FAST, 0.005),
            LinkSpec("R", "D", FAST, 0.005, buffer=buffer),
        ],
        conns=[
            ConnSpec("c1", "S", "D", workload="bulk", size=PKT, mode="rate",
                     rate_limit=2 * FAST, burst=PKT, scheme=scheme, window=1.0,
                     retx="first" if cute else "gbn", rto="fixed", rto_init=0.3,
                     cache=cute),
        ],
        run=RunSpec(duration=60.0, warmup=0.1, sample_interval=1.0),
    )


def myth_fastlink(upgraded=False, repaired=False):
    """Four nodes in series; optionally the first hop becomes 1 Mbit/s."""
    if repaired:
        upgraded = True
    first = FAST if upgraded else SLOW
    name = "myth-fastlink" + ("-upgraded" if upgraded and not repaired else "") + (
        "-repaired" if repaired else "")
    if repaired:
        conn = ConnSpec("c1", "N1", "N4", workload="file", packets=1000, size=PKT,
                        scheme="cute", window=1.0, max_window=64.0, retx="first",
                        rto="adaptive", rto_init=2.0, cache=True)
    else:
        conn = ConnSpec("c1", "N1", "N4", workload="file", packets=1000, size=PKT,
                        scheme="static", window=8.0, retx="gbn", rto="fixed",
                        rto_init=2.0, cache=False)
    return Scenario(
        name=name,
        description=("fast first hop plus CUTE and an adaptive timer" if repaired
                     else "a faster first hop without congestion control slows the transfer"
                     if upgraded else "serial 19.2 kbit/s path"),
        nodes=["N1", "N2", "N3", "N4"],
        links=[
            LinkSpec("N1", "N2", first, 0.01, buffer=10),
            LinkSpec("N2", "N3", SLOW, 0.01, buffer=10),
            LinkSpec("N3", "N4", SLOW, 0.01, buffer=10),
        ],
        conns=[conn],
        run=RunSpec(duration=1_000_000.0, stop="completion", warmup=0.0, sample_interval=10.0),
    )


def myth_balanced(halved=False):
    """Two 1 Gbit/s sources into one 1 Gbit/s output, open loop, unbounded buffer."""
    offset = PKT / 1e9 if halved else 0.0
    return Scenario(
        name="myth-balanced" + ("-halved" if halved else ""),
        description="equal-speed links still congest when two inputs share one output",
        nodes=["A", "B", "R", "C"],
        links=[
            LinkSpec("A", "R", 1e9, 0.0),
            LinkSpec("B", "R", 1e9, 0.0),
            LinkSpec("R", "C", 1e9, 0.0),
        ],
        conns=[
            ConnSpec("a", "A", "C", workload="stream", rate=1e9, size=PKT, mode="open", scheme="none"),
            ConnSpec("b", "B", "C", workload="stream", rate=1e9, size=PKT, mode="open", scheme="none",
                     start=offset),
        ],
        run=RunSpec(duration=0.01, warmup=0.0, load=0.5 if halved else 1.0, sample_interval=0.001),
    )


LOAD_GRID = [round(0.1 * i, 1) for i in range(1, 19)]


def knee_open(deterministic=False, values=None):
    """Open-loop load sweep over an M/M/1 (or D/D/1) bottleneck."""
    cap = 8e6
    return Scenario(
        name="knee-deterministic" if deterministic else "knee-open",
        description="throughput, delay and power versus offered load",
        nodes=["S", "R", "D"],
        links=[
            LinkSpec("S", "R", 1e9, 0.0),
            LinkSpec("R", "D", cap, 0.0),
        ],
        conns=[
            ConnSpec("c1", "S", "D", workload="stream", rate=cap, size=PKT, mode="open", scheme="none",
                     arrivals="det" if deterministic else "poisson",
                     sizes="fixed" if deterministic else "exp"),
        ],
        run=RunSpec(duration=60.0, warmup=0.1, sample_interval=1.0),
        sweep=SweepSpec("run.load", list(values or LOAD_GRID)),
    )


def cliff_closed(values=None):
    """Window-limited sources behind a small buffer with fixed timers and go-back-n.

    New data arrives at evenly spaced instants with the sources staggered by
    one bottleneck service time, so below capacity nothing queues; beyond it
    the windows overrun the buffer and go-back-n wastes the bottleneck.
    """
    n = 4
    return Scenario(
        name="cliff-closed",
        description="goodput collapse beyond capacity from loss and retransmission",
        nodes=[f"S{i}" for i in range(1, n + 1)] + ["R", "D"],
        links=[LinkSpec(f"S{i}", "R", 10 * FAST, 0.005) for i in range(1, n + 1)]
        + [LinkSpec("R", "D", FAST, 0.005, buffer=10)],
        conns=[
            ConnSpec(f"c{i}", f"S{i}", "D", workload="stream", rate=FAST / n, size=PKT,
                     arrivals="det", start=(i - 1) * PKT / FAST, mode="window", scheme="static",
                     window=8.0, retx="gbn", rto="fixed", rto_init=0.3, cache=False)
            for i in range(1, n + 1)
        ],
        run=RunSpec(duration=60.0, warmup=0.1, sample_interval=1.0),
        sweep=SweepSpec("run.load", list(values or LOAD_GRID)),
    )


def fairness(service="fifo", equal=False):
    """Four open-loop sources over one bottleneck at 1.5x its capacity."""
    if equal:
        rates = [0.375 * FAST] * 4
    else:
        rates = [0.75 * FAST, 0.25 * FAST, 0.25 * FAST, 0.25 * FAST]
    name = "fairness-" + service + ("-equal" if equal else "")
    return Scenario(
        name=name,
        description="per-connection round-robin versus a shared FIFO",
        nodes=["S1", "S2", "S3", "S4", "R", "D"],
        links=[LinkSpec(f"S{i}", "R", 10 * FAST, 0.001) for i in range(1, 5)]
        + [LinkSpec("R", "D", FAST, 0.001, buffer=20, service=service)],
        conns=[
            ConnSpec(f"c{i}", f"S{i}", "D", workload="stream", rate=r, size=PKT,
                     arrivals="poisson", mode="open", scheme="none")
            for i, r in enumerate(rates, start=1)
        ],
        run=RunSpec(duration=30.0, warmup=0.1, sample_interval=1.0),
    )


COMPARE_SCHEMES = ("cute", "linear", "slow-start", "binary-feedback", "delay-based", "choke")


def compare(scheme):
    """Two greedy connections sharing a bottleneck under one window scheme.

    ``choke`` runs CUTE with routers sending a choke packet on every drop.
    """
    choke = scheme == "choke"
    ctl = "cute" if choke else scheme
    return Scenario(
        name=f"compare-{scheme}",
        description=f"two bulk transfers under {scheme}",
        nodes=["S1", "S2", "R", "D"],
        links=[
            LinkSpec("S1", "R", 10 * FAST, 0.005),
            LinkSpec("S2", "R", 10 * FAST, 0.005),
            LinkSpec("R", "D", FAST, 0.005, buffer=20, choke=choke),
        ],
        conns=[
            ConnSpec(f"c{i}", f"S{i}", "D", workload="bulk", size=PKT, scheme=ctl, window=1.0,
                     max_window=64.0, retx="first", rto="adaptive", rto_init=1.0, cache=True,
                     start=0.05 * (i - 1))
            for i in (1, 2)
        ],
        run=RunSpec(duration=60.0, warmup=0.1, sample_interval=1.0),
    )


def builtin_scenarios():
    """Name -> zero-argument constructor, in listing order."""
    table = {
        "myth-buffers": myth_buffers,
        "myth-buffers-cute": lambda: myth_buffers(buffer=20, scheme="cute"),
        "myth-fastlink": myth_fastlink,
        "myth-fastlink-upgraded": lambda: myth_fastlink(upgraded=True),
        "myth-fastlink-repaired": lambda: myth_fastlink(repaired=True),
        "myth-balanced": myth_balanced,
        "myth-balanced-halved": lambda: myth_balanced(halved=True),
        "knee-open": knee_open,
        "knee-deterministic": lambda: knee_open(deterministic=True),
        "cliff-closed": cliff_closed,
        "fairness-fifo": fairness,
        "fairness-rr": lambda: fairness("rr"),
        "fairness-rr-equal": lambda: fairness("rr", equal=True),
    }
    for s in COMPARE_SCHEMES:
        table[f"compare-{s}"] = (lambda s=s: compare(s))
    return table


def get_builtin(name):
    table = builtin_scenarios()
    if name not in table:
        raise KeyError(name)
    return table[name]()
