"""
Scenario description and the runner that turns one into a simulation.

Links are duplex: one :class:`LinkSpec` creates a port in each direction and
both ports share its queue settings.  Workloads:

``file``
    ``packets`` packets available at ``start``; the connection completes when
    the last one is acknowledged.
``bulk``
    Unlimited backlog (a greedy source).
``stream``
    New packets arrive at ``rate`` bits/s (times ``run.load``), with
    deterministic or Poisson spacing and fixed or exponential sizes.

Transport modes: ``window`` (window-limited, acked), ``rate`` (token bucket,
acked) and ``open`` (unacknowledged datagrams, never retransmitted).
"""

import copy
import math
from dataclasses import dataclass, field, fields

from . import metrics
from .engine import SAMPLE, SOURCE_WAKEUP, RngStream, Simulator
from .net import DROP_POLICIES, DROP_RANDOM, SERVICE_POLICIES, Link, Network, PortQueue
from .schemes import SCHEMES, make_controller
from .transport import (MODES, OPEN_MODE, RATE_MODE, RETX_POLICIES, Receiver, RttEstimator,
                        Sender, TokenBucket)

WORKLOADS = ("file", "bulk", "stream")


class ScenarioError(ValueError):
    """A scenario violates a structural or numeric constraint.

    ``where`` locates the offending item when known: ``("node", name)``,
    ``("link", index)``, ``("conn", index)``, ``("run", field)`` or
    ``("sweep", None)``.
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class _At:
    """Tag any ScenarioError raised inside the block with a location."""

    def __init__(self, where):
        self.where = where

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if isinstance(exc, ScenarioError) and exc.where is None:
            exc.where = self.where
        return False


@dataclass
class LinkSpec:
    a: str
    b: str
    bandwidth: float
    delay: float = 0.0
    buffer: float = math.inf
    service: str = "fifo"
    drop: str = "tail"
    mark: float = 1.0
    choke: bool = False


@dataclass
class ConnSpec:
    id: str
    src: str
    dst: str
    workload: str = "file"
    packets: int = 1000
    size: float = 8000.0
    rate: float = 0.0
    arrivals: str = "det"
    sizes: str = "fixed"
    start: float = 0.0
    mode: str = "window"
    scheme: str = "static"
    window: float = 8.0
    max_window: float = 64.0
    retx: str = "gbn"
    rto: str = "adaptive"
    rto_init: float = 3.0
    ack_every: int = 1
    cache: bool = True
    rate_limit: float = 0.0
    burst: float = 0.0
    params: dict = field(default_factory=dict)


@dataclass
class RunSpec:
    duration: float = 60.0
    stop: str = "duration"
    warmup: float = 0.1
    seed: int = 1
    load: float = 1.0
    sample_interval: float = 1.0
    ack_size: float = 320.0
    choke_size: float = 320.0
    max_events: int = 20_000_000


@dataclass
class SweepSpec:
    param: str
    values: list


@dataclass
class Scenario:
    name: str
    nodes: list
    links: list
    conns: list
    run: RunSpec = field(default_factory=RunSpec)
    sweep: SweepSpec = None
    description: str = ""

    def conn(self, cid):
        for c in self.conns:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def with_seed(self, seed):
        sc = copy.deepcopy(self)
        sc.run.seed = int(seed)
        return sc


def validate(sc):
    """Raise :class:`ScenarioError` naming the first violated constraint."""
    nodes = set()
    for n in sc.nodes:
        if n in nodes:
            raise ScenarioError(f"duplicate node {n!r}", ("node", n))
        nodes.add(n)
    seen = set()
    for i, ln in enumerate(sc.links):
        with _At(("link", i)):
            _check_link(ln, nodes, seen)
    ids = set()
    for i, c in enumerate(sc.conns):
        with _At(("conn", i)):
            if c.id in ids:
                raise ScenarioError(f"duplicate connection id {c.id!r}")
            ids.add(c.id)
            _check_conn(c, nodes)
    run = sc.run
    checks = [
        ("stop", run.stop in ("duration", "completion"), "stop must be duration or completion"),
        ("duration", run.duration > 0, "duration must be positive"),
        ("warmup", 0 <= run.warmup < 1, "warmup must be in [0, 1)"),
        ("sample_interval", run.sample_interval > 0, "sample_interval must be positive"),
        ("load", run.load > 0, "load must be positive"),
        ("ack_size", run.ack_size > 0, "ack_size must be positive"),
        ("choke_size", run.choke_size > 0, "choke_size must be positive"),
        ("max_events", run.max_events >= 1, "max_events must be >= 1"),
    ]
    for key, ok, msg in checks:
        if not ok:
            raise ScenarioError(msg, ("run", key))
    if run.stop == "completion" and not any(c.workload == "file" for c in sc.conns):
        raise ScenarioError("stop completion needs at least one file workload", ("run", "stop"))
    # every connection needs a route
    net = Network(Simulator())
    for n in sc.nodes:
        net.add_node(n)
    for ln in sc.links:
        net.add_link(Link(ln.a, ln.b, ln.bandwidth, ln.delay), PortQueue())
    net.build_routes()
    for i, c in enumerate(sc.conns):
        if net.route(c.src, c.dst) is None:
            raise ScenarioError(f"connection {c.id} has no route from {c.src} to {c.dst}", ("conn", i))
    if sc.sweep is not None:
        with _At(("sweep", None)):
            if not sc.sweep.values:
                raise ScenarioError("sweep needs at least one value")
            get_param(sc, sc.sweep.param)
    return sc


def _check_link(ln, nodes, seen):
    for n in (ln.a, ln.b):
        if n not in nodes:
            raise ScenarioError(f"link {ln.a}-{ln.b} references undeclared node {n!r}")
    if ln.a == ln.b:
        raise ScenarioError(f"link {ln.a}-{ln.b} is a self-loop")
    key = frozenset((ln.a, ln.b))
    if key in seen:
        raise ScenarioError(f"duplicate link {ln.a}-{ln.b}")
    seen.add(key)
    if not ln.bandwidth > 0:
        raise ScenarioError("bandwidth must be positive")
    if not ln.delay >= 0:
        raise ScenarioError("delay must be non-negative")
    if not ln.buffer >= 0:
        raise ScenarioError("buffer must be non-negative")
    if not ln.mark >= 0:
        raise ScenarioError("mark must be non-negative")
    if ln.service not in SERVICE_POLICIES:
        raise ScenarioError(f"service must be one of {', '.join(SERVICE_POLICIES)}")
    if ln.drop not in DROP_POLICIES:
        raise ScenarioError(f"drop must be one of {', '.join(DROP_POLICIES)}")


def _check_conn(c, nodes):
    for n in (c.src, c.dst):
        if n not in nodes:
            raise ScenarioError(f"connection {c.id} references undeclared node {n!r}")
    if c.src == c.dst:
        raise ScenarioError(f"connection {c.id} has identical endpoints")
    if c.workload not in WORKLOADS:
        raise ScenarioError(f"workload must be one of {', '.join(WORKLOADS)}")
    if c.mode not in MODES:
        raise ScenarioError(f"mode must be one of {', '.join(MODES)}")
    if c.scheme not in SCHEMES:
        raise ScenarioError(f"scheme must be one of {', '.join(SCHEMES)}")
    if c.retx not in RETX_POLICIES:
        raise ScenarioError(f"retx must be one of {', '.join(RETX_POLICIES)}")
    if c.rto not in ("fixed", "adaptive"):
        raise ScenarioError("rto must be fixed or adaptive")
    if c.arrivals not in ("det", "poisson"):
        raise ScenarioError("arrivals must be det or poisson")
    if c.sizes not in ("fixed", "exp"):
        raise ScenarioError("sizes must be fixed or exp")
    if not c.size > 0:
        raise ScenarioError("size must be positive")
    if not c.start >= 0:
        raise ScenarioError("start must be non-negative")
    if c.workload == "file" and not c.packets >= 1:
        raise ScenarioError("packets must be >= 1")
    if c.workload == "stream" and not c.rate > 0:
        raise ScenarioError("stream rate must be positive")
    if c.workload != "stream" and c.mode == OPEN_MODE:
        raise ScenarioError(f"connection {c.id}: open mode needs a stream workload")
    if not c.rto_init > 0:
        raise ScenarioError("rto_init must be positive")
    if not c.ack_every >= 1:
        raise ScenarioError("ack_every must be >= 1")
    if not c.window >= 1:
        raise ScenarioError("window must be >= 1")
    if c.sizes == "exp" and c.workload != "stream":
        raise ScenarioError(f"connection {c.id}: exponential sizes need a stream workload")
    if c.mode == RATE_MODE:
        if c.sizes == "exp":
            raise ScenarioError(f"connection {c.id}: rate mode needs fixed sizes")
        if not c.rate_limit > 0:
            raise ScenarioError("rate_limit must be positive")
        if not c.burst >= c.size:
            raise ScenarioError("burst must be at least one packet")
    try:
        _controller(c)
    except ValueError as e:
        raise ScenarioError(f"connection {c.id}: {e}") from None


def _controller(c):
    params = dict(c.params)
    if c.scheme != "none":
        params.setdefault("window", c.window)
        if c.scheme != "static":
            params.setdefault("max_window", c.max_window)
    return make_controller(c.scheme, **params)


# ---------------------------------------------------------------- parameters

def _resolve(sc, path):
    parts = path.split(".")
    if parts[0] == "run" and len(parts) == 2:
        return sc.run, parts[1]
    if parts[0] == "conn" and len(parts) == 3:
        try:
            return sc.conn(parts[1]), parts[2]
        except KeyError:
            raise ScenarioError(f"unknown connection {parts[1]!r} in {path!r}") from None
    if parts[0] == "link" and len(parts) == 4:
        for ln in sc.links:
            if {ln.a, ln.b} == {parts[1], parts[2]}:
                return ln, parts[3]
        raise ScenarioError(f"unknown link {parts[1]}-{parts[2]} in {path!r}")
    raise ScenarioError(f"unknown parameter path {path!r}")


def get_param(sc, path):
    obj, name = _resolve(sc, path)
    if name not in {f.name for f in fields(obj)} or name == "params":
        raise ScenarioError(f"unknown parameter path {path!r}")
    value = getattr(obj, name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"parameter {path!r} is not numeric")
    return value


def set_param(sc, path, value):
    """Copy of ``sc`` with the numeric field at dotted ``path`` replaced."""
    sc = copy.deepcopy(sc)
    old = get_param(sc, path)
    obj, name = _resolve(sc, path)
    setattr(obj, name, type(old)(value) if isinstance(old, int) and float(value).is_integer() else float(value))
    return sc


# -------------------------------------------------------------------- runner

@dataclass
class Flow:
    conn: str
    spec: ConnSpec
    sender: Sender
    receiver: Receiver


@dataclass
class RunResult:
    scenario: Scenario
    end_time: float
    measure_start: float
    flows: list
    network: Network
    trace: list
    timeseries: list
    events: int
    port_bits_at_start: dict

    def flow(self, conn):
        for f in self.flows:
            if f.conn == conn:
                return f
        raise KeyError(conn)

    def port(self, a, b):
        return self.network.ports[(a, b)]

    def port_throughput(self, a, b):
        """Data bits/s forwarded on port a->b during the measurement interval."""
        port = self.port(a, b)
        now = sum(port.forwarded_bits.values())
        before = self.port_bits_at_start.get((a, b), 0.0)
        span = self.end_time - self.measure_start
        return (now - before) / span if span > 0 else 0.0

    def packet_kinds(self):
        kinds = {}
        for (_, kind), n in self.network.injected.items():
            kinds[kind] = kinds.get(kind, 0) + n
        return kinds

    def summary(self):
        return metrics.summarize(self)


class Simulation:
    """Build the network, senders and receivers described by a scenario and run it."""

    def __init__(self, scenario, trace=False, timeseries=False):
        self.sc = validate(scenario)
        run = self.sc.run
        self.trace = [] if trace else None
        self.timeseries = [] if timeseries else None
        self.sim = Simulator(trace=self.trace, max_events=run.max_events)
        self.net = Network(self.sim, ack_size=run.ack_size, choke_size=run.choke_size)
        seed = run.seed
        for n in self.sc.nodes:
            self.net.add_node(n)
        for ln in self.sc.links:
            for a, b in ((ln.a, ln.b), (ln.b, ln.a)):
                rng = RngStream(seed, f"queue:{a}->{b}") if ln.drop == DROP_RANDOM else None
                q = PortQueue(ln.buffer, ln.service, ln.drop, ln.mark, ln.choke, rng)
                self.net.add_link(Link(a, b, ln.bandwidth, ln.delay), q)
        self.net.build_routes()
        self.flows = []
        self._pending_files = 0
        for c in self.sc.conns:
            self.flows.append(self._build_flow(c, seed))
        self._port_snapshot = {}

    def _build_flow(self, c, seed):
        sim, net = self.sim, self.net
        ctrl = _controller(c)
        est = RttEstimator(initial_rto=c.rto_init, fixed=(c.rto == "fixed"))
        bucket = TokenBucket(c.rate_limit, c.burst) if c.mode == RATE_MODE else None
        rng = RngStream(seed, f"source:{c.id}")
        sender = Sender(sim, net, c.id, c.src, c.dst, ctrl, est, size=c.size, retx=c.retx,
                        mode=c.mode, bucket=bucket)
        receiver = Receiver(sim, net, c.id, c.dst, c.src, caching=c.cache, ack_every=c.ack_every,
                            acks=(c.mode != OPEN_MODE))
        if c.workload == "file":
            sender.total = c.packets
            sender.on_complete = self._completed
            self._pending_files += 1
        if c.workload == "stream":
            rate = c.rate * self.sc.run.load / c.size
            sim.schedule(c.start, SOURCE_WAKEUP, self._stream_arrival, sender, rate, c, rng,
                         node=c.src, conn=c.id)
        else:
            sim.schedule(c.start, SOURCE_WAKEUP, self._start, sender,
                         math.inf if c.workload == "bulk" else c.packets, node=c.src, conn=c.id)
        return Flow(c.id, c, sender, receiver)

    def _start(self, sender, backlog):
        sender.backlog = backlog
        sender.start()

    def _stream_arrival(self, sender, rate, c, rng, k=0):
        size = rng.exponential(c.size) if c.sizes == "exp" else c.size
        if k == 0:
            sender.start()
        sender.offer(1, size)
        if c.arrivals == "poisson":
            at = self.sim.now + rng.exponential(1.0 / rate)
        else:
            # computed from the index, not accumulated, to keep spacing exact
            at = c.start + (k + 1) / rate
        self.sim.schedule(at, SOURCE_WAKEUP, self._stream_arrival, sender, rate, c, rng, k + 1,
                          node=c.src, conn=c.id)

    def _completed(self, sender):
        self.sim.log("complete", sender.src, sender.conn, sender.highest_acked, f"{sender.completed_at:.9f}")
        self._pending_files -= 1
        if self._pending_files == 0 and self.sc.run.stop == "completion":
            self.sim.stop()

    def _snapshot(self):
        self._port_snapshot = {k: sum(p.forwarded_bits.values()) for k, p in self.net.ports.items()}

    def _sample(self):
        t = self.sim.now
        rows = self.timeseries
        for key in sorted(self.net.ports):
            port = self.net.ports[key]
            q = port.queue
            ent = f"queue:{port.name}"
            rows.append((t, ent, "occupancy", q.occupancy))
            rows.append((t, ent, "drops", q.drops))
            rows.append((t, ent, "marks", q.marks))
        for f in self.flows:
            s = f.sender
            ent = f"conn:{f.conn}"
            rows.append((t, ent, "window", s.controller.window))
            rows.append((t, ent, "srtt", math.nan if s.est.srtt is None else s.est.srtt))
            rows.append((t, ent, "rto", s.est.rto()))
            rows.append((t, ent, "outstanding", len(s.outstanding)))
            rows.append((t, ent, "retransmissions", s.retransmissions))
        nxt = t + self.sc.run.sample_interval
        if nxt <= self.sc.run.duration:
            self.sim.schedule(nxt, SAMPLE, self._sample)

    def run(self):
        run = self.sc.run
        completion = run.stop == "completion"
        measure_start = 0.0 if completion else run.warmup * run.duration
        if measure_start > 0:
            self.sim.schedule(measure_start, SAMPLE, self._snapshot)
        if self.timeseries is not None:
            self.sim.schedule(0.0, SAMPLE, self._sample)
        self.sim.run_until(run.duration)
        end = self.sim.now
        return RunResult(self.sc, end, measure_start if end > measure_start else 0.0, self.flows,
                         self.net, self.trace, self.timeseries, self.sim.processed,
                         self._port_snapshot)


def simulate(scenario, seed=None, trace=False, timeseries=False):
    if seed is not None:
        scenario = scenario.with_seed(seed)
    return Simulation(scenario, trace=trace, timeseries=timeseries).run()


def run_sweep(scenario, param=None, values=None, seed=None):
    """Run one simulation per value; point ``i`` uses seed ``base + i``.

    Returns ``(points, results)`` in value order.
    """
    if param is None:
        if scenario.sweep is None:
            raise ScenarioError("scenario has no sweep section")
        param, values = scenario.sweep.param, scenario.sweep.values
    values = list(values)
    if not values:
        raise ScenarioError("sweep needs at least one value")
    get_param(scenario, param)
    base = scenario.run.seed if seed is None else int(seed)
    points, results = [], []
    for i, v in enumerate(values):
        sc = set_param(scenario, param, v)
        sc.run.seed = base + i
        sc.sweep = None
        res = simulate(sc)
        points.append(metrics.sweep_point(v, res.summary()))
        results.append(res)
    return points, results
