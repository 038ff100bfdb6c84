"""
Performance measures: congestion predicate, fairness, power, knee and cliff,
and per-run flow summaries.
"""

import math
from dataclasses import dataclass

import numpy as np


def is_congested(demands, capacity):
    """True when total demand strictly exceeds capacity."""
    if not capacity > 0:
        raise ValueError("capacity must be positive")
    demands = list(demands)
    if any(d < 0 for d in demands):
        raise ValueError("demands must be non-negative")
    return math.fsum(demands) > capacity


def fairness_index(xs):
    """(sum x)^2 / (n * sum x^2): 1 for equal shares, 1/n when one party gets everything."""
    x = np.asarray(xs, dtype=float)
    if x.size == 0:
        raise ValueError("fairness index of an empty allocation")
    if np.any(x < 0):
        raise ValueError("allocations must be non-negative")
    sq = float(np.dot(x, x))
    if sq == 0:
        raise ValueError("fairness index of an all-zero allocation")
    return float(x.sum()) ** 2 / (x.size * sq)


def power(throughput, delay, exponent=1.0):
    """throughput**exponent / delay."""
    if not delay > 0:
        raise ValueError("delay must be positive")
    return throughput ** exponent / delay


@dataclass
class SweepPoint:
    offered_load: float
    throughput: float
    mean_delay: float
    power: float


def knee_cliff(curve, delta=0.1):
    """Locate the knee (max power) and the cliff of a load curve.

    The cliff is the smallest load above the max-throughput point whose
    throughput is below ``(1 - delta)`` of the maximum; ``None`` if the
    curve never falls that far.
    """
    if len(curve) < 3:
        raise ValueError("knee/cliff needs at least 3 points")
    loads = [pt.offered_load for pt in curve]
    if any(b < a for a, b in zip(loads, loads[1:])):
        raise ValueError("curve must be sorted by offered load")
    knee = max(curve, key=lambda pt: pt.power).offered_load
    i_peak = max(range(len(curve)), key=lambda i: curve[i].throughput)
    peak = curve[i_peak].throughput
    cliff = None
    for pt in curve[i_peak + 1:]:
        if pt.throughput < (1 - delta) * peak:
            cliff = pt.offered_load
            break
    return knee, cliff


@dataclass
class FlowStats:
    conn: str
    packets_sent: int
    unique_delivered: int
    bits_delivered_unique: float
    retransmission_count: int
    goodput: float
    throughput: float
    mean_delay: float
    completion_time: float = math.nan

    @property
    def goodput_ratio(self):
        return self.goodput / self.throughput if self.throughput > 0 else math.nan


def _window(times, values, t0, t1):
    """Sum of ``values`` whose time lies in (t0, t1]; ``times`` is sorted."""
    t = np.asarray(times)
    lo = np.searchsorted(t, t0, side="right")
    hi = np.searchsorted(t, t1, side="right")
    return np.asarray(values[lo:hi], dtype=float), lo, hi


def flow_stats(flow, t0, t1):
    """Stats of one connection over the measurement interval (t0, t1]."""
    span = t1 - t0
    ubits, lo, hi = _window(flow.receiver.unique_times, flow.receiver.unique_bits, t0, t1)
    delays = np.asarray(flow.receiver.unique_delays[lo:hi], dtype=float)
    abits, _, _ = _window(flow.receiver.arrival_times, flow.receiver.arrival_bits, t0, t1)
    good = float(ubits.sum()) / span if span > 0 else 0.0
    thr = float(abits.sum()) / span if span > 0 else 0.0
    done = flow.sender.completed_at
    return FlowStats(
        conn=flow.conn,
        packets_sent=flow.sender.packets_sent,
        unique_delivered=len(flow.receiver.unique_times),
        bits_delivered_unique=float(sum(flow.receiver.unique_bits)),
        retransmission_count=flow.sender.retransmissions,
        goodput=good,
        throughput=thr,
        mean_delay=float(delays.mean()) if delays.size else math.nan,
        completion_time=math.nan if done is None else done,
    )


@dataclass
class Summary:
    flows: list
    aggregate: FlowStats
    fairness: float
    t0: float
    t1: float

    def by_conn(self, conn):
        for f in self.flows:
            if f.conn == conn:
                return f
        raise KeyError(conn)


def summarize(result):
    """Per-connection stats plus an aggregate row and the goodput fairness index."""
    t0, t1 = result.measure_start, result.end_time
    flows = [flow_stats(f, t0, t1) for f in result.flows]
    delays = []
    for fl in result.flows:
        _, lo, hi = _window(fl.receiver.unique_times, fl.receiver.unique_bits, t0, t1)
        delays.extend(fl.receiver.unique_delays[lo:hi])
    done = [f.completion_time for f in flows]
    agg = FlowStats(
        conn="*",
        packets_sent=sum(f.packets_sent for f in flows),
        unique_delivered=sum(f.unique_delivered for f in flows),
        bits_delivered_unique=sum(f.bits_delivered_unique for f in flows),
        retransmission_count=sum(f.retransmission_count for f in flows),
        goodput=sum(f.goodput for f in flows),
        throughput=sum(f.throughput for f in flows),
        mean_delay=float(np.mean(delays)) if delays else math.nan,
        completion_time=max(done) if done and not any(math.isnan(d) for d in done) else math.nan,
    )
    goodputs = [f.goodput for f in flows]
    fair = fairness_index(goodputs) if goodputs and any(g > 0 for g in goodputs) else math.nan
    return Summary(flows, agg, fair, t0, t1)


def sweep_point(value, summary):
    """Reduce one sweep run to a load-curve point (throughput counts unique deliveries)."""
    thr = summary.aggregate.goodput
    delay = summary.aggregate.mean_delay
    pw = power(thr, delay) if thr > 0 and delay > 0 else 0.0
    return SweepPoint(value, thr, 0.0 if math.isnan(delay) else delay, pw)
