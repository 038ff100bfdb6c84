"""
Invariant checks computed from a run's trace.

Trace records are tab-separated ``time kind node conn seq detail`` lines.
Besides the processed events the simulator writes annotation records:

``inject``      packet handed to the network (detail: packet kind)
``deliver``     packet reached its destination node
``drop``        packet discarded by a queue
``choke``       router emitted a choke packet
``conn-start``  sender started (detail: ``window=<w>``)
``ack-rx``      cumulative ack advanced (detail: ``acked=<n> bit=<b>``)
``adjust``      window changed (seq column: number of changes; detail: new window)
``timeout``     retransmission timer fired
``choke-rx``    choke reached its source (detail: applied / ignored)
``rtt-sample``  RTT sample taken from packet ``seq``
"""

import math
from collections import defaultdict
from dataclasses import dataclass


@dataclass
class Record:
    time: float
    kind: str
    node: str
    conn: str
    seq: str
    detail: str


def parse_trace(lines):
    out = []
    for line in lines:
        t, kind, node, conn, seq, detail = line.split("\t")
        out.append(Record(float(t), kind, node, conn, seq, detail))
    return out


def _records(trace):
    if trace and isinstance(trace[0], str):
        return parse_trace(trace)
    return trace


def clock_monotone(trace):
    times = [r.time for r in _records(trace)]
    return all(b >= a for a, b in zip(times, times[1:]))


def packet_counts(trace):
    """(conn, kind) -> [injected, delivered, dropped] from the trace."""
    counts = defaultdict(lambda: [0, 0, 0])
    col = {"inject": 0, "deliver": 1, "drop": 2}
    for r in _records(trace):
        i = col.get(r.kind)
        if i is not None:
            counts[(r.conn, r.detail)][i] += 1
    return dict(counts)


def conservation(result):
    """Rows ``(conn, kind, injected, delivered, dropped, in_flight, ok)``.

    Injected/delivered/dropped come from the trace, in-flight from a direct
    scan of every port at the end of the run.
    """
    counts = packet_counts(result.trace)
    in_flight = result.network.in_flight()
    rows = []
    for key in sorted(set(counts) | set(in_flight)):
        inj, dlv, drp = counts.get(key, (0, 0, 0))
        fl = in_flight.get(key, 0)
        rows.append((key[0], key[1], inj, dlv, drp, fl, inj == dlv + drp + fl))
    return rows


@dataclass
class FrequencyAudit:
    conn: str
    adjustments: int
    acked: int
    min_window: float
    events: int

    @property
    def bound(self):
        return self.acked / math.floor(self.min_window) + self.events

    @property
    def ok(self):
        return self.adjustments <= self.bound


def control_frequency(trace):
    """Window changes versus acked packets, per connection.

    A controller passes when its number of window changes is at most
    ``acked / floor(min window) + timeouts + applied chokes``.
    """
    adj = defaultdict(int)
    acked = defaultdict(int)
    minw = {}
    events = defaultdict(int)
    for r in _records(trace):
        if r.kind == "conn-start" or r.kind == "adjust":
            w = float(r.detail.split("=")[1])
            minw[r.conn] = min(minw.get(r.conn, w), w)
            if r.kind == "adjust":
                adj[r.conn] += int(r.seq)
        elif r.kind == "ack-rx":
            acked[r.conn] += int(r.detail.split()[0].split("=")[1])
        elif r.kind == "timeout" or (r.kind == "choke-rx" and r.detail == "applied"):
            events[r.conn] += 1
    return [FrequencyAudit(c, adj[c], acked[c], minw[c], events[c]) for c in sorted(minw)]


def karn_violations(trace):
    """RTT samples taken from a sequence number that had already been retransmitted."""
    sent = set()
    retransmitted = set()
    bad = []
    for r in _records(trace):
        if r.kind == "inject" and r.detail == "data":
            key = (r.conn, r.seq)
            if key in sent:
                retransmitted.add(key)
            sent.add(key)
        elif r.kind == "rtt-sample" and (r.conn, r.seq) in retransmitted:
            bad.append(r)
    return bad
