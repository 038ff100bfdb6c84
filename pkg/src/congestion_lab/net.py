"""
Store-and-forward network model.

Every directed link has an output port at its upstream node: a
:class:`PortQueue` holding waiting packets and a transmitter that serializes
one packet at a time.  Routing is static (fewest hops, computed once with
networkx).  Routers may set the congestion bit on forwarded data packets and
may send a choke packet back to the source of any data packet they drop.
"""

import math
from collections import deque
from dataclasses import dataclass

import networkx as nx

from .engine import PACKET_ARRIVAL, TRANSMISSION_COMPLETE

DATA = "data"
ACK = "ack"
CHOKE = "choke"

FIFO = "fifo"
ROUND_ROBIN = "rr"
SERVICE_POLICIES = (FIFO, ROUND_ROBIN)

DROP_TAIL = "tail"
DROP_HEAD = "head"
DROP_RANDOM = "random"
DROP_POLICIES = (DROP_TAIL, DROP_HEAD, DROP_RANDOM)


@dataclass(eq=False)
class Packet:
    id: int
    conn: str
    seq: int
    size: float
    kind: str = DATA
    src: str = ""
    dst: str = ""
    congestion_bit: bool = False
    first_sent_at: float = math.nan
    sent_at: float = math.nan
    retransmission: bool = False
    echoed_bit: bool = False
    ack_no: int = 0
    # seq of the data packet that triggered an ack
    trigger: int = 0
    # node that generated a choke packet
    origin: str = ""

    def __repr__(self):
        return f"<{self.kind} {self.conn}#{self.seq} id={self.id}>"


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    bandwidth: float
    prop_delay: float = 0.0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not self.prop_delay >= 0:
            raise ValueError("prop_delay must be non-negative")


def transmission_time(p, link):
    """Serialization time of ``p`` on ``link``; propagation is added on hand-off."""
    return p.size / link.bandwidth


class PortQueue:
    """Waiting room of an output port.

    ``capacity`` is in packets (``math.inf`` for an unbounded buffer).  With
    round-robin service every connection gets its own class and the capacity
    applies to each class separately.
    """

    def __init__(self, capacity=math.inf, service=FIFO, drop=DROP_TAIL,
                 mark_threshold=1, choke_on_drop=False, rng=None):
        if service not in SERVICE_POLICIES:
            raise ValueError(f"unknown service policy {service!r}")
        if drop not in DROP_POLICIES:
            raise ValueError(f"unknown drop policy {drop!r}")
        if capacity is None:
            capacity = math.inf
        if capacity < 0:
            raise ValueError("buffer must be non-negative")
        if drop == DROP_RANDOM and rng is None:
            raise ValueError("random drop needs an RngStream")
        self.capacity = capacity
        self.service = service
        self.drop = drop
        self.mark_threshold = mark_threshold
        self.choke_on_drop = choke_on_drop
        self.rng = rng
        self._fifo = deque()
        self._classes = {}
        self._order = []
        self._last = -1
        self.occupancy = 0
        self.bits = 0.0
        self.per_conn = {}
        self.max_occupancy = 0
        self.drops = 0
        self.marks = 0

    def __len__(self):
        return self.occupancy

    def _class(self, conn):
        if self.service == FIFO:
            return self._fifo
        q = self._classes.get(conn)
        if q is None:
            q = self._classes[conn] = deque()
            self._order.append(conn)
        return q

    def _add(self, q, p):
        q.append(p)
        self.occupancy += 1
        self.bits += p.size
        self.per_conn[p.conn] = self.per_conn.get(p.conn, 0) + 1
        if self.occupancy > self.max_occupancy:
            self.max_occupancy = self.occupancy

    def _removed(self, p):
        self.occupancy -= 1
        self.bits -= p.size
        self.per_conn[p.conn] -= 1
        if self.occupancy == 0:
            self.bits = 0.0

    def mark_congestion(self, p):
        """Set the congestion bit if the queue already holds ``mark_threshold`` packets."""
        if self.mark_threshold is not None and len(self._class(p.conn)) >= self.mark_threshold:
            if not p.congestion_bit:
                self.marks += 1
            p.congestion_bit = True
        return p

    def enqueue(self, p):
        """Admit ``p``; return the dropped packet or ``None``.

        The victim is ``p`` itself (drop-tail, or when random picks it), the
        head of the full queue (drop-head), or a uniformly drawn queued packet.
        """
        q = self._class(p.conn)
        if len(q) < self.capacity:
            self._add(q, p)
            return None
        self.drops += 1
        if self.drop == DROP_TAIL or not q:
            return p
        if self.drop == DROP_HEAD:
            victim = q.popleft()
        else:
            k = self.rng.index(len(q) + 1)
            if k == len(q):
                return p
            victim = q[k]
            del q[k]
        self._removed(victim)
        self._add(q, p)
        return victim

    def service_next(self):
        """Next packet to transmit, or ``None`` if empty."""
        if not self.occupancy:
            return None
        if self.service == FIFO:
            p = self._fifo.popleft()
        else:
            n = len(self._order)
            for step in range(1, n + 1):
                i = (self._last + step) % n
                q = self._classes[self._order[i]]
                if q:
                    self._last = i
                    p = q.popleft()
                    break
        self._removed(p)
        return p

    def packets(self):
        if self.service == FIFO:
            return list(self._fifo)
        return [p for c in self._order for p in self._classes[c]]


class Port:
    """Output port: queue plus a single transmitter feeding one link."""

    def __init__(self, net, link, queue):
        self.net = net
        self.link = link
        self.queue = queue
        self.node = link.src
        self.name = f"{link.src}->{link.dst}"
        self.current = None
        self.forwarded_bits = {}
        self.forwarded_packets = 0
        self.propagating = {}

    def send(self, p):
        forwarded = p.src != self.node
        if forwarded and p.kind == DATA:
            self.queue.mark_congestion(p)
        if self.current is None and not self.queue.occupancy:
            self._start(p)
            return
        victim = self.queue.enqueue(p)
        if victim is not None:
            self.net.dropped(self.node, victim, self.queue.choke_on_drop and victim.src != self.node)

    def _start(self, p):
        self.current = p
        sim = self.net.sim
        if p.src == self.node and p.kind == DATA:
            self.net.on_wire(p)
        sim.schedule(sim.now + transmission_time(p, self.link), TRANSMISSION_COMPLETE,
                     self._complete, node=self.node, conn=p.conn, seq=p.seq)

    def _complete(self):
        p = self.current
        self.current = None
        if p.kind == DATA:
            self.forwarded_bits[p.conn] = self.forwarded_bits.get(p.conn, 0.0) + p.size
            self.forwarded_packets += 1
        sim = self.net.sim
        self.propagating[p.id] = p
        sim.schedule(sim.now + self.link.prop_delay, PACKET_ARRIVAL, self._arrive, p,
                     node=self.link.dst, conn=p.conn, seq=p.seq)
        nxt = self.queue.service_next()
        if nxt is not None:
            self._start(nxt)

    def _arrive(self, p):
        del self.propagating[p.id]
        self.net.arrive(self.link.dst, p)

    def in_flight(self):
        """Packets held by this port: waiting, serializing, or propagating."""
        held = self.queue.packets()
        if self.current is not None:
            held.append(self.current)
        held.extend(self.propagating.values())
        return held


class Network:
    """Topology, routing and packet accounting for one simulation."""

    def __init__(self, sim, ack_size=320.0, choke_size=320.0):
        self.sim = sim
        self.ack_size = ack_size
        self.choke_size = choke_size
        self.graph = nx.Graph()
        self.ports = {}
        self.next_hop = {}
        self._endpoints = {}
        self._wire_hooks = {}
        self._ids = 0
        # (conn, kind) -> count
        self.injected = {}
        self.delivered = {}
        self.dropped_count = {}

    def add_node(self, name):
        self.graph.add_node(name)

    def add_link(self, link, queue):
        if link.src not in self.graph or link.dst not in self.graph:
            raise ValueError(f"link {link.src}-{link.dst} references an undeclared node")
        self.graph.add_edge(link.src, link.dst)
        port = Port(self, link, queue)
        self.ports[(link.src, link.dst)] = port
        return port

    def build_routes(self):
        """Fewest-hop static routes for every ordered node pair."""
        self.next_hop = {}
        for src, paths in nx.all_pairs_shortest_path(self.graph):
            self.next_hop[src] = {dst: path[1] for dst, path in paths.items() if len(path) > 1}

    def route(self, src, dst):
        path = [src]
        while path[-1] != dst:
            nxt = self.next_hop.get(path[-1], {}).get(dst)
            if nxt is None:
                return None
            path.append(nxt)
        return path

    def attach(self, node, conn, handler, on_wire=None):
        """Register ``handler(packet)`` for packets of ``conn`` arriving at ``node``."""
        self._endpoints[(node, conn)] = handler
        if on_wire is not None:
            self._wire_hooks[(node, conn)] = on_wire

    def new_packet(self, **fields):
        self._ids += 1
        return Packet(id=self._ids, **fields)

    def _count(self, table, p):
        key = (p.conn, p.kind)
        table[key] = table.get(key, 0) + 1

    def inject(self, node, p):
        """Hand a packet created at ``node`` to its first output port."""
        self._count(self.injected, p)
        self.sim.log("inject", node, p.conn, p.seq, p.kind)
        if node == p.dst:
            self.arrive(node, p)
            return
        self.ports[(node, self.next_hop[node][p.dst])].send(p)

    def on_wire(self, p):
        hook = self._wire_hooks.get((p.src, p.conn))
        if hook is not None:
            hook(p)

    def arrive(self, node, p):
        if node == p.dst:
            self._count(self.delivered, p)
            self.sim.log("deliver", node, p.conn, p.seq, p.kind)
            handler = self._endpoints.get((node, p.conn))
            if handler is not None:
                handler(p)
            return
        self.ports[(node, self.next_hop[node][p.dst])].send(p)

    def dropped(self, node, victim, choke):
        self._count(self.dropped_count, victim)
        self.sim.log("drop", node, victim.conn, victim.seq, victim.kind)
        if choke and victim.kind == DATA:
            self.emit_choke(node, victim)

    def emit_choke(self, node, victim):
        """Send a choke packet from ``node`` back to the source of ``victim``."""
        choke = self.new_packet(conn=victim.conn, seq=victim.seq, size=self.choke_size, kind=CHOKE,
                                src=node, dst=victim.src, origin=node)
        self.sim.log("choke", node, victim.conn, victim.seq, victim.src)
        self.inject(node, choke)
        return choke

    def in_flight(self):
        """(conn, kind) -> packets currently inside the network, by direct scan."""
        counts = {}
        for port in self.ports.values():
            for p in port.in_flight():
                self._count(counts, p)
        return counts
