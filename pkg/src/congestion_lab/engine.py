"""
Deterministic discrete-event core.

A :class:`Simulator` owns a virtual clock and a heap of pending events keyed
by ``(fire_time, seq)`` where ``seq`` is a global insertion counter.  Events
at the same virtual time therefore fire in the order they were scheduled.

Randomness comes from :class:`RngStream`: numpy's PCG64 generator seeded
through a ``SeedSequence`` whose spawn key is derived from a stream label.
Each stochastic entity (a Poisson source, a random-drop queue) owns its own
stream, so adding an entity never shifts the draws seen by the others.
"""

import heapq
import math

import numpy as np

PACKET_ARRIVAL = "packet-arrival"
TRANSMISSION_COMPLETE = "transmission-complete"
TIMER_EXPIRY = "timer-expiry"
SOURCE_WAKEUP = "source-wakeup"
SAMPLE = "sample"

EVENT_KINDS = (PACKET_ARRIVAL, TRANSMISSION_COMPLETE, TIMER_EXPIRY, SOURCE_WAKEUP, SAMPLE)


class SchedulingError(ValueError):
    """Raised when an event is scheduled before the current clock."""


class EventBudgetExceeded(RuntimeError):
    """Raised when a run processes more events than its configured budget."""


class Event:
    __slots__ = ("fire_time", "seq", "kind", "handler", "args", "node", "conn", "pseq", "cancelled")

    def __init__(self, fire_time, seq, kind, handler, args, node, conn, pseq):
        self.fire_time = fire_time
        self.seq = seq
        self.kind = kind
        self.handler = handler
        self.args = args
        self.node = node
        self.conn = conn
        self.pseq = pseq
        self.cancelled = False

    def cancel(self):
        self.cancelled = True

    def __lt__(self, other):
        return (self.fire_time, self.seq) < (other.fire_time, other.seq)

    def __repr__(self):
        return f"Event({self.fire_time!r}, #{self.seq}, {self.kind})"


def format_trace_line(time, kind, node="-", conn="-", seq="-", detail="-"):
    """One trace record: ``time<TAB>kind<TAB>node<TAB>conn<TAB>seq<TAB>detail``."""
    return f"{time:.9f}\t{kind}\t{node}\t{conn}\t{seq}\t{detail}"


class Simulator:
    """Virtual clock plus event queue.

    ``trace`` may be a list; when given, every processed event (and every
    record passed to :meth:`log`) is appended to it as a formatted line.
    ``max_events`` bounds the total number of processed events.
    """

    def __init__(self, trace=None, max_events=None):
        self.now = 0.0
        self._heap = []
        self._counter = 0
        self._stopped = False
        self.trace = trace
        self.max_events = max_events
        self.processed = 0

    def schedule(self, at, kind, handler, *args, node="-", conn="-", seq="-"):
        """Schedule ``handler(*args)`` at virtual time ``at`` and return the event handle."""
        if at < self.now or math.isnan(at):
            raise SchedulingError(f"cannot schedule {kind} at t={at!r} before clock t={self.now!r}")
        ev = Event(at, self._counter, kind, handler, args, node, conn, seq)
        self._counter += 1
        heapq.heappush(self._heap, ev)
        return ev

    def schedule_in(self, delay, kind, handler, *args, **kw):
        return self.schedule(self.now + delay, kind, handler, *args, **kw)

    def log(self, kind, node="-", conn="-", seq="-", detail="-"):
        if self.trace is not None:
            self.trace.append(format_trace_line(self.now, kind, node, conn, seq, detail))

    def stop(self):
        """Ask the running loop to return after the current event."""
        self._stopped = True

    @property
    def pending(self):
        return sum(1 for ev in self._heap if not ev.cancelled)

    def peek_time(self):
        while self._heap and self._heap[0].cancelled:
            heapq.heappop(self._heap)
        return self._heap[0].fire_time if self._heap else math.inf

    def run_until(self, t_end):
        """Process every event with ``fire_time <= t_end``; return how many ran.

        The clock is left at ``t_end`` unless :meth:`stop` was called, in
        which case it stays at the time of the last processed event.
        """
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end!r}) is before clock t={self.now!r}")
        heap = self._heap
        trace = self.trace
        count = 0
        self._stopped = False
        while heap:
            ev = heap[0]
            if ev.fire_time > t_end:
                break
            heapq.heappop(heap)
            if ev.cancelled:
                continue
            self.now = ev.fire_time
            count += 1
            self.processed += 1
            if self.max_events is not None and self.processed > self.max_events:
                raise EventBudgetExceeded(f"event budget of {self.max_events} exceeded at t={self.now:.9f}")
            if trace is not None and ev.kind != SAMPLE:
                trace.append(format_trace_line(ev.fire_time, ev.kind, ev.node, ev.conn, ev.pseq))
            ev.handler(*ev.args)
            if self._stopped:
                return count
        if not math.isinf(t_end):
            self.now = t_end
        return count


class RngStream:
    """Reproducible uniform stream identified by ``(seed, stream_id)``.

    ``stream_id`` is an int or a string label; strings are turned into a
    spawn key byte by byte, so distinct labels never collide.  Values are
    drawn from PCG64 in blocks, which keeps the per-draw cost low without
    changing the sequence.
    """

    _BLOCK = 1024

    def __init__(self, seed, stream_id):
        if isinstance(stream_id, str):
            key = tuple(stream_id.encode("utf-8"))
        else:
            key = (int(stream_id),)
        self.seed = int(seed)
        self.stream_id = stream_id
        ss = np.random.SeedSequence(entropy=self.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=key)
        self._gen = np.random.Generator(np.random.PCG64(ss))
        self._buf = self._gen.random(self._BLOCK)
        self._pos = 0

    def uniform(self):
        """Next value in [0, 1)."""
        if self._pos == self._BLOCK:
            self._buf = self._gen.random(self._BLOCK)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def exponential(self, mean):
        return -mean * math.log(1.0 - self.uniform())

    def index(self, n):
        """Uniform integer in ``range(n)``."""
        return min(int(self.uniform() * n), n - 1)
