"""
End-to-end transport: window and rate based senders, cumulative-ack receivers.

A sender keeps one retransmission timer, aimed at the lowest outstanding
sequence number and due ``rto`` after that packet last went on the wire.
Sequence numbers start at 1; an ack carries the highest in-order sequence
number the receiver holds (0 before anything arrived).
"""

import math
from collections import deque

from .engine import SOURCE_WAKEUP, TIMER_EXPIRY
from .net import ACK, DATA

GO_BACK_N = "gbn"
RETRANSMIT_FIRST = "first"
RETX_POLICIES = (GO_BACK_N, RETRANSMIT_FIRST)

WINDOW_MODE = "window"
RATE_MODE = "rate"
OPEN_MODE = "open"
MODES = (WINDOW_MODE, RATE_MODE, OPEN_MODE)


class RttEstimator:
    """Smoothed mean/deviation RTT estimator with exponential timer backoff.

    With ``fixed=True`` the timeout is always ``initial_rto`` and never backs
    off; samples are still absorbed so srtt and the minimum RTT stay
    observable.
    """

    def __init__(self, initial_rto=3.0, alpha=0.125, beta=0.25, k=4.0,
                 backoff_cap=64.0, fixed=False):
        if not initial_rto > 0:
            raise ValueError("initial RTO must be positive")
        self.initial_rto = initial_rto
        self.alpha = alpha
        self.beta = beta
        self.k = k
        self.max_rto = backoff_cap * initial_rto
        self.fixed = fixed
        self.srtt = None
        self.rttvar = None
        self.rtt_min = None
        self.backoff = 1.0
        self.samples = 0

    @property
    def initialized(self):
        return self.srtt is not None

    def update(self, sample):
        if not sample > 0:
            raise ValueError(f"RTT sample must be positive, got {sample!r}")
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample / 2
        else:
            self.rttvar = (1 - self.beta) * self.rttvar + self.beta * abs(self.srtt - sample)
            self.srtt = (1 - self.alpha) * self.srtt + self.alpha * sample
        if self.rtt_min is None or sample < self.rtt_min:
            self.rtt_min = sample
        self.samples += 1
        self.backoff = 1.0
        return self

    def base_rto(self):
        if self.fixed or self.srtt is None:
            return self.initial_rto
        return self.srtt + self.k * self.rttvar

    def rto(self):
        base = self.base_rto()
        if self.backoff == 1.0:
            return base
        return min(base * self.backoff, max(base, self.max_rto))

    def back_off(self):
        if not self.fixed and self.base_rto() * self.backoff < self.max_rto:
            self.backoff *= 2


def rtt_update(est, sample):
    return est.update(sample)


class TokenBucket:
    """``rate`` bits/s refill, ``burst`` bits depth, starts full."""

    def __init__(self, rate, burst, now=0.0):
        if not rate > 0:
            raise ValueError("rate_limit must be positive")
        if not burst > 0:
            raise ValueError("burst must be positive")
        self.rate = rate
        self.burst = burst
        self.tokens = burst
        self.stamp = now

    def _refill(self, now):
        if now > self.stamp:
            self.tokens = min(self.burst, self.tokens + (now - self.stamp) * self.rate)
            self.stamp = now

    def admit(self, size, now):
        """Consume tokens and return ``None``, or return the earliest admissible time."""
        if size > self.burst:
            raise ValueError(f"packet of {size:g} bits exceeds burst of {self.burst:g} bits")
        self._refill(now)
        # refill arithmetic can land a hair short of a whole packet
        if self.tokens >= size * (1 - 1e-9):
            self.tokens = max(0.0, self.tokens - size)
            return None
        return max(now + (size - self.tokens) / self.rate, math.nextafter(now, math.inf))


class _Record:
    __slots__ = ("size", "first_sent_at", "sent_at", "retransmitted", "sampled")

    def __init__(self, size, first_sent_at):
        self.size = size
        self.first_sent_at = first_sent_at
        self.sent_at = None
        self.retransmitted = False
        self.sampled = False


class Sender:
    """Source side of one connection.

    ``backlog`` is the number of new packets ready to go: ``math.inf`` for a
    greedy source, a finite count for a file, or grown by :meth:`offer` for a
    stream.  ``sizes`` optionally yields the size of each new packet.
    """

    def __init__(self, sim, net, conn, src, dst, controller, estimator, size=8000.0,
                 retx=GO_BACK_N, mode=WINDOW_MODE, bucket=None, backlog=0, sizes=None):
        if retx not in RETX_POLICIES:
            raise ValueError(f"unknown retransmission policy {retx!r}")
        if mode not in MODES:
            raise ValueError(f"unknown transport mode {mode!r}")
        if mode == RATE_MODE:
            if bucket is None:
                raise ValueError("rate mode needs a token bucket")
            if size > bucket.burst:
                raise ValueError(f"packet of {size:g} bits exceeds burst of {bucket.burst:g} bits")
        self.sim = sim
        self.net = net
        self.conn = conn
        self.src = src
        self.dst = dst
        self.controller = controller
        self.est = estimator
        self.size = size
        self.retx = retx
        self.mode = mode
        self.bucket = bucket
        self.backlog = backlog
        self._sizes = sizes
        self._pending_sizes = deque()
        self.next_seq = 1
        self.highest_acked = 0
        self.outstanding = {}
        self._resend = deque()
        self._resend_set = set()
        # retransmit-first: sent before the last timeout, not counted against the window
        self._presumed_lost = set()
        self._timer = None
        self._wakeup = None
        self.total = None
        self.completed_at = None
        self.on_complete = None
        self.packets_sent = 0
        self.retransmissions = 0
        self.dup_acks = 0
        self.chokes = 0
        net.attach(src, conn, self.receive, on_wire=self.on_wire)

    # ------------------------------------------------------------------ input

    def offer(self, n=1, size=None):
        """``n`` more new packets become available."""
        if size is not None:
            self._pending_sizes.append(size)
        self.backlog += n
        self.pump()

    def start(self):
        self.sim.log("conn-start", self.src, self.conn, "-", f"window={self.controller.window:.6f}")
        self.pump()

    def receive(self, p):
        if p.kind == ACK:
            self.on_ack(p)
        else:
            self.on_choke(p)

    # ----------------------------------------------------------------- output

    def _can_send_new(self):
        if not self.backlog:
            return False
        if self.mode == OPEN_MODE:
            return True
        return len(self.outstanding) - len(self._presumed_lost) < self.controller.limit

    def _peek_size(self):
        if not self._pending_sizes:
            self._pending_sizes.append(self._sizes() if self._sizes is not None else self.size)
        return self._pending_sizes[0]

    def pump(self):
        """Send whatever retransmissions and new packets the window and bucket allow."""
        if self._wakeup is not None:
            return
        while True:
            while self._resend and self._resend[0] not in self.outstanding:
                self._resend_set.discard(self._resend.popleft())
            if self._resend:
                seq = self._resend[0]
                size = self.outstanding[seq].size
                retx = True
            elif self._can_send_new():
                seq = self.next_seq
                size = self._peek_size()
                retx = False
            else:
                return
            if self.bucket is not None:
                at = self.bucket.admit(size, self.sim.now)
                if at is not None:
                    self._wakeup = self.sim.schedule(at, SOURCE_WAKEUP, self._wake,
                                                     node=self.src, conn=self.conn)
                    return
            if retx:
                self._resend.popleft()
                self._resend_set.discard(seq)
                self._transmit(seq, self.outstanding[seq], True)
            else:
                self._pending_sizes.popleft()
                self.backlog -= 1
                self.next_seq += 1
                rec = _Record(size, self.sim.now)
                if self.mode != OPEN_MODE:
                    self.outstanding[seq] = rec
                self._transmit(seq, rec, False)

    def _wake(self):
        self._wakeup = None
        self.pump()

    def _transmit(self, seq, rec, retx):
        p = self.net.new_packet(conn=self.conn, seq=seq, size=rec.size, kind=DATA, src=self.src,
                                dst=self.dst, first_sent_at=rec.first_sent_at, retransmission=retx)
        self.packets_sent += 1
        if retx:
            self.retransmissions += 1
            rec.retransmitted = True
            rec.sent_at = None
            self._presumed_lost.discard(seq)
        self.net.inject(self.src, p)

    def on_wire(self, p):
        """The interface started serializing ``p``; the timer clock starts now."""
        p.sent_at = self.sim.now
        rec = self.outstanding.get(p.seq)
        if rec is None:
            return
        rec.sent_at = self.sim.now
        if self._timer is None and p.seq == self._lowest():
            self._arm_timer()

    # ----------------------------------------------------------------- timers

    def _lowest(self):
        return next(iter(self.outstanding), None)

    def _arm_timer(self):
        if self._timer is not None:
            self._timer.cancel()
            self._timer = None
        low = self._lowest()
        if low is None:
            return
        rec = self.outstanding[low]
        if rec.sent_at is None:
            return
        at = max(self.sim.now, rec.sent_at + self.est.rto())
        self._timer = self.sim.schedule(at, TIMER_EXPIRY, self._expire, low,
                                        node=self.src, conn=self.conn, seq=low)

    def _expire(self, seq):
        self._timer = None
        self.on_timeout(seq)

    def on_timeout(self, seq):
        """Handle expiry of the timer guarding ``seq``; return the seqs queued for resend."""
        if seq <= self.highest_acked or seq not in self.outstanding:
            return []
        if self.retx == GO_BACK_N:
            chosen = [s for s in self.outstanding if s >= seq]
        else:
            chosen = [seq]
            self._presumed_lost.update(self.outstanding)
        queued = [s for s in chosen if s not in self._resend_set]
        for s in queued:
            self._resend_set.add(s)
            self.outstanding[s].sent_at = None
        # resend lowest first, ahead of anything already pending
        self._resend = deque(sorted(set(self._resend) | set(queued)))
        before = self.controller.adjustments
        self.controller.on_timeout()
        self.sim.log("timeout", self.src, self.conn, seq, f"resend={len(queued)}")
        self._log_adjust(before)
        self.est.back_off()
        self.pump()
        self._arm_timer()
        return chosen

    # ------------------------------------------------------------- feedback

    def _log_adjust(self, before):
        if self.controller.adjustments != before:
            self.sim.log("adjust", self.src, self.conn, self.controller.adjustments - before,
                         f"window={self.controller.window:.6f}")

    def _sample(self, trigger):
        """Karn: sample only packets sent exactly once, and each at most once."""
        rec = self.outstanding.get(trigger)
        if rec is None or rec.retransmitted or rec.sampled or rec.sent_at is None:
            return
        rec.sampled = True
        rtt = self.sim.now - rec.sent_at
        if rtt <= 0:
            return
        self.est.update(rtt)
        self.sim.log("rtt-sample", self.src, self.conn, trigger, f"{rtt:.9f}")

    def on_ack(self, ack):
        """Process a cumulative ack; return how many new sends the window now permits."""
        n = ack.ack_no
        # a duplicate ack still times the out-of-order packet that triggered it
        self._sample(ack.trigger)
        if n > self.highest_acked:
            acked = n - self.highest_acked
            for s in range(self.highest_acked + 1, n + 1):
                self.outstanding.pop(s, None)
                self._presumed_lost.discard(s)
            self.highest_acked = n
            before = self.controller.adjustments
            self.controller.on_ack(acked, ack.echoed_bit, self.est.srtt, self.est.rtt_min)
            self.sim.log("ack-rx", self.src, self.conn, n, f"acked={acked} bit={int(ack.echoed_bit)}")
            self._log_adjust(before)
            self._arm_timer()
            if self.total is not None and self.completed_at is None and n >= self.total:
                self.completed_at = self.sim.now
                if self.on_complete is not None:
                    self.on_complete(self)
            permits = self.controller.limit - (len(self.outstanding) - len(self._presumed_lost))
            permits = max(0, permits) if not math.isinf(permits) else math.inf
        else:
            self.dup_acks += 1
            permits = 0
        self.pump()
        return permits

    def on_choke(self, p):
        self.chokes += 1
        before = self.controller.adjustments
        applied = self.controller.on_choke()
        self.sim.log("choke-rx", self.src, self.conn, p.seq, "applied" if applied else "ignored")
        self._log_adjust(before)


class Receiver:
    """Destination side of one connection.

    ``caching`` keeps out-of-order packets; otherwise they are discarded.
    An ack goes out after every ``ack_every`` in-order arrivals and at once
    on any out-of-order or duplicate arrival.  It echoes the OR of the
    congestion bits seen since the previous ack.  With ``acks=False`` the
    receiver is a pure sink (open-loop traffic).
    """

    def __init__(self, sim, net, conn, node, peer, caching=True, ack_every=1, acks=True):
        if ack_every < 1:
            raise ValueError("ack_every must be >= 1")
        self.sim = sim
        self.net = net
        self.conn = conn
        self.node = node
        self.peer = peer
        self.caching = caching
        self.ack_every = int(ack_every)
        self.acks = acks
        self.cum = 0
        self.buffered = set()
        self._since_ack = 0
        self._echo = False
        # per unique delivery: time, delay, bits
        self.unique_times = []
        self.unique_delays = []
        self.unique_bits = []
        # every data arrival: time, bits
        self.arrival_times = []
        self.arrival_bits = []
        self.discarded = 0
        self.duplicates = 0
        net.attach(node, conn, self.deliver)

    def _accept(self, p):
        self.unique_times.append(self.sim.now)
        self.unique_delays.append(self.sim.now - p.first_sent_at)
        self.unique_bits.append(p.size)

    def deliver(self, p):
        """Take a data packet; return the ack sent in response, if any."""
        if p.kind != DATA:
            return None
        self.arrival_times.append(self.sim.now)
        self.arrival_bits.append(p.size)
        if not self.acks:
            self._accept(p)
            return None
        self._echo = self._echo or p.congestion_bit
        seq = p.seq
        if seq <= self.cum or seq in self.buffered:
            self.duplicates += 1
            return self._ack(p)
        if seq == self.cum + 1:
            self._accept(p)
            self.cum = seq
            while self.cum + 1 in self.buffered:
                self.buffered.discard(self.cum + 1)
                self.cum += 1
            self._since_ack += 1
            if self._since_ack >= self.ack_every:
                return self._ack(p)
            return None
        if self.caching:
            self._accept(p)
            self.buffered.add(seq)
        else:
            self.discarded += 1
        return self._ack(p)

    def _ack(self, p):
        ack = self.net.new_packet(conn=self.conn, seq=self.cum, size=self.net.ack_size, kind=ACK,
                                  src=self.node, dst=self.peer, ack_no=self.cum,
                                  echoed_bit=self._echo, trigger=p.seq)
        self._since_ack = 0
        self._echo = False
        self.net.inject(self.node, ack)
        return ack
