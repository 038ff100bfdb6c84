import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from congestion_lab.engine import Simulator
from congestion_lab.net import ACK, Link, Network, PortQueue
from congestion_lab.schemes import Controller, make_controller
from congestion_lab.transport import (Receiver, RttEstimator, Sender, TokenBucket, rtt_update)


def test_first_sample():
    est = rtt_update(RttEstimator(), 0.100)
    assert est.srtt == pytest.approx(0.100)
    assert est.rttvar == pytest.approx(0.050)
    assert est.rto() == pytest.approx(0.300)


def test_smoothed_update():
    est = RttEstimator()
    est.srtt, est.rttvar = 0.100, 0.020
    rtt_update(est, 0.100)
    assert est.rttvar == pytest.approx(0.015)
    assert est.srtt == pytest.approx(0.100)
    assert est.rto() == pytest.approx(0.160)


@pytest.mark.parametrize("bad", [0.0, -0.1])
def test_non_positive_sample_rejected(bad):
    with pytest.raises(ValueError):
        RttEstimator().update(bad)


def test_initial_rto_before_any_sample():
    assert RttEstimator(initial_rto=2.5).rto() == 2.5


def test_backoff_doubles_up_to_cap_and_resets_on_sample():
    est = RttEstimator(initial_rto=1.0)
    seen = []
    for _ in range(10):
        est.back_off()
        seen.append(est.rto())
    assert seen[:6] == [2, 4, 8, 16, 32, 64]
    assert max(seen) == 64
    assert all(b >= a for a, b in zip(seen, seen[1:]))
    est.update(0.1)
    assert est.rto() == pytest.approx(0.3)


def test_fixed_timer_never_backs_off():
    est = RttEstimator(initial_rto=0.3, fixed=True)
    est.back_off()
    est.update(1.0)
    assert est.rto() == 0.3
    assert est.srtt == 1.0


@given(st.lists(st.floats(min_value=1e-4, max_value=10.0), min_size=1, max_size=50))
def test_rto_never_below_srtt(samples):
    est = RttEstimator()
    for s in samples:
        est.update(s)
        assert est.rttvar >= 0
        assert est.rto() >= est.srtt


def test_token_bucket():
    tb = TokenBucket(1e6, 8000)
    assert tb.admit(8000, 0.0) is None
    assert tb.tokens == 0
    assert tb.admit(8000, 0.0) == pytest.approx(0.008)
    assert tb.admit(8000, 0.008) is None


def test_token_bucket_rejects_oversize_packet():
    with pytest.raises(ValueError):
        TokenBucket(1e6, 8000).admit(16000, 0.0)


@settings(max_examples=30)
@given(st.lists(st.floats(min_value=0, max_value=0.05), min_size=1, max_size=50))
def test_token_bucket_never_exceeds_rate(gaps):
    tb = TokenBucket(1e6, 16000)
    now, sent = 0.0, 0.0
    for g in gaps:
        now += g
        at = tb.admit(8000, now)
        if at is None:
            sent += 8000
        else:
            assert at > now
    assert sent <= 16000 + 1e6 * now + 1e-6


# ---------------------------------------------------------------- sender


class Spy(Controller):
    scheme = "spy"

    def __init__(self, window):
        super().__init__(window, window)
        self.calls = []

    def _acked(self, acked, echoed_bit, srtt, rtt_min):
        self.calls.append(("ack", acked, echoed_bit))

    def _timeout(self):
        self.calls.append(("timeout",))


def pair(controller, retx="gbn", backlog=0, bandwidth=1e3, capacity=math.inf):
    """Sender at A, nothing attached at B: packets just sit in a slow link."""
    sim = Simulator()
    net = Network(sim)
    net.add_node("A")
    net.add_node("B")
    net.add_link(Link("A", "B", bandwidth, 0.0), PortQueue(capacity))
    net.add_link(Link("B", "A", bandwidth, 0.0), PortQueue())
    net.build_routes()
    s = Sender(sim, net, "c1", "A", "B", controller, RttEstimator(), retx=retx, backlog=backlog)
    return sim, net, s


def ack(net, n, trigger=None, bit=False):
    return net.new_packet(conn="c1", seq=n, size=320.0, kind=ACK, src="B", dst="A", ack_no=n,
                          trigger=n if trigger is None else trigger, echoed_bit=bit)


def test_window_limits_outstanding():
    sim, net, s = pair(Spy(4), backlog=10)
    s.start()
    assert sorted(s.outstanding) == [1, 2, 3, 4]


def test_ack_clears_and_permits():
    sim, net, s = pair(Spy(4), backlog=4)
    s.start()
    assert s.on_ack(ack(net, 2)) == 2
    assert sorted(s.outstanding) == [3, 4]


def test_duplicate_ack_permits_nothing():
    sim, net, s = pair(Spy(4), backlog=4)
    s.start()
    s.on_ack(ack(net, 2))
    assert s.on_ack(ack(net, 2)) == 0
    assert s.dup_acks == 1


def test_controller_sees_echoed_bit():
    ctl = Spy(4)
    sim, net, s = pair(ctl, backlog=4)
    s.start()
    s.on_ack(ack(net, 1, bit=True))
    assert ctl.calls == [("ack", 1, True)]


@pytest.mark.parametrize("retx,expected", [("gbn", [5, 6, 7]), ("first", [5])])
def test_timeout_resend_set(retx, expected):
    ctl = Spy(7)
    sim, net, s = pair(ctl, retx=retx, backlog=7)
    s.start()
    s.on_ack(ack(net, 4))
    assert s.on_timeout(5) == expected
    assert ctl.calls[-1] == ("timeout",)
    assert s.retransmissions == len(expected)


def test_stale_timeout_is_ignored():
    ctl = Spy(7)
    sim, net, s = pair(ctl, backlog=7)
    s.start()
    s.on_ack(ack(net, 6))
    assert s.on_timeout(4) == []
    assert ("timeout",) not in ctl.calls


def test_karn_no_sample_from_retransmitted_packet():
    sim, net, s = pair(Spy(2), retx="first", backlog=2, bandwidth=1e6)
    s.start()
    sim.run_until(0.5)
    s.on_timeout(1)
    sim.run_until(1.0)
    s.on_ack(ack(net, 1))
    assert s.est.samples == 0
    s.on_ack(ack(net, 2))
    assert s.est.samples == 1


def test_backoff_persists_until_valid_sample():
    sim, net, s = pair(Spy(2), retx="first", backlog=2, bandwidth=1e6)
    s.start()
    base = s.est.rto()
    s.on_timeout(1)
    assert s.est.rto() == 2 * base
    s.on_ack(ack(net, 1))
    assert s.est.rto() == 2 * base


def test_timer_fires_without_acks():
    sim, net, s = pair(make_controller("cute", window=1), retx="gbn", backlog=1, bandwidth=1e6)
    s.start()
    sim.run_until(3.5)
    # first copy on the wire at t=0, timer due at the initial RTO of 3 s
    assert s.retransmissions == 1
    assert s.controller.timeouts == 1


def test_rate_mode_spacing():
    sim = Simulator()
    net = Network(sim)
    for n in "AB":
        net.add_node(n)
    net.add_link(Link("A", "B", 1e9, 0.0), PortQueue())
    net.add_link(Link("B", "A", 1e9, 0.0), PortQueue())
    net.build_routes()
    times = []
    net.attach("B", "c1", lambda p: times.append(sim.now))
    s = Sender(sim, net, "c1", "A", "B", make_controller("none"), RttEstimator(), mode="rate",
               bucket=TokenBucket(1e6, 8000), backlog=5)
    s.start()
    sim.run_until(1.0)
    gaps = [b - a for a, b in zip(times, times[1:])]
    assert gaps == pytest.approx([0.008] * 4)


# -------------------------------------------------------------- receiver


def receiver(caching=True, ack_every=1):
    sim = Simulator()
    net = Network(sim)
    for n in "AB":
        net.add_node(n)
    net.add_link(Link("A", "B", 1e6), PortQueue())
    net.add_link(Link("B", "A", 1e6), PortQueue())
    net.build_routes()
    return net, Receiver(sim, net, "c1", "B", "A", caching=caching, ack_every=ack_every)


def data(net, seq, bit=False):
    return net.new_packet(conn="c1", seq=seq, size=8000.0, src="A", dst="B", first_sent_at=0.0,
                          congestion_bit=bit)


def acks(net, r, seqs):
    out = []
    for s in seqs:
        a = r.deliver(data(net, s))
        out.append(None if a is None else a.ack_no)
    return out


def test_in_order_acks_each_packet():
    net, r = receiver()
    assert acks(net, r, [1, 2, 3]) == [1, 2, 3]


def test_cache_mode_reorder():
    net, r = receiver()
    r.cum = 6
    assert acks(net, r, [7, 9, 8]) == [7, 7, 9]


def test_discard_mode_reorder():
    net, r = receiver(caching=False)
    r.cum = 6
    assert acks(net, r, [7, 9, 8]) == [7, 7, 8]
    assert r.discarded == 1


def test_duplicate_data_is_reacked():
    net, r = receiver()
    assert acks(net, r, [1, 1]) == [1, 1]
    assert r.duplicates == 1


def test_delayed_ack_every_second_packet():
    net, r = receiver(ack_every=2)
    assert acks(net, r, [1, 2, 3, 4, 6]) == [None, 2, None, 4, 4]


def test_ack_echoes_or_of_bits_since_last_ack():
    net, r = receiver(ack_every=2)
    assert r.deliver(data(net, 1, bit=True)) is None
    a = r.deliver(data(net, 2, bit=False))
    assert a.echoed_bit
    r.deliver(data(net, 3))
    assert not r.deliver(data(net, 4)).echoed_bit


@settings(max_examples=40)
@given(st.permutations(list(range(1, 13))))
def test_cumulative_ack_is_in_order_prefix(order):
    net, r = receiver()
    got = set()
    for s in order:
        r.deliver(data(net, s))
        got.add(s)
        prefix = 0
        while prefix + 1 in got:
            prefix += 1
        assert r.cum == prefix
