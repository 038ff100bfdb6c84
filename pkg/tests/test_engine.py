import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from congestion_lab.engine import (SOURCE_WAKEUP, TIMER_EXPIRY, EventBudgetExceeded, RngStream,
                                   SchedulingError, Simulator, format_trace_line)


def test_events_fire_in_time_order():
    sim = Simulator()
    seen = []
    for t in (3.0, 1.0, 2.0):
        sim.schedule(t, SOURCE_WAKEUP, seen.append, t)
    sim.run_until(10.0)
    assert seen == [1.0, 2.0, 3.0]


def test_ties_fire_in_insertion_order():
    sim = Simulator()
    seen = []
    for tag in "abcde":
        sim.schedule(1.0, SOURCE_WAKEUP, seen.append, tag)
    sim.run_until(1.0)
    assert seen == list("abcde")


@given(st.lists(st.integers(min_value=0, max_value=20), min_size=1, max_size=60))
def test_processing_order_is_sorted_by_time_then_insertion(times):
    sim = Simulator()
    seen = []
    for i, t in enumerate(times):
        sim.schedule(float(t), SOURCE_WAKEUP, seen.append, (float(t), i))
    sim.run_until(math.inf)
    assert seen == sorted(seen)


def test_scheduling_in_the_past_is_rejected():
    sim = Simulator()
    sim.schedule(1.0, SOURCE_WAKEUP, lambda: None)
    sim.run_until(1.0)
    with pytest.raises(SchedulingError):
        sim.schedule(0.5, SOURCE_WAKEUP, lambda: None)


def test_handlers_can_schedule_at_the_current_time():
    sim = Simulator()
    seen = []

    def first():
        seen.append("first")
        sim.schedule(sim.now, SOURCE_WAKEUP, seen.append, "same-time")

    sim.schedule(1.0, SOURCE_WAKEUP, first)
    sim.run_until(1.0)
    assert seen == ["first", "same-time"]


def test_cancelled_events_do_not_fire():
    sim = Simulator()
    seen = []
    ev = sim.schedule(1.0, TIMER_EXPIRY, seen.append, "timer")
    sim.schedule(2.0, SOURCE_WAKEUP, seen.append, "source")
    ev.cancel()
    assert sim.run_until(5.0) == 1
    assert seen == ["source"]


def test_run_until_stops_at_horizon_and_resumes():
    sim = Simulator()
    seen = []
    sim.schedule(1.0, SOURCE_WAKEUP, seen.append, 1)
    sim.schedule(4.0, SOURCE_WAKEUP, seen.append, 4)
    sim.run_until(2.0)
    assert seen == [1] and sim.now == 2.0
    sim.run_until(5.0)
    assert seen == [1, 4]


def test_stop_leaves_clock_at_last_event():
    sim = Simulator()
    sim.schedule(1.5, SOURCE_WAKEUP, sim.stop)
    sim.schedule(3.0, SOURCE_WAKEUP, lambda: None)
    sim.run_until(10.0)
    assert sim.now == 1.5
    assert sim.peek_time() == 3.0


def test_event_budget():
    sim = Simulator(max_events=3)

    def again():
        sim.schedule_in(1.0, SOURCE_WAKEUP, again)

    sim.schedule(0.0, SOURCE_WAKEUP, again)
    with pytest.raises(EventBudgetExceeded):
        sim.run_until(100.0)


def test_trace_records_processed_events():
    trace = []
    sim = Simulator(trace=trace)
    sim.schedule(0.25, SOURCE_WAKEUP, lambda: None, node="A", conn="c1", seq=3)
    sim.run_until(1.0)
    assert trace == ["0.250000000\tsource-wakeup\tA\tc1\t3\t-"]
    assert format_trace_line(1.0, "drop", "R", "c2", 9, "data") == "1.000000000\tdrop\tR\tc2\t9\tdata"


def test_rng_streams_are_reproducible_and_independent():
    a = [RngStream(7, "source:c1").uniform() for _ in range(1)]
    s1, s2 = RngStream(7, "source:c1"), RngStream(7, "source:c1")
    xs = [s1.uniform() for _ in range(2000)]
    assert xs == [s2.uniform() for _ in range(2000)]
    assert a[0] == xs[0]
    other = RngStream(7, "source:c2")
    assert [other.uniform() for _ in range(10)] != xs[:10]
    reseeded = RngStream(8, "source:c1")
    assert [reseeded.uniform() for _ in range(10)] != xs[:10]
    assert all(0.0 <= x < 1.0 for x in xs)


@settings(max_examples=20)
@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=1, max_value=50))
def test_rng_index_in_range(seed, n):
    s = RngStream(seed, "queue:R->D")
    assert all(0 <= s.index(n) < n for _ in range(200))


def test_rng_exponential_mean():
    s = RngStream(1, "x")
    xs = [s.exponential(2.0) for _ in range(20000)]
    assert abs(sum(xs) / len(xs) - 2.0) < 0.1
