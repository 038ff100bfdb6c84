"""
Window schemes side by side
===========================

Two greedy connections share a 1 Mbit/s bottleneck with a 20-packet buffer.
The second starts 50 ms after the first.  Each run uses one window scheme;
the ``choke`` run uses CUTE with routers sending a choke packet per drop.
"""

from congestion_lab import audit, get_builtin, simulate
from congestion_lab.builtins import COMPARE_SCHEMES

print(f"{'scheme':16s} {'goodput':>9s} {'fair':>6s} {'delay ms':>9s} {'retx':>5s} {'adjust/acks':>12s} kinds")
for scheme in COMPARE_SCHEMES:
    sc = get_builtin(f"compare-{scheme}")
    sc.run.duration = 30.0
    res = simulate(sc, trace=True)
    s = res.summary()
    freq = audit.control_frequency(res.trace)
    adj = sum(f.adjustments for f in freq)
    acked = sum(f.acked for f in freq)
    kinds = ",".join(sorted(res.packet_kinds()))
    print(f"{scheme:16s} {s.aggregate.goodput / 1e3:9.1f} {s.fairness:6.3f} "
          f"{s.aggregate.mean_delay * 1e3:9.1f} {s.aggregate.retransmission_count:5d} "
          f"{adj:5d}/{acked:<6d} {kinds}")
