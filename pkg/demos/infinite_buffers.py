"""
Unbounded router memory does not prevent collapse
=================================================

A greedy source sends at twice the bottleneck rate with a fixed 0.3 s
timeout.  With an infinite buffer nothing is ever dropped, yet the queueing
delay soon dwarfs the timeout and the bottleneck spends its time forwarding
copies the destination already has.
"""

from congestion_lab import get_builtin, simulate

res = simulate(get_builtin("myth-buffers"), timeseries=True)
queue = [(t, v) for t, ent, m, v in res.timeseries if ent == "queue:R->D" and m == "occupancy"]
for t, v in queue[::10]:
    print(f"t={t:5.1f} s  queue {v:6d} packets  (~{v * 8000 / 1e6:6.2f} s of waiting)")

agg = res.summary().aggregate
print(f"goodput {agg.goodput:9.0f} bit/s of {agg.throughput:9.0f} bit/s forwarded "
      f"-> ratio {agg.goodput_ratio:.3f}")

# a 20-packet buffer plus the CUTE window scheme
fixed = simulate(get_builtin("myth-buffers-cute")).summary().aggregate
print(f"finite buffer + CUTE: ratio {fixed.goodput_ratio:.3f}, goodput {fixed.goodput:.0f} bit/s")
