"""
A faster link that makes a transfer slower
==========================================

Four nodes in series joined by 19.2 kbit/s links carry a 1000-packet file.
Upgrading only the first hop to 1 Mbit/s lets the source dump its whole
window into the second router at once; the overflow is dropped, the fixed
timer fires and go-back-n resends everything.
"""

from congestion_lab import get_builtin, simulate

for name in ("myth-fastlink", "myth-fastlink-upgraded", "myth-fastlink-repaired"):
    res = simulate(get_builtin(name))
    s = res.summary().by_conn("c1")
    drops = sum(p.queue.drops for p in res.network.ports.values())
    print(f"{name:24s} done at {s.completion_time:8.1f} s  "
          f"sent {s.packets_sent:5d}  retransmitted {s.retransmission_count:5d}  drops {drops}")

# serialization alone: 1000 packets x 8000 bits over 19.2 kbit/s
print(f"{'pure serialization':24s} {1000 * 8000 / 19200:8.1f} s")
