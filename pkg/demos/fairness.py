"""
Round-robin service versus a shared FIFO
========================================

Four open-loop sources share a 1 Mbit/s link at 1.5 times its capacity; one
of them sends three times as fast as the others.  A FIFO hands out capacity
in proportion to demand.  Per-connection round-robin gives each source an
equal turn.
"""

from congestion_lab import get_builtin, simulate

for name in ("fairness-fifo", "fairness-rr", "fairness-rr-equal"):
    s = simulate(get_builtin(name)).summary()
    shares = " ".join(f"{f.goodput / 1e3:6.1f}" for f in s.flows)
    print(f"{name:18s} goodput kbit/s [{shares}]  fairness index {s.fairness:.4f}")
