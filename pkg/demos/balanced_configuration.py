"""
Equal link speeds still congest
===============================

Two 1 Gbit/s inputs feed one 1 Gbit/s output.  Every link matches every
other, but the router receives twice what it can send.
"""

from congestion_lab import get_builtin, is_congested, simulate

print("demand 2 x 1e9 on 1e9:", is_congested([1e9, 1e9], 1e9))
print("demand 2 x 0.5e9 on 1e9:", is_congested([0.5e9, 0.5e9], 1e9))

for name in ("myth-balanced", "myth-balanced-halved"):
    q = simulate(get_builtin(name)).port("R", "C").queue
    print(f"{name:22s} backlog after 10 ms: {q.bits:10.0f} bits = {q.occupancy} packets")
