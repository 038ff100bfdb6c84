"""
Knee and cliff of the load curve
================================

An open-loop M/M/1 bottleneck gives the classic power curve whose maximum
(the knee) sits at half the capacity.  A closed-loop version with small
buffers, fixed timers and go-back-n falls off a cliff once the offered load
passes capacity.
"""

from congestion_lab import knee_cliff, run_sweep
from congestion_lab.builtins import cliff_closed, knee_open

grid = [0.1, 0.3, 0.5, 0.7, 0.9]
for det in (False, True):
    sc = knee_open(deterministic=det, values=grid)
    sc.run.duration = 20.0
    pts, _ = run_sweep(sc)
    label = "deterministic" if det else "poisson"
    print(label)
    for p in pts:
        print(f"  rho={p.offered_load:.1f}  thr={p.throughput / 1e6:5.2f} Mbit/s  "
              f"delay={p.mean_delay * 1e3:7.3f} ms  power={p.power:.3g}")
    print("  knee at rho =", max(pts, key=lambda p: p.power).offered_load)

sc = cliff_closed(values=[0.6, 0.8, 0.9, 1.0, 1.1, 1.2, 1.4])
sc.run.duration = 20.0
pts, _ = run_sweep(sc)
print("closed loop, goodput by offered load")
for p in pts:
    print(f"  rho={p.offered_load:.1f}  goodput={p.throughput / 1e6:5.3f} Mbit/s")
knee, cliff = knee_cliff(pts)
print("  knee", knee, "cliff", cliff)
