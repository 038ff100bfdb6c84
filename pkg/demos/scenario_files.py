"""
Editing a scenario as text
==========================

Every built-in experiment can be written out as a plain scenario file,
edited and run again.  Here the fast-link paradox is re-run with a larger
router buffer.  It does not help: longer queues only push more round trips
past the fixed timer.
"""

from congestion_lab import get_builtin, simulate
from congestion_lab.scenario_file import ScenarioFileError, export_scenario, parse_scenario

text = export_scenario(get_builtin("myth-fastlink-upgraded"))
print(text)

bigger = parse_scenario(text.replace("buffer 10 ", "buffer 40 "))
done = simulate(bigger).flow("c1").sender.completed_at
print(f"upgraded path with 40-packet buffers finishes at {done:.1f} s")

# mistakes are reported with the offending line
try:
    parse_scenario(text.replace("bandwidth 19200.0", "bandwidth -5", 1))
except ScenarioFileError as e:
    print("rejected:", e)
