"""Run the smoke verification and print the headline numbers.

Uses (n0, T, m) = (20, 2000, 12) on the fixed 200-pattern sample; the
full run is ``sudlercert verify`` with default parameters.
"""

from sudlercert.cli import smoke_patterns
from sudlercert.ffamily import SMOKE_PARAMS
from sudlercert.verify import run_full

report = run_full(SMOKE_PARAMS, smoke_patterns(), gate=["zero"], thresholds={"zero": 1.0})
print("status:", report.global_status, f"({report.wall_time_seconds:.1f}s)")
for name, value in report.universal_values.items():
    wit = report.universal_witnesses[name]
    print(f"  {name:8s} {value if value is None else round(value, 5)!s:>9}  witness {wit}")
weakest = sorted((r for r in report.cases if r["min_value"] is not None), key=lambda r: r["min_value"])[:5]
print("weakest cases:")
for r in weakest:
    print(f"  {r['id']:8s} {r['min_value']:.5f} (stated {r['target']})")
