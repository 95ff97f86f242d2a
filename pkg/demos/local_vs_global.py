"""Why the subproblem oracle must be global.

    minimize  -|x|
    s.t.      -x^3/3 <= 0,   x in [-1, 1]

The feasible set is [0, 1] and the optimum is x* = 1.  A purely local
oracle started at -1 crawls along the recurrence x <- x - x^3/3 toward the
worst feasible point 0: each cut pushes the iterate just past the previous
exclusion ball, where the pattern search finds a local minimum and stalls.
A certified global oracle needs at most two iterations.
"""

import numpy as np

from lipcut import DriverConfig, GlobalOracle, LocalOracle, OracleConfig, run
from lipcut.problems import build, get_builtin

built = build(get_builtin("bad-local"))

print("== local oracle, started at x = -1 ==")
outcome = run(
    built.problem,
    LocalOracle(),
    DriverConfig(max_iterations=20, initial_start=np.array([-1.0])),
)
print(f"{'k':>2}  {'x^k':>12}  {'recurrence x - x^3/3':>22}")
prev = None
for rec in outcome.trace:
    predicted = "" if prev is None else f"{prev - prev**3 / 3:>22.8f}"
    print(f"{rec.k:>2}  {rec.point[0]:>12.8f}  {predicted}")
    prev = rec.point[0]
print(f"status after 20 iterations: {outcome.status.value}")
print("the sequence converges to 0, the worst feasible point\n")

print("== certified global oracle ==")
outcome = run(
    built.problem,
    GlobalOracle(OracleConfig(tolerance=1e-8), built.problem.domain_norm),
    DriverConfig(max_iterations=20),
)
for rec in outcome.trace:
    print(f"k={rec.k}: x = {rec.point[0]:+.6f}, violation = {rec.violation_max:+.6f}")
print(f"status: {outcome.status.value}, optimum x* = {outcome.final_point[0]}")
