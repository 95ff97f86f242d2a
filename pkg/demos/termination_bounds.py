"""Termination bounds for infeasible problems and complexity envelopes.

When the problem is infeasible, every constraint violation is at least
delta = min over the box of ||r(x)_+||, so consecutive iterates stay more
than delta/L apart and the iteration count is capped by a packing number.
The envelopes below bound oracle calls for epsilon-approximate solving.
"""

import numpy as np

from lipcut import (
    BoxDomain,
    DriverConfig,
    GlobalOracle,
    NormKind,
    OracleConfig,
    ball_packing_bound,
    box_packing_bound,
    box_radius_asphericity,
    complexity_lower,
    complexity_upper,
    lattice_count,
    run,
)
from lipcut.problems import build, get_builtin

# --- packing bounds ---------------------------------------------------------
box = BoxDomain((-1.0,), (1.0,))
print("box [-1,1], L = 2, delta = 1:")
print(f"  box packing bound: {box_packing_bound(box, L=2.0, delta=1.0):.0f} iterations")

lattice_box = BoxDomain((0.0, 0.0), (3.0, 2.0), integral=(True, True))
print(f"lattice {{0..3}} x {{0..2}}: at most {lattice_count(lattice_box)} iterations")
print(f"Euclidean ball D=1, L=1, delta=1, n=2: {ball_packing_bound(1, 1, 1, 2):.0f}")

# --- the bound is observed empirically --------------------------------------
# r(x) = x^2 + 1 > 0 everywhere on [-1,1]: delta = 1, L = 2
built = build(get_builtin("infeasible-1d"))
oracle = GlobalOracle(OracleConfig(tolerance=1e-8), built.problem.domain_norm)
outcome = run(built.problem, oracle, DriverConfig(max_iterations=10))
points = [rec.point[0] for rec in outcome.trace]
print(f"\ninfeasible 1-D run: {outcome.status.value} after {len(points)} cuts "
      f"(bound said <= 5)")
print(f"iterates: {points}")
separations = [abs(a - b) for i, a in enumerate(points) for b in points[i + 1:]]
print(f"pairwise separations: {separations}  (all >= delta/L = 0.5)")

# --- complexity envelopes ----------------------------------------------------
square = BoxDomain((-1.0, -1.0), (1.0, 1.0))
rho, alpha = box_radius_asphericity(square, NormKind.Two)
print(f"\n[-1,1]^2 under the 2-norm: radius rho = {rho:.4f}, asphericity alpha = {alpha:.4f}")
for eps in (0.5, 0.1, 0.01):
    upper = complexity_upper(rho, eps, 2)
    lower = complexity_lower(alpha, eps, 2, c=1.0)
    print(f"  eps = {eps:<5}: oracle calls between {lower:10.1f} and {upper:12.1f}"
          f"  (lower bound up to its free constant c)")
