"""Encoding 1-norm and max-norm cuts as mixed-binary linear systems.

A cut ||x - a||_p >= b with p in {1, inf} admits an exact big-M encoding:
continuous y_i carry |x_i - a_i| with sign-selection binaries z_i, and the
max norm additionally uses one-hot binaries u_i to pick out the largest
deviation.  2-norm cuts have no linear encoding but can be exported as
quadratic rows for QCQP solvers.
"""

import numpy as np

from lipcut import (
    BoxDomain,
    Cut,
    NormKind,
    default_big_M,
    export_lp,
    reformulate_1norm,
    reformulate_infnorm,
    verify_by_enumeration,
)

box = BoxDomain((-1.0, -1.0), (1.0, 1.0))
big_m = default_big_M(box, NormKind.One)
print(f"box diameter (1-norm): {big_m}")

# --- the encoding agrees with the direct norm check -----------------------
system = reformulate_1norm((0.0, 0.0), 1.0, big_m)
print(f"\n1-norm cut ||x|| >= 1 encodes as {system.constraint_count} rows, "
      f"{len(system.binary_vars)} binaries")
for x in [(1.0, 0.0), (0.4, 0.4), (0.7, 0.5), (-0.3, -0.6)]:
    encoded = verify_by_enumeration(system, x)
    direct = abs(x[0]) + abs(x[1]) >= 1.0
    print(f"  x = {x}: encoding {'accepts' if encoded else 'rejects'}, "
          f"direct check {'accepts' if direct else 'rejects'}")

system_inf = reformulate_infnorm((0.0, 0.0), 1.0, big_m)
print(f"\nmax-norm cut encodes as {system_inf.constraint_count} rows, "
      f"{len(system_inf.binary_vars)} binaries")
for x in [(0.9, 0.2), (1.0, 0.2)]:
    print(f"  x = {x}: {'feasible' if verify_by_enumeration(system_inf, x) else 'infeasible'}")

# --- the big-M requirement -------------------------------------------------
# The sign rows need M >= 2 max_i |x_i - a_i|.  On a 1-D box the diameter
# never satisfies that for far-apart pairs, and the encoding wrongly
# rejects a norm-feasible point (it can never wrongly accept):
narrow = reformulate_1norm((0.1,), 0.5, 1.0)   # M = diameter of [0, 1]
wide = reformulate_1norm((0.1,), 0.5, 2.0)     # M doubled
print("\nbig-M requirement on the 1-D box [0, 1], cut |x - 0.1| >= 0.5:")
print(f"  x = 0.9 with M = 1: {verify_by_enumeration(narrow, (0.9,))}  (wrong rejection)")
print(f"  x = 0.9 with M = 2: {verify_by_enumeration(wide, (0.9,))}")

# --- LP-file export --------------------------------------------------------
systems = [
    reformulate_1norm((0.0, 0.0), 1.0, big_m),
    reformulate_1norm((0.5, -0.25), 0.4, big_m),
]
ball = Cut((0.25, 0.25), 0.3, norm=NormKind.Two)
text = export_lp(systems, {"x1": 1.0, "x2": 4.0}, box, two_norm_cuts=[ball])
print("\nLP export (two 1-norm cuts + one quadratic 2-norm row):\n")
print(text)
