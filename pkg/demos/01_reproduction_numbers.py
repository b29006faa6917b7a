"""Closed-form reproduction numbers for app-based contact tracing.

The model: a Markovian SIR epidemic where infectious individuals transmit at
rate beta, recover at rate gamma and are diagnosed (isolated) at rate delta.
A fraction pi of the population runs a tracing app; when an app-user is
diagnosed, every app-using contact is traced instantly and recursively.

Early in a large outbreak the epidemic branches over "app-user clusters" and
individual non-app-users.  This script walks through the closed-form pieces
of that branching process and two headline phenomena:

* the cluster-level reproduction number is NOT always monotone in pi,
* the individual-level number is, and both cross 1 at the same point.
"""

import numpy as np

from epict import (
    Params,
    delta_for_testing_fraction,
    expected_jumps,
    mean_component_size,
    mean_infections_per_jump,
    offspring_matrix_digital,
    r0,
    r_component_digital,
    r_individual_digital,
)

params = Params(beta=0.8, gamma=1 / 7, delta=1 / 7, pi=2 / 3, p=0.0, n=1)

print("baseline (no tracing):  R_0 =", round(r0(params), 4))

# An app-user cluster makes a random number of "jumps" (growth, recovery, or
# the diagnosis that kills it); everything analytic hangs off that count.
print("expected cluster jumps: ", round(expected_jumps(params), 4))
print("non-app infections/jump:", round(mean_infections_per_jump(params), 4))
print("mean cluster size:      ", round(mean_component_size(params), 4))

m = offspring_matrix_digital(params)
print("mean offspring matrix:  ",
      [[round(m.m11, 4), round(m.m12, 4)], [round(m.m21, 4), round(m.m22, 4)]],
      "provenance:", m.provenance)

print("cluster-level  R_D =", round(r_component_digital(params), 4))
print("individual     R_D =", round(r_individual_digital(params), 4))

# Non-monotonicity: at a low testing fraction, MORE app users can RAISE the
# cluster-level number (clusters grow larger and export more infections
# before anyone gets diagnosed).  The individual-level number never does.
delta_low = delta_for_testing_fraction(0.05, params.gamma)
print("\npi ->  R_D and R_ind at testing fraction 0.05, beta=6/7:")
for pi in np.arange(0.1, 1.0, 0.2):
    q = Params(beta=6 / 7, gamma=1 / 7, delta=delta_low, pi=float(pi), p=0.0, n=1)
    print(f"  pi={pi:.1f}: R_D = {r_component_digital(q):7.3f}   "
          f"R_ind = {r_individual_digital(q):7.3f}")
