"""Paths, trees and payoffs.

Builds the full tree and the recombining (time, value) lattice for a short
horizon, checks that each lattice node stands for a binomial number of paths,
and evaluates a few payoffs on stopped paths.
"""

import numpy as np

from stopgo import PathPrefix, PayoffSpec, Statistic, TreeMode, build_tree, check_nonanticipative, concat, eval_payoff
from stopgo.walkspace import binomial_count, statistic_map

full = build_tree(4)
lattice = build_tree(4, TreeMode.AUGMENTED, Statistic.TIME_VALUE)
print(f"horizon 4: {full.n_nodes} path nodes, {lattice.n_nodes} lattice nodes")

counts = np.bincount(statistic_map(full, lattice), minlength=lattice.n_nodes)
for u in range(lattice.n_nodes):
    t, x = int(lattice.depth[u]), int(lattice.value[u])
    assert counts[u] == binomial_count(t, x)
print("paths per lattice node match the binomial counts")

a = PathPrefix.from_string("+")
b = PathPrefix.from_string("-")
ab = concat(a, b)
print(f"concat(+, -): values {ab.values}, stopped at {ab.theta}")
for xi in (PayoffSpec.running_max(), PayoffSpec.neg_tau_sq(), PayoffSpec.terminal_abs(1)):
    print(f"  {xi.label:>14}: {eval_payoff(xi, ab)}")

print("running max ignores the future:", check_nonanticipative(PayoffSpec.running_max(), build_tree(3)).ok)
