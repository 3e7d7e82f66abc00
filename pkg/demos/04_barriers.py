"""Barrier shape of optimizers.

Minimizing E[tau^2] yields a space-time barrier: mass at value x stops as
soon as time reaches r(x). For the five-point law the atoms at +-1 are only
partly filled on first arrival, so the barrier randomizes on its boundary.
Maximizing the running maximum is compared with a max-level boundary.
"""

from fractions import Fraction as F

from stopgo import PayoffSpec, TargetMeasure, assemble_primal, azema_yor_structure, build_tree, root_structure, solve_primal

three = TargetMeasure.from_pairs([(-2, F(1, 4)), (0, F(1, 2)), (2, F(1, 4))])
five = TargetMeasure.from_pairs([(-2, F(1, 8)), (-1, F(1, 4)), (0, F(1, 4)), (1, F(1, 4)), (2, F(1, 8))])
tree = build_tree(6)

for name, mu in (("three-point", three), ("five-point", five)):
    flow, _ = solve_primal(assemble_primal(tree, mu, PayoffSpec.neg_tau_sq()), exact=True)
    rep = root_structure(flow, strict=False)
    r = {x: t for x, t in rep.thresholds.items() if t is not None}
    print(f"{name}: r = {r}, strict barrier = {root_structure(flow).ok}, randomized at {rep.randomized}")

flow, _ = solve_primal(assemble_primal(build_tree(8), three, PayoffSpec.running_max()), exact=True)
rep = azema_yor_structure(flow)
print("running max, max levels at which each value stops:", {x: m for x, m in rep.psi.items() if m is not None})
print("boundary form holds:", rep.ok, "(diagnostic only)")
