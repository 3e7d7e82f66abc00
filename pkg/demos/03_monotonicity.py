"""Stop-go pairs and the monotonicity check.

For xi = -tau^2 the stop-go pairs are exactly the equal-value pairs where the
first prefix is older. An optimal flow never continues at such a prefix while
stopping at its partner. A hand-built flow that lets mass pass through
(2, 0) and stops it again at (4, 0) is caught with a witness pair.
"""

from fractions import Fraction as F

from stopgo import (
    Flavor,
    PayoffSpec,
    StoppingFlow,
    TargetMeasure,
    assemble_primal,
    build_tree,
    enumerate_SG,
    expected_payoff,
    solve_primal,
    verify_MP,
)

tree = build_tree(6)
xi = PayoffSpec.neg_tau_sq()
mu = TargetMeasure.from_pairs([(-2, F(1, 4)), (0, F(1, 2)), (2, F(1, 4))])

sg = enumerate_SG(xi, tree)
print(f"stop-go pairs at horizon 6: {len(sg)} (censored at the horizon: {len(sg.censored)})")

flow, P = solve_primal(assemble_primal(tree, mu, xi), exact=True)
for flavor in Flavor:
    rep = verify_MP(flow, xi, flavor=flavor)
    print(f"optimal flow, {flavor.value}: {rep.verdict} ({rep.checked} candidate pairs)")


def late(v):
    t, x = int(tree.depth[v]), int(tree.value[v])
    if t == tree.horizon or abs(x) == 2 or (t == 4 and x == 0):
        return F(0)
    return F(2, 3) if t == 0 else F(1)


bad = StoppingFlow.from_kernel(tree, [late(v) for v in range(tree.n_nodes)])
print(f"late-stop flow embeds the law: {bad.is_feasible_for(mu)}, value {expected_payoff(bad, xi)} < {P}")
for flavor in Flavor:
    rep = verify_MP(bad, xi, flavor=flavor)
    print(f"late-stop flow, {flavor.value}: {rep.verdict}, first witness {rep.witness_records()[0]}")
