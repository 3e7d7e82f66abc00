from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _suite import FIVE_POINT, MEASURES, PAYOFFS, THREE_POINT, TWO_POINT, random_feasible_vertex, second_moment
from stopgo import (
    InfeasibleEmbedding,
    PayoffSpec,
    ResourceError,
    Statistic,
    StoppingFlow,
    TargetMeasure,
    TreeMode,
    assemble_primal,
    build_tree,
    expected_payoff,
    feasibility,
    optimal_vertices,
    solve_primal,
    stopped_law,
)
from stopgo.primal import aggregate_flow, lift_flow
from stopgo.walkspace import payoff_vector


def _solve(N, mu, xi, exact=True, **kw):
    return solve_primal(assemble_primal(build_tree(N, **kw), mu, xi), exact=exact)


def test_one_step_unique_flow():
    tree = build_tree(1)
    problem = assemble_primal(tree, TWO_POINT, PayoffSpec.running_max())
    assert problem.lp.n_vars == 2 * 3
    flows, _ = optimal_vertices(problem, range(4))
    assert len(flows) == 1
    f = flows[0]
    assert f.stop[tree.index("^+")] == F(1, 2) and f.stop[tree.index("^-")] == F(1, 2)
    assert f.stop[tree.root] == 0


def test_lattice_dirac_only_root_stop():
    tree = build_tree(2, TreeMode.AUGMENTED, Statistic.TIME_VALUE)
    problem = assemble_primal(tree, TargetMeasure.dirac(0), PayoffSpec.tau_sq())
    # 6 balance rows and one marginal row per grid point -2..2
    assert problem.n_constraints == 6 + 5
    flow, value = solve_primal(problem, exact=True)
    assert flow.stop[tree.root] == 1 and value == 0


@pytest.mark.parametrize("N", [1, 3, 6])
def test_wald_two_point(N):
    _, P = _solve(N, TWO_POINT, PayoffSpec.neg_tau())
    assert P == -1


def test_running_max_two_point():
    _, P = _solve(3, TWO_POINT, PayoffSpec.running_max())
    assert P == F(1, 2)


@pytest.mark.parametrize("xi", list(PAYOFFS.values()), ids=list(PAYOFFS))
def test_dirac_value_is_root_payoff(xi):
    tree = build_tree(4)
    _, P = solve_primal(assemble_primal(tree, TargetMeasure.dirac(0), xi), exact=True)
    assert P == payoff_vector(xi, tree, exact=True)[tree.root]


@pytest.mark.parametrize("name", list(MEASURES))
def test_vertices_conserve_and_embed(name):
    mu = MEASURES[name]
    problem = assemble_primal(build_tree(6), mu)
    for seed in range(4):
        f = random_feasible_vertex(problem, seed)
        assert f.balance_residual() == 0
        assert stopped_law(f) == mu
        # Wald and martingale identities hold for every feasible flow
        assert sum(f.stop * f.tree.depth) == second_moment(mu)
        assert sum(f.stop * f.tree.value) == 0


def test_floating_vertex_law():
    problem = assemble_primal(build_tree(6), FIVE_POINT)
    f = random_feasible_vertex(problem, 0, exact=False)
    assert f.balance_residual() < 1e-10
    law = stopped_law(f, tol=1e-9)
    assert law.points == FIVE_POINT.points
    assert np.allclose([float(w) for w in law.weights], [float(w) for w in FIVE_POINT.weights], atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.data())
def test_kernel_flows_satisfy_identities(N, data):
    tree = build_tree(N)
    p = data.draw(st.lists(st.fractions(0, 1, max_denominator=8), min_size=tree.n_nodes, max_size=tree.n_nodes))
    f = StoppingFlow.from_kernel(tree, p)
    assert f.balance_residual() == 0 and f.total_stop == 1
    assert sum(f.stop * tree.depth) == sum(f.stop * tree.value**2)
    assert sum(f.stop * tree.value) == 0


def test_expected_payoff_examples():
    tree = build_tree(3)
    at_one = StoppingFlow.from_kernel(tree, [1 if v == tree.root else 0 for v in range(tree.n_nodes)])
    at_root = StoppingFlow.from_kernel(tree, [0] * tree.n_nodes)
    xi = PayoffSpec.running_max()
    assert expected_payoff(at_one, xi) == F(1, 2)
    assert expected_payoff(at_root, PayoffSpec.neg_tau_sq().shifted(7)) == 7
    assert stopped_law(at_one) == TWO_POINT
    assert stopped_law(at_root) == TargetMeasure.dirac(0)
    mixed = at_one.mix(at_root, F(1, 2))
    assert expected_payoff(mixed, xi) == F(1, 4)


@pytest.mark.parametrize("name", list(MEASURES))
@pytest.mark.parametrize("xi", ["neg_tau_sq", "tau_sq", "running_max", "abs_x_minus_1"])
def test_value_nondecreasing_in_horizon(name, xi):
    values = [_solve(N, MEASURES[name], PAYOFFS[xi])[1] for N in range(3, 9)]
    assert all(a <= b for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("N", [4, 7, 10])
@pytest.mark.parametrize("xi", ["neg_tau_sq", "tau_sq", "running_max", "abs_x_minus_1"])
def test_full_and_lattice_values_agree(N, xi):
    stat = Statistic.TIME_VALUE_MAX if xi == "running_max" else Statistic.TIME_VALUE
    exact = N <= 8
    f_full, P_full = _solve(N, THREE_POINT, PAYOFFS[xi], exact=exact)
    lat = build_tree(N, TreeMode.AUGMENTED, stat)
    f_lat, P_lat = solve_primal(assemble_primal(lat, THREE_POINT, PAYOFFS[xi]), exact=exact)
    assert abs(float(P_full) - float(P_lat)) <= 1e-8
    # flows transfer both ways with the same payoff
    assert abs(float(expected_payoff(aggregate_flow(f_full, lat), PAYOFFS[xi])) - float(P_full)) <= 1e-8
    lifted = lift_flow(f_lat, f_full.tree)
    assert abs(float(expected_payoff(lifted, PAYOFFS[xi])) - float(P_lat)) <= 1e-8


def test_feasibility_examples():
    assert not feasibility(TargetMeasure.from_pairs([(-3, F(1, 2)), (3, F(1, 2))]), build_tree(2))[0]
    assert feasibility(TargetMeasure.dirac(0), build_tree(3))[0]
    tree = build_tree(2)
    ok, _ = feasibility(THREE_POINT, tree)
    assert ok
    # continue at depths 0 and 1, stop at depth 2
    f = StoppingFlow.from_kernel(tree, [1 if tree.depth[v] < 2 else 0 for v in range(tree.n_nodes)])
    assert f.is_feasible_for(THREE_POINT)


@pytest.mark.parametrize("mu", [THREE_POINT, FIVE_POINT, TargetMeasure.from_pairs([(-3, "1/2"), (3, "1/2")])])
def test_infeasibility_certificate(mu):
    tree = build_tree(1) if mu.radius < 3 else build_tree(2)
    ok, cert = feasibility(mu, tree)
    assert not ok and cert.check(mu)
    with pytest.raises(InfeasibleEmbedding) as e:
        solve_primal(assemble_primal(tree, mu, PayoffSpec.neg_tau()), exact=True)
    assert e.value.certificate.check(mu)


def test_exact_cap():
    with pytest.raises(ResourceError):
        solve_primal(assemble_primal(build_tree(10), TWO_POINT, PayoffSpec.neg_tau()), exact=True)


def test_seeded_vertices_are_optimal():
    problem = assemble_primal(build_tree(5), FIVE_POINT, PayoffSpec.running_max())
    flows, value = optimal_vertices(problem, range(6))
    for f in flows:
        assert f.is_feasible_for(FIVE_POINT) and expected_payoff(f, PayoffSpec.running_max()) == value
