from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _suite import FIVE_POINT, MEASURES, PAYOFFS, THREE_POINT, TWO_POINT, random_feasible_vertex, second_moment
from stopgo import (
    DualCertificate,
    DualityGapError,
    InfeasibleEmbedding,
    PayoffSpec,
    StoppingFlow,
    TargetMeasure,
    assemble_dual,
    assemble_primal,
    build_tree,
    check_slackness,
    contact_set,
    expected_payoff,
    optimal_vertices,
    solve_dual,
    solve_primal,
    verify_duality,
    wald_certificate,
)
from stopgo.monotonicity import support_set


def _dual(N, mu, xi, exact=True):
    return solve_dual(assemble_dual(build_tree(N), xi, mu), exact=exact)


def test_one_step_counts():
    problem = assemble_dual(build_tree(1), PayoffSpec.neg_tau(), TWO_POINT)
    # lam on -1, 0, 1 and S on three nodes; 3 domination, 1 supermartingale, S(root) = 0
    assert problem.lp.n_vars == 6
    assert problem.lp.n_rows == 5


def test_zero_payoff():
    cert, D = _dual(4, THREE_POINT, PayoffSpec.constant(0))
    assert D == 0 and cert.is_feasible()
    flow, P = solve_primal(assemble_primal(build_tree(4), THREE_POINT, PayoffSpec.constant(0)), exact=True)
    assert len(contact_set(cert)) >= len(support_set(flow))


@pytest.mark.parametrize("k", [F(-3), F(5, 7)])
def test_constant_payoff(k):
    cert, D = _dual(3, FIVE_POINT, PayoffSpec.constant(k))
    assert D == k and cert.value(FIVE_POINT) == k


@pytest.mark.parametrize("N", [3, 6])
@pytest.mark.parametrize("name", list(MEASURES))
def test_wald_certificate(N, name):
    tree = build_tree(N)
    mu = MEASURES[name]
    cert = wald_certificate(tree, mu)
    assert cert.is_feasible()
    assert all(cert.slack == 0) and all(cert.drift == 0)
    assert cert.value(mu) == -second_moment(mu)
    assert len(contact_set(cert)) == tree.n_nodes


def test_examples_match_primal():
    _, D = _dual(3, TWO_POINT, PayoffSpec.running_max())
    assert D == F(1, 2)
    tree = build_tree(4)
    _, P = solve_primal(assemble_primal(tree, THREE_POINT, PayoffSpec.neg_tau_sq()), exact=True)
    _, D = _dual(4, THREE_POINT, PayoffSpec.neg_tau_sq())
    assert verify_duality(P, D).gap == 0


@pytest.mark.parametrize("xi", ["neg_tau_sq", "running_max", "abs_x_minus_1"])
def test_shift_invariance(xi):
    tree = build_tree(5)
    base, shifted = PAYOFFS[xi], PAYOFFS[xi].shifted(F(3, 2))
    f0, P0 = solve_primal(assemble_primal(tree, FIVE_POINT, base), exact=True)
    f1, P1 = solve_primal(assemble_primal(tree, FIVE_POINT, shifted), exact=True)
    _, D0 = _dual(5, FIVE_POINT, base)
    _, D1 = _dual(5, FIVE_POINT, shifted)
    assert P1 - P0 == F(3, 2) and D1 - D0 == F(3, 2)
    # the optimal flow for one payoff is optimal for the other
    assert expected_payoff(f0, shifted) == P1 and expected_payoff(f1, base) == P0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(list(PAYOFFS)), st.sampled_from(list(MEASURES)))
def test_weak_duality_on_random_pairs(seed, xi, name):
    tree = build_tree(4)
    mu = MEASURES[name]
    flow = random_feasible_vertex(assemble_primal(tree, mu), seed)
    cert, _ = _dual(4, mu, PAYOFFS[xi])
    # perturb the certificate upward: still feasible, so still an upper bound
    rng = np.random.default_rng(seed)
    lam = {x: v + F(int(rng.integers(0, 5)), 3) for x, v in cert.lam.items()}
    other = DualCertificate(tree, cert.payoff, lam, cert.S)
    for c in (cert, other):
        assert c.is_feasible()
        assert expected_payoff(flow, PAYOFFS[xi]) <= c.value(mu)


def test_suboptimal_flow_gap_detected():
    tree = build_tree(6)
    xi = PayoffSpec.tau_sq()
    flow = random_feasible_vertex(assemble_primal(tree, THREE_POINT), 11)
    cert, D = _dual(6, THREE_POINT, xi)
    P = expected_payoff(flow, xi)
    assert P < D
    with pytest.raises(DualityGapError) as e:
        verify_duality(P, D)
    assert e.value.report.gap == D - P
    slack = check_slackness(flow, cert)
    assert not slack.ok


def test_floating_gap_tolerance():
    rep = verify_duality(1.0, 1.0 + 1e-9, exact=False)
    assert rep.ok and not rep.exact
    with pytest.raises(DualityGapError):
        verify_duality(1.0, 1.1, exact=False)


@pytest.mark.parametrize("xi", list(PAYOFFS))
@pytest.mark.parametrize("name", list(MEASURES))
def test_slackness_and_contact(xi, name):
    tree = build_tree(5)
    mu = MEASURES[name]
    flows, P = optimal_vertices(assemble_primal(tree, mu, PAYOFFS[xi]), range(3))
    cert, D = _dual(5, mu, PAYOFFS[xi])
    assert P == D
    gamma = contact_set(cert)
    for f in flows:
        assert check_slackness(f, cert).ok
        assert support_set(f).issubset(gamma)
    assert cert.growth >= 0


def test_dirac_slackness():
    tree = build_tree(3)
    flow, _ = solve_primal(assemble_primal(tree, TargetMeasure.dirac(0), PayoffSpec.tau_sq()), exact=True)
    cert, _ = _dual(3, TargetMeasure.dirac(0), PayoffSpec.tau_sq())
    assert check_slackness(flow, cert).ok and tree.root in contact_set(cert)


def test_floating_dual():
    cert, D = _dual(10, FIVE_POINT, PayoffSpec.neg_tau_sq(), exact=False)
    assert abs(D + 2.5) < 1e-7 and cert.is_feasible(1e-7)


def test_infeasible_dual_unbounded():
    mu = TargetMeasure.from_pairs([(-3, "1/2"), (3, "1/2")])
    with pytest.raises(InfeasibleEmbedding) as e:
        _dual(2, mu, PayoffSpec.neg_tau())
    assert e.value.certificate is None or e.value.certificate.check(mu)
