from fractions import Fraction as F

import pytest

from _suite import FIVE_POINT, MEASURES, PAYOFFS, THREE_POINT, TWO_POINT, late_stop_flow
from stopgo import (
    PayoffSpec,
    ResourceError,
    TargetMeasure,
    assemble_primal,
    azema_yor_structure,
    brute_force_value,
    build_tree,
    expected_payoff,
    optimal_vertices,
    root_structure,
    solve_primal,
    verify_MP,
)


def _optimum(N, mu, xi):
    return solve_primal(assemble_primal(build_tree(N), mu, xi), exact=True)


def test_root_barrier_three_point():
    flows, _ = optimal_vertices(assemble_primal(build_tree(6), THREE_POINT, PayoffSpec.neg_tau_sq()), range(3))
    for f in flows:
        rep = root_structure(f)
        assert rep.ok and rep.thresholds[2] == rep.thresholds[-2] == 2
        assert rep.thresholds[0] is not None


def test_root_barrier_two_point():
    flow, _ = _optimum(4, TWO_POINT, PayoffSpec.neg_tau_sq())
    rep = root_structure(flow)
    assert rep.ok and rep.thresholds[1] == rep.thresholds[-1] == 1


def test_root_dirac():
    flow, _ = _optimum(3, TargetMeasure.dirac(0), PayoffSpec.neg_tau_sq())
    rep = root_structure(flow)
    assert rep.ok and rep.thresholds[0] == 0
    assert root_structure(flow).records()[0] == ("-3", "inf")


def test_root_barrier_randomized_on_boundary():
    # atoms at +-1 are only partly filled on first arrival
    flow, _ = _optimum(6, FIVE_POINT, PayoffSpec.neg_tau_sq())
    strict = root_structure(flow)
    loose = root_structure(flow, strict=False)
    assert not strict.ok and not strict.witnesses
    assert set(strict.randomized) == {"^+", "^-"}
    assert loose.ok


def test_root_detects_late_continuation():
    rep = root_structure(late_stop_flow(6))
    assert not rep.ok and rep.witnesses


def test_azema_yor_examples():
    flow, _ = _optimum(3, TWO_POINT, PayoffSpec.running_max())
    rep = azema_yor_structure(flow)
    assert rep.ok and rep.psi[1] == 1 and rep.psi[-1] == 0
    flow, _ = _optimum(3, TargetMeasure.dirac(0), PayoffSpec.running_max())
    assert azema_yor_structure(flow).psi[0] == 0
    flow, _ = _optimum(8, THREE_POINT, PayoffSpec.running_max())
    rep = azema_yor_structure(flow)
    assert rep.psi[2] is not None and rep.records()


@pytest.mark.parametrize("xi", list(PAYOFFS))
@pytest.mark.parametrize("name", list(MEASURES))
def test_brute_force_matches_lp(xi, name):
    tree = build_tree(5)
    mu = MEASURES[name]
    _, P = _optimum(5, mu, PAYOFFS[xi])
    bf = brute_force_value(tree, mu, PAYOFFS[xi])
    assert bf.feasible and bf.value == P
    # both sides of the oracle certify the value
    assert bf.flow.is_feasible_for(mu)
    assert expected_payoff(bf.flow, PAYOFFS[xi]) == bf.value
    assert bf.certificate.is_feasible() and bf.certificate.value(mu) == bf.value


def test_brute_force_examples():
    tree = build_tree(3)
    assert brute_force_value(tree, TWO_POINT, PayoffSpec.neg_tau()).value == -1
    assert brute_force_value(tree, TWO_POINT, PayoffSpec.running_max()).value == F(1, 2)
    assert brute_force_value(tree, FIVE_POINT, PayoffSpec.constant(0)).value == 0


def test_brute_force_infeasible():
    assert not brute_force_value(build_tree(1), THREE_POINT, PayoffSpec.neg_tau()).feasible
    far = TargetMeasure.from_pairs([(-3, "1/2"), (3, "1/2")])
    assert not brute_force_value(build_tree(2), far, PayoffSpec.neg_tau()).feasible


def test_brute_force_cap():
    with pytest.raises(ResourceError):
        brute_force_value(build_tree(9), TWO_POINT, PayoffSpec.neg_tau())


def test_barrier_and_verifier_agree():
    # for NEG_TAU_SQ a flow passes the verifier exactly when it is a barrier
    good, _ = _optimum(6, THREE_POINT, PayoffSpec.neg_tau_sq())
    bad = late_stop_flow(6)
    xi = PayoffSpec.neg_tau_sq()
    assert root_structure(good).ok and verify_MP(good, xi).ok
    assert not root_structure(bad).ok and not verify_MP(bad, xi).ok
