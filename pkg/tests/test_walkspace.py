from fractions import Fraction as F
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stopgo import (
    ConfigurationError,
    PathPrefix,
    PayoffSpec,
    ResourceError,
    Statistic,
    TargetMeasure,
    TreeMode,
    build_tree,
    check_nonanticipative,
    concat,
    eval_payoff,
)
from stopgo.walkspace import binomial_count, payoff_vector, statistic_map

steps = st.lists(st.sampled_from([1, -1]), max_size=6)


@st.composite
def prefixes(draw):
    s = draw(steps)
    return PathPrefix(tuple(s), draw(st.integers(0, len(s))))


def test_tree_sizes():
    t1 = build_tree(1)
    assert t1.n_nodes == 3 and set(t1.keys) == {"^", "^+", "^-"}
    assert build_tree(3).n_nodes == 15
    lat = build_tree(2, TreeMode.AUGMENTED, Statistic.TIME_VALUE)
    assert lat.n_nodes == 6
    assert {(int(t), int(x)) for t, x in zip(lat.depth, lat.value)} == {
        (0, 0), (1, 1), (1, -1), (2, 0), (2, 2), (2, -2)
    }


def test_full_cap():
    with pytest.raises(ResourceError):
        build_tree(17)
    with pytest.raises(ResourceError):
        build_tree(5, max_full=4)
    with pytest.raises(ConfigurationError):
        build_tree(0)


def test_full_node_ids():
    tree = build_tree(4)
    for v in range(tree.n_nodes):
        assert tree.node_of(tree.prefix(v)) == v
        assert tree.index(tree.keys[v]) == v
    assert tree.keys[tree.root] == "^"


def test_concat_examples():
    a = PathPrefix((1,), 1)
    b = PathPrefix((-1,), 1)
    c = concat(a, b)
    assert c.values == (0, 1, 0) and c.theta == 2
    assert concat(PathPrefix(), b) == b


@given(prefixes(), prefixes(), prefixes())
def test_concat_associative(a, b, c):
    assert concat(concat(a, b), c) == concat(a, concat(b, c))


@given(prefixes())
def test_concat_identity(a):
    e = PathPrefix()
    assert concat(e, a) == a
    assert concat(a, e) == a.stopped()


def test_concat_on_full_tree():
    tree = build_tree(4)
    for v in range(tree.n_nodes):
        for r in range(tree.n_nodes):
            if tree.depth[v] + tree.depth[r] <= 4:
                w = tree.concat_nodes(v, r)
                assert tree.prefix(w) == concat(tree.prefix(v), tree.prefix(r))


@pytest.mark.parametrize("N", [2, 5, 8])
def test_lattice_multiplicity_is_binomial(N):
    full = build_tree(N)
    lat = build_tree(N, TreeMode.AUGMENTED, Statistic.TIME_VALUE)
    counts = np.bincount(statistic_map(full, lat), minlength=lat.n_nodes)
    for u in range(lat.n_nodes):
        t, x = int(lat.depth[u]), int(lat.value[u])
        assert counts[u] == binomial_count(t, x) == comb(t, (t + x) // 2)


def test_eval_examples():
    p = PathPrefix((1, -1), 2)
    assert eval_payoff(PayoffSpec.running_max(), p) == 1
    assert eval_payoff(PayoffSpec.neg_tau_sq(), PathPrefix((1, 1, 1), 3)) == -9
    assert eval_payoff(PayoffSpec.running_max(), PathPrefix()) == 0


def test_eval_statistic_mismatch():
    lat = build_tree(3, TreeMode.AUGMENTED, Statistic.TIME_VALUE)
    with pytest.raises(ConfigurationError):
        eval_payoff(PayoffSpec.running_max(), 0, lat)


@pytest.mark.parametrize("N", [1, 4, 7, 10])
@pytest.mark.parametrize(
    "xi",
    [
        PayoffSpec.neg_tau(),
        PayoffSpec.neg_tau_sq(),
        PayoffSpec.tau_sq(),
        PayoffSpec.terminal_abs(1),
        PayoffSpec.time_value(lambda t, x: t * x - x * x),
        PayoffSpec.running_max(),
    ],
    ids=lambda xi: xi.label,
)
def test_full_and_lattice_payoffs_agree(N, xi):
    full = build_tree(N)
    stat = Statistic.TIME_VALUE_MAX if xi.label == "running_max" else Statistic.TIME_VALUE
    lat = build_tree(N, TreeMode.AUGMENTED, stat)
    pf = payoff_vector(xi, full, exact=True)
    pl = payoff_vector(xi, lat, exact=True)
    assert all(pf == pl[statistic_map(full, lat)])


def test_nonanticipative_examples():
    assert check_nonanticipative(PayoffSpec.running_max(), build_tree(3)).ok
    assert check_nonanticipative(PayoffSpec.neg_tau(), build_tree(4)).ok


def test_custom_peeking_ahead_is_reported():
    N = 3
    tree = build_tree(N)
    # value at theta depends on the step taken at theta + 1
    table = {}
    for v in range(tree.n_nodes):
        full = tree.prefix(v)
        for tail in np.ndindex(*(2,) * (N - full.theta)):
            path = full.steps + tuple(1 if b else -1 for b in tail)
            for theta in range(N + 1):
                nxt = path[theta] if theta < N else 0
                table[(path, theta)] = nxt
    rep = check_nonanticipative(PayoffSpec.custom(table), tree)
    assert not rep.ok
    offenders = {p.to_string() for p, _ in rep.violations}
    assert "" in offenders and all(len(k) < N for k in offenders)
    with pytest.raises(ConfigurationError):
        payoff_vector(PayoffSpec.custom(table), tree)


def test_custom_table_by_node():
    tree = build_tree(2)
    table = {(tree.prefix(v).steps, tree.prefix(v).theta): F(int(tree.value[v]) ** 3) for v in range(tree.n_nodes)}
    xi = PayoffSpec.custom(table)
    assert check_nonanticipative(xi, tree).ok
    assert list(payoff_vector(xi, tree, exact=True)) == [F(int(x) ** 3) for x in tree.value]


def test_target_measure_validation():
    with pytest.raises(ConfigurationError):
        TargetMeasure.from_pairs([(1, 1)])
    with pytest.raises(ConfigurationError):
        TargetMeasure.from_pairs([(-1, F(1, 2)), (1, F(1, 3))])
    with pytest.raises(ConfigurationError):
        TargetMeasure.from_pairs([(-1, F(-1, 2)), (1, F(3, 2))])
    mu = TargetMeasure.from_pairs([(1, "1/2"), (-1, "1/4"), (-1, "1/4")])
    assert mu.points == (-1, 1) and mu.weights == (F(1, 2), F(1, 2))
    assert mu.second_moment == 1 and mu.radius == 1


def test_shifted_payoff():
    xi = PayoffSpec.neg_tau().shifted(3)
    assert eval_payoff(xi, PathPrefix((1, 1), 2)) == 1
