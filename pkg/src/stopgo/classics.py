"""Classical embedding structure checks and an exact reference solver.

:func:`brute_force_value` solves the flow LP with no floating point and no
external solver: the flow polytope is the convex hull of pure stopping
rules, so a master problem over stopping rules (one row per grid point) is
solved by an exact simplex, and new rules are priced by optimal stopping
(a Snell envelope on the tree). Its final duals give a dual certificate, so
the value is certified from both sides.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import as_mode, zeros
from .dual import DualCertificate
from .errors import ResourceError
from .primal import StoppingFlow, marginal_points
from .walkspace import PathTree, PayoffSpec, TargetMeasure, payoff_vector

log = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 8


# --------------------------------------------------------------------------
# barriers
# --------------------------------------------------------------------------


@dataclass
class BarrierReport:
    """Space-time barrier fit of a flow's stop set.

    ``thresholds[x]`` is the first time mass stops at value ``x`` (``None``
    when it never does). ``witnesses`` are nodes strictly past the threshold
    that still let mass continue. ``randomized`` are nodes exactly at the
    threshold that stop only part of their mass; a strict barrier has none.
    """

    thresholds: dict[int, int | None]
    witnesses: list[str] = field(default_factory=list)
    randomized: list[str] = field(default_factory=list)
    strict: bool = True

    @property
    def ok(self) -> bool:
        return not self.witnesses and not (self.strict and self.randomized)

    def records(self) -> list[tuple[str, str]]:
        return [(str(x), "inf" if r is None else str(r)) for x, r in sorted(self.thresholds.items())]


def root_structure(flow: StoppingFlow, tree: PathTree | None = None, eps=None, strict: bool = True) -> BarrierReport:
    """Fit ``r(x)`` so that mass at ``(t, x)`` stops exactly when ``t >= r(x)``.

    With ``strict=False`` partial stopping at ``t = r(x)`` is accepted, which
    is the discrete barrier shape needed when an atom of the target law is
    only partly filled on first arrival.
    """
    tree = flow.tree if tree is None else tree
    eps = (0 if flow.exact else 1e-7) if eps is None else eps
    thr: dict[int, int | None] = {int(x): None for x in tree.grid}
    for v in range(tree.n_nodes):
        if flow.stop[v] > eps:
            x, t = int(tree.value[v]), int(tree.depth[v])
            if thr[x] is None or t < thr[x]:
                thr[x] = t
    bad, rand = [], []
    for v in range(tree.n_nodes):
        r = thr[int(tree.value[v])]
        if r is None or flow.cont[v] <= eps:
            continue
        if tree.depth[v] > r:
            bad.append(tree.keys[v])
        elif tree.depth[v] == r:
            rand.append(tree.keys[v])
    return BarrierReport(thr, bad, rand, strict)


@dataclass
class BoundaryReport:
    """Running-maximum boundary fit: stop once ``max >= psi(value)``.

    ``psi[x]`` is the smallest running maximum at which mass stops at ``x``.
    Violations are diagnostics: with atoms or a short horizon optimal flows
    need not have this form.
    """

    psi: dict[int, int | None]
    witnesses: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.witnesses

    def records(self) -> list[tuple[str, str]]:
        return [(str(x), "inf" if p is None else str(p)) for x, p in sorted(self.psi.items())]


def azema_yor_structure(flow: StoppingFlow, tree: PathTree | None = None, eps=None) -> BoundaryReport:
    tree = flow.tree if tree is None else tree
    if tree.running_max is None:
        raise ValueError("boundary fit needs running maxima (FULL or time-value-max tree)")
    eps = (0 if flow.exact else 1e-7) if eps is None else eps
    psi: dict[int, int | None] = {int(x): None for x in tree.grid}
    for v in range(tree.n_nodes):
        if flow.stop[v] > eps:
            x, m = int(tree.value[v]), int(tree.running_max[v])
            if psi[x] is None or m < psi[x]:
                psi[x] = m
    bad = []
    for v in range(tree.n_nodes):
        p = psi[int(tree.value[v])]
        if p is not None and tree.running_max[v] >= p and flow.cont[v] > eps:
            bad.append(tree.keys[v])
    if bad:
        log.info("running-max boundary violated at %d nodes (diagnostic)", len(bad))
    return BoundaryReport(psi, bad)


# --------------------------------------------------------------------------
# exact reference solver
# --------------------------------------------------------------------------


@dataclass
class _Rule:
    """A pure stopping rule: its stop set, law on the grid rows, and payoff."""

    stop: np.ndarray
    law: list[Fraction]
    value: Fraction


def _snell(tree: PathTree, reward: list[Fraction]) -> tuple[list[Fraction], np.ndarray]:
    """Optimal stopping of ``reward`` under fair coin steps; ties stop."""
    V = list(reward)
    stop = np.ones(tree.n_nodes, dtype=bool)
    for v in range(tree.n_nodes - 1, -1, -1):
        if tree.depth[v] < tree.horizon:
            cont = (V[tree.up[v]] + V[tree.down[v]]) / 2
            if cont > reward[v]:
                V[v] = cont
                stop[v] = False
    return V, stop


def _rule_flow(tree: PathTree, stop: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = np.where(stop, 0, 1)
    f = StoppingFlow.from_kernel(tree, [Fraction(int(a)) for a in p], exact=True)
    return f.stop, f.cont


def _make_rule(tree: PathTree, stop: np.ndarray, rows: dict[int, int], payoff) -> _Rule:
    s, _ = _rule_flow(tree, stop)
    law = [Fraction(0)] * len(rows)
    val = Fraction(0)
    for v in np.flatnonzero([m != 0 for m in s]):
        law[rows[int(tree.value[v])]] += s[v]
        val += s[v] * payoff[v]
    return _Rule(stop, law, val)


@dataclass
class BruteForceResult:
    value: Fraction | None
    feasible: bool
    flow: StoppingFlow | None = None
    certificate: DualCertificate | None = None
    iterations: int = 0


def brute_force_value(
    tree: PathTree,
    mu: TargetMeasure,
    xi: PayoffSpec | np.ndarray,
    max_iter: int = 20000,
) -> BruteForceResult:
    """Exact optimum of the flow LP by column generation over pure stopping rules.

    The master problem keeps one equality row per grid point (the marginal)
    and is solved by a rational revised simplex with artificial variables in
    phase one and a lexicographic ratio test. Pricing maximizes
    ``E[xi(tau) - y(B_tau)]`` over stopping times by backward induction.
    """
    if not tree.is_full:
        raise ResourceError("brute_force_value needs a FULL tree")
    if tree.horizon > BRUTE_FORCE_MAX_N:
        raise ResourceError(f"brute_force_value is capped at horizon {BRUTE_FORCE_MAX_N}")
    payoff = payoff_vector(xi, tree, exact=True) if isinstance(xi, PayoffSpec) else as_mode(xi, True)
    pts = marginal_points(tree, mu)
    if any(not (-tree.horizon <= x <= tree.horizon) for x in mu.points):
        return BruteForceResult(None, False)
    rows = {x: i for i, x in enumerate(pts)}
    m = len(pts)
    b = [mu.weight(x) for x in pts]

    # columns: ("art", i) or ("rule", _Rule); basis holds one column per row
    cols: list = [("art", i) for i in range(m)]
    basis = list(range(m))
    Binv = [[Fraction(int(i == j)) for j in range(m)] for i in range(m)]
    xB = list(b)
    iterations = 0

    def cost(j, phase):
        kind, data = cols[j]
        if kind == "art":
            return Fraction(-1) if phase == 1 else Fraction(0)
        return Fraction(0) if phase == 1 else data.value

    def duals(phase):
        cB = [cost(j, phase) for j in basis]
        return [sum((cB[i] * Binv[i][k] for i in range(m)), Fraction(0)) for k in range(m)]

    node_rows = [rows[int(x)] for x in tree.value]

    for phase in (1, 2):
        while True:
            iterations += 1
            if iterations > max_iter:
                raise ResourceError(f"column generation did not converge in {max_iter} iterations")
            y = duals(phase)
            reward = [(-y[node_rows[v]] if phase == 1 else payoff[v] - y[node_rows[v]]) for v in range(tree.n_nodes)]
            V, stop = _snell(tree, reward)
            if V[tree.root] <= 0:
                break
            rule = _make_rule(tree, stop, rows, payoff)
            cols.append(("rule", rule))
            j = len(cols) - 1
            a = rule.law
            d = [sum((Binv[i][k] * a[k] for k in range(m) if a[k] != 0), Fraction(0)) for i in range(m)]
            leave = _ratio_test(d, xB, Binv, basis, cols, phase)
            if leave is None:
                raise RuntimeError("master problem unbounded; the flow polytope is bounded")
            piv = d[leave]
            Binv[leave] = [a_ / piv for a_ in Binv[leave]]
            xB[leave] = xB[leave] / piv
            for i in range(m):
                if i != leave and d[i] != 0:
                    f = d[i]
                    Binv[i] = [p - f * q for p, q in zip(Binv[i], Binv[leave])]
                    xB[i] = xB[i] - f * xB[leave]
            basis[leave] = j
        if phase == 1:
            infeas = sum((xB[i] for i, j in enumerate(basis) if cols[j][0] == "art"), Fraction(0))
            if infeas > 0:
                return BruteForceResult(None, False, iterations=iterations)

    value = sum((xB[i] * cost(j, 2) for i, j in enumerate(basis)), Fraction(0))
    stop, cont = zeros(tree.n_nodes, True), zeros(tree.n_nodes, True)
    for i, j in enumerate(basis):
        if cols[j][0] == "rule" and xB[i] != 0:
            s, c = _rule_flow(tree, cols[j][1].stop)
            stop = stop + xB[i] * s
            cont = cont + xB[i] * c
    flow = StoppingFlow(tree, stop, cont, exact=True)
    y = duals(2)
    lam = {x: y[rows[x]] for x in pts}
    reward = [payoff[v] - lam[int(tree.value[v])] for v in range(tree.n_nodes)]
    S, _ = _snell(tree, reward)
    cert = DualCertificate(tree, payoff, lam, S, exact=True)
    return BruteForceResult(value, True, flow, cert, iterations)


def _ratio_test(d, xB, Binv, basis, cols, phase):
    """Leaving row by the lexicographic rule.

    In phase two a basic artificial (necessarily at level 0) leaves as soon
    as the entering column touches its row, which keeps it at zero.
    """
    m = len(d)
    if phase == 2:
        for i in range(m):
            if cols[basis[i]][0] == "art" and d[i] != 0:
                return i
    best, best_key = None, None
    for i in range(m):
        if d[i] > 0:
            key = [xB[i] / d[i]] + [Binv[i][k] / d[i] for k in range(m)]
            if best_key is None or key < best_key:
                best, best_key = i, key
    return best
