"""The embedding problem as a flow LP over the walk tree.

A randomized stopping rule is described by how much probability mass stops
and how much continues at every node. Continuing mass splits evenly over the
two children, masses balance at every node, nothing continues past the
horizon, and the stopped mass must reproduce the target law. Maximizing the
expected payoff over this polytope gives the value ``P(mu)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import as_mode, fmt_number, to_fraction, zeros
from .errors import InfeasibleEmbedding, ResourceError
from .lp import INFEASIBLE, OPTIMAL, LinearProgram, LPSolution, solve_lp
from .walkspace import PathTree, PayoffSpec, TargetMeasure, payoff_vector, statistic_map

log = logging.getLogger(__name__)

EXACT_NODE_CAP = 1023  # FULL horizon 9; exact certification beyond this is slow


@dataclass
class StoppingFlow:
    """Stop and continue mass per node of ``tree``."""

    tree: PathTree
    stop: np.ndarray
    cont: np.ndarray
    exact: bool = True

    def __post_init__(self):
        self.stop = as_mode(self.stop, self.exact)
        self.cont = as_mode(self.cont, self.exact)
        n = self.tree.n_nodes
        if len(self.stop) != n or len(self.cont) != n:
            raise ValueError(f"flow arrays must have length {n}")

    @classmethod
    def from_kernel(cls, tree: PathTree, p_continue, exact: bool = True) -> "StoppingFlow":
        """Flow generated by continuing with probability ``p_continue[v]`` at each node."""
        q = as_mode(p_continue, exact)
        stop, cont = zeros(tree.n_nodes, exact), zeros(tree.n_nodes, exact)
        inflow = zeros(tree.n_nodes, exact)
        inflow[tree.root] = Fraction(1) if exact else 1.0
        for v in range(tree.n_nodes):  # ids are depth ordered
            pv = q[v] if tree.depth[v] < tree.horizon else 0 * q[v]
            cont[v] = inflow[v] * pv
            stop[v] = inflow[v] - cont[v]
            if tree.depth[v] < tree.horizon:
                half = cont[v] / 2
                inflow[tree.up[v]] += half
                inflow[tree.down[v]] += half
        return cls(tree, stop, cont, exact)

    def inflow(self) -> np.ndarray:
        t = self.tree
        out = zeros(t.n_nodes, self.exact)
        out[t.root] = Fraction(1) if self.exact else 1.0
        for v in np.flatnonzero(t.internal):
            half = self.cont[v] / 2
            out[t.up[v]] += half
            out[t.down[v]] += half
        return out

    def balance_residual(self) -> float:
        """Largest violation of balance, sign and horizon constraints."""
        res = self.stop + self.cont - self.inflow()
        worst = max(float(abs(r)) for r in res)
        worst = max(worst, -float(min(self.stop)), -float(min(self.cont)))
        leaf_cont = self.cont[self.tree.leaves]
        if len(leaf_cont):
            worst = max(worst, max(float(abs(c)) for c in leaf_cont))
        return worst

    def is_feasible_for(self, mu: TargetMeasure, tol: float = 0.0) -> bool:
        if self.balance_residual() > tol:
            return False
        law = _law_dict(self)
        pts = set(law) | set(mu.points)
        return all(abs(float(law.get(x, 0) - (mu.weight(x) if self.exact else float(mu.weight(x))))) <= tol for x in pts)

    @property
    def total_stop(self):
        return sum(self.stop, Fraction(0) if self.exact else 0.0)

    def continue_probability(self) -> np.ndarray:
        """``c / (s + c)`` where mass arrives, 0 elsewhere."""
        i = self.stop + self.cont
        out = zeros(self.tree.n_nodes, self.exact)
        for v in range(self.tree.n_nodes):
            if i[v] > 0:
                out[v] = self.cont[v] / i[v]
        return out

    def mix(self, other: "StoppingFlow", weight) -> "StoppingFlow":
        """``(1 - weight) * self + weight * other``."""
        w = to_fraction(weight) if self.exact else float(weight)
        return StoppingFlow(
            self.tree, (1 - w) * self.stop + w * other.stop, (1 - w) * self.cont + w * other.cont, self.exact
        )

    def to_float(self) -> "StoppingFlow":
        return StoppingFlow(self.tree, self.stop, self.cont, exact=False)

    def records(self) -> list[tuple[str, str, str]]:
        """``(node key, stop mass, continue mass)`` rows in node order."""
        return [
            (self.tree.keys[v], fmt_number(self.stop[v], self.exact), fmt_number(self.cont[v], self.exact))
            for v in range(self.tree.n_nodes)
        ]


def _law_dict(flow: StoppingFlow) -> dict[int, object]:
    law: dict[int, object] = {}
    for v in range(flow.tree.n_nodes):
        s = flow.stop[v]
        if s != 0:
            x = int(flow.tree.value[v])
            law[x] = law.get(x, 0) + s
    return law


def stopped_law(flow: StoppingFlow, tol: float = 1e-7) -> TargetMeasure:
    """Law of the stopped value; exact for rational flows, ``tol``-checked otherwise."""
    law = _law_dict(flow)
    if flow.exact:
        return TargetMeasure.from_pairs(law.items())
    pairs = [(x, w) for x, w in law.items() if w > 0]
    return TargetMeasure(
        tuple(x for x, _ in pairs), tuple(to_fraction(float(w)) for _, w in pairs), tolerance=tol
    )


def expected_payoff(flow: StoppingFlow, xi: PayoffSpec | np.ndarray):
    vals = payoff_vector(xi, flow.tree, flow.exact) if isinstance(xi, PayoffSpec) else as_mode(xi, flow.exact)
    return sum((s * x for s, x in zip(flow.stop, vals) if s != 0), Fraction(0) if flow.exact else 0.0)


# --------------------------------------------------------------------------
# LP
# --------------------------------------------------------------------------


@dataclass
class PrimalLP:
    """Flow LP together with the maps from nodes and grid points to LP indices."""

    lp: LinearProgram
    tree: PathTree
    mu: TargetMeasure
    payoff: np.ndarray
    s_col: np.ndarray
    c_col: np.ndarray
    balance_rows: np.ndarray
    marginal_rows: dict[int, int] = field(default_factory=dict)

    @property
    def n_constraints(self) -> int:
        return self.lp.n_rows


def marginal_points(tree: PathTree, mu: TargetMeasure) -> list[int]:
    return sorted(set(int(x) for x in tree.grid) | set(mu.points))


def assemble_primal(tree: PathTree, mu: TargetMeasure, xi: PayoffSpec | None = None) -> PrimalLP:
    """Flow LP: variables ``s(v), c(v)``, node balance and marginal rows, objective ``sum s xi``.

    Without ``xi`` the objective is zero (pure feasibility).
    """
    n = tree.n_nodes
    payoff = payoff_vector(xi, tree, exact=True) if xi is not None else as_mode([0] * n, True)
    lp = LinearProgram(maximize=True)
    s_col = np.array([lp.add_var(f"s[{tree.keys[v]}]", 0, None, payoff[v]) for v in range(n)])
    c_col = np.array(
        [lp.add_var(f"c[{tree.keys[v]}]", 0, 0 if tree.depth[v] == tree.horizon else None) for v in range(n)]
    )
    rows = []
    for v in range(n):
        coeffs = {int(s_col[v]): 1, int(c_col[v]): 1}
        for p in tree.parents[v]:
            coeffs[int(c_col[p])] = coeffs.get(int(c_col[p]), 0) - Fraction(1, 2)
        rows.append(lp.add_eq(coeffs, 1 if v == tree.root else 0, f"balance[{tree.keys[v]}]"))
    by_value: dict[int, list[int]] = {}
    for v in range(n):
        by_value.setdefault(int(tree.value[v]), []).append(v)
    marg = {}
    for x in marginal_points(tree, mu):
        coeffs = {int(s_col[v]): 1 for v in by_value.get(x, [])}
        marg[x] = lp.add_eq(coeffs, mu.weight(x), f"marginal[{x}]")
    return PrimalLP(lp, tree, mu, payoff, s_col, c_col, np.array(rows), marg)


def _flow_from_solution(problem: PrimalLP, sol: LPSolution) -> StoppingFlow:
    x = sol.x
    flow = StoppingFlow(problem.tree, x[problem.s_col], x[problem.c_col], sol.exact)
    if not sol.exact:
        # clip solver noise below zero
        flow.stop = np.maximum(flow.stop, 0.0)
        flow.cont = np.maximum(flow.cont, 0.0)
    return flow


def _check_exact_size(tree: PathTree, exact: bool):
    if exact and tree.n_nodes > EXACT_NODE_CAP:
        raise ResourceError(f"exact mode is capped at {EXACT_NODE_CAP} nodes, tree has {tree.n_nodes}")


def solve_primal(
    problem: PrimalLP,
    exact: bool = False,
    tol: float = 1e-9,
    seed: int | None = None,
) -> tuple[StoppingFlow, object]:
    """Optimal flow and value ``P(mu)``.

    With ``seed`` the returned flow is a pseudo-randomly chosen vertex of the
    optimal face (different seeds expose different optimal vertices).

    Raises
    ------
    InfeasibleEmbedding
        When ``mu`` cannot be embedded within the horizon; carries a certificate.
    """
    _check_exact_size(problem.tree, exact)
    sol = solve_lp(problem.lp, exact=exact, tol=tol)
    if sol.status == INFEASIBLE:
        ok, cert = feasibility(problem.mu, problem.tree, exact=exact, tol=tol)
        if ok:
            raise InfeasibleEmbedding("solver reported infeasibility but a feasible flow exists")
        raise InfeasibleEmbedding(f"target law cannot be embedded within horizon {problem.tree.horizon}", cert)
    if sol.status != OPTIMAL:
        raise InfeasibleEmbedding(f"unexpected LP status {sol.status}")
    value = sol.objective
    if seed is not None:
        sol = _random_optimal_vertex(problem, value, seed, exact, tol)
        value = problem.lp.objective(sol.x) if exact else value
    flow = _flow_from_solution(problem, sol)
    return flow, value


def _random_optimal_vertex(problem: PrimalLP, value, seed: int, exact: bool, tol: float) -> LPSolution:
    rng = np.random.default_rng(seed)
    lp = problem.lp.copy()
    coeffs = {j: c for j, c in enumerate(lp.cost) if c != 0}
    if exact:
        lp.add_eq(coeffs, value, "optimal_face")
    else:
        lp.add_row(coeffs, float(value) - tol * (1 + abs(float(value))), None, "optimal_face")
    lp.cost = [Fraction(int(k)) for k in rng.integers(-1000, 1001, size=lp.n_vars)]
    sol = solve_lp(lp, exact=exact, tol=tol, seed=seed)
    if sol.status != OPTIMAL:
        raise InfeasibleEmbedding(f"optimal face search returned {sol.status}")
    return sol


def optimal_vertices(
    problem: PrimalLP, seeds, exact: bool = True, tol: float = 1e-9
) -> tuple[list[StoppingFlow], object]:
    """Distinct optimal vertices found over ``seeds`` (the plain solve included)."""
    flow, value = solve_primal(problem, exact=exact, tol=tol)
    found = [flow]
    keys = {_flow_key(flow)}
    for seed in seeds:
        f, _ = solve_primal(problem, exact=exact, tol=tol, seed=seed)
        k = _flow_key(f)
        if k not in keys:
            keys.add(k)
            found.append(f)
    return found, value


def _flow_key(flow: StoppingFlow) -> tuple:
    if flow.exact:
        return tuple(flow.stop) + tuple(flow.cont)
    return tuple(np.round(np.concatenate([flow.stop, flow.cont]), 9))


# --------------------------------------------------------------------------
# feasibility
# --------------------------------------------------------------------------


@dataclass
class InfeasibilityCertificate:
    """A function ``g`` with ``mu(g) = 1`` and a supermartingale ``S`` with
    ``S(root) = 0`` dominating ``g(value)`` at every node.

    Optional stopping gives ``E[g(B_tau)] <= 0`` for every flow, so no flow
    can have law ``mu``.
    """

    tree: PathTree
    g: dict[int, object]
    S: np.ndarray

    def check(self, mu: TargetMeasure, tol: float = 0.0) -> bool:
        t = self.tree
        if self.S[t.root] > tol:
            return False
        if abs(float(mu.integrate(lambda x: to_fraction(self.g.get(x, 0))) - 1)) > tol:
            return False
        for v in range(t.n_nodes):
            if self.S[v] < self.g.get(int(t.value[v]), 0) - tol:
                return False
            if t.depth[v] < t.horizon and self.S[v] < (self.S[t.up[v]] + self.S[t.down[v]]) / 2 - tol:
                return False
        return True


def feasibility(
    mu: TargetMeasure, tree: PathTree, exact: bool = True, tol: float = 1e-9
) -> tuple[bool, InfeasibilityCertificate | None]:
    """Whether ``mu`` is embeddable within the horizon; a certificate when not."""
    _check_exact_size(tree, exact)
    problem = assemble_primal(tree, mu)
    sol = solve_lp(problem.lp, exact=exact, tol=tol)
    if sol.status == OPTIMAL:
        return True, None
    lp = LinearProgram()
    pts = marginal_points(tree, mu)
    g = {x: lp.add_var(f"g[{x}]", None, None) for x in pts}
    S = [lp.add_var(f"S[{tree.keys[v]}]", None, None) for v in range(tree.n_nodes)]
    lp.add_row({S[tree.root]: 1}, None, 0, "root")
    lp.add_eq({g[x]: mu.weight(x) for x in mu.points}, 1, "normalization")
    for v in range(tree.n_nodes):
        lp.add_row({S[v]: 1, g[int(tree.value[v])]: -1}, 0, None, f"dominate[{tree.keys[v]}]")
        if tree.depth[v] < tree.horizon:
            lp.add_row(
                {S[v]: 1, S[tree.up[v]]: Fraction(-1, 2), S[tree.down[v]]: Fraction(-1, 2)},
                0,
                None,
                f"super[{tree.keys[v]}]",
            )
    csol = solve_lp(lp, exact=exact, tol=tol)
    if csol.status != OPTIMAL:
        log.warning("no infeasibility certificate found (status %s)", csol.status)
        return False, None
    cert = InfeasibilityCertificate(tree, {x: csol.x[j] for x, j in g.items()}, csol.x[np.array(S)])
    return False, cert


# --------------------------------------------------------------------------
# FULL <-> lattice
# --------------------------------------------------------------------------


def aggregate_flow(flow: StoppingFlow, lattice: PathTree) -> StoppingFlow:
    """Sum a FULL flow onto the nodes of ``lattice``."""
    m = statistic_map(flow.tree, lattice)
    stop, cont = zeros(lattice.n_nodes, flow.exact), zeros(lattice.n_nodes, flow.exact)
    for v in range(flow.tree.n_nodes):
        stop[m[v]] += flow.stop[v]
        cont[m[v]] += flow.cont[v]
    return StoppingFlow(lattice, stop, cont, flow.exact)


def lift_flow(flow: StoppingFlow, full: PathTree) -> StoppingFlow:
    """FULL flow that uses the lattice flow's continuation kernel at every path."""
    m = statistic_map(full, flow.tree)
    q = flow.continue_probability()
    return StoppingFlow.from_kernel(full, [q[m[v]] for v in range(full.n_nodes)], flow.exact)
