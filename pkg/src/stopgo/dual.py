"""Supermartingale dual of the flow LP.

A dual certificate is a terminal function ``lam`` on the value grid together
with a node process ``S`` that starts at zero, is a supermartingale under the
fair coin step law, and satisfies ``lam(value) + S >= xi`` at every node. Its
cost is ``mu(lam)``. Optional stopping makes every certificate an upper bound
on every flow's expected payoff; finite LP duality makes the bounds meet.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._numeric import as_mode, fmt_number, to_fraction, zeros
from ._sets import ContactSet, Provenance
from .errors import DualityGapError, InfeasibleEmbedding
from .lp import OPTIMAL, UNBOUNDED, LinearProgram, solve_lp
from .primal import StoppingFlow, _check_exact_size, feasibility, marginal_points
from .walkspace import PathTree, PayoffSpec, TargetMeasure, payoff_vector

log = logging.getLogger(__name__)


@dataclass
class DualCertificate:
    """``(lam, S)`` for the payoff values ``payoff`` on ``tree``."""

    tree: PathTree
    payoff: np.ndarray
    lam: dict[int, object]
    S: np.ndarray
    exact: bool = True

    def __post_init__(self):
        self.payoff = as_mode(self.payoff, self.exact)
        self.S = as_mode(self.S, self.exact)
        conv = to_fraction if self.exact else float
        self.lam = {int(x): conv(v) for x, v in self.lam.items()}

    def lam_at(self, x: int):
        return self.lam.get(int(x), Fraction(0) if self.exact else 0.0)

    @property
    def slack(self) -> np.ndarray:
        """Domination slack ``lam(value) + S - xi`` per node."""
        lam_v = as_mode([self.lam_at(x) for x in self.tree.value], self.exact)
        return lam_v + self.S - self.payoff

    @property
    def drift(self) -> np.ndarray:
        """``S(v) - (S(up) + S(down)) / 2`` at internal nodes, 0 at the horizon."""
        t = self.tree
        out = zeros(t.n_nodes, self.exact)
        inner = np.flatnonzero(t.internal)
        out[inner] = self.S[inner] - (self.S[t.up[inner]] + self.S[t.down[inner]]) / 2
        return out

    @property
    def growth(self) -> float:
        """Smallest ``L`` with ``|S(v)| <= L (1 + |value(v)|)``; diagnostic only."""
        return max(float(abs(s)) / (1 + abs(int(x))) for s, x in zip(self.S, self.tree.value))

    def value(self, mu: TargetMeasure):
        if self.exact:
            return mu.integrate(self.lam_at)
        return float(sum(float(w) * self.lam_at(x) for x, w in zip(mu.points, mu.weights)))

    def violations(self, tol: float = 0.0) -> list[tuple[str, str, float]]:
        """``(kind, node key, amount)`` for every broken constraint."""
        out = []
        if abs(float(self.S[self.tree.root])) > tol:
            out.append(("root", self.tree.keys[self.tree.root], float(self.S[self.tree.root])))
        for kind, arr in (("domination", self.slack), ("supermartingale", self.drift)):
            for v in np.flatnonzero([float(a) < -tol for a in arr]):
                out.append((kind, self.tree.keys[v], float(arr[v])))
        return out

    def is_feasible(self, tol: float = 0.0) -> bool:
        return not self.violations(tol)

    def lam_records(self) -> list[tuple[str, str]]:
        return [(str(x), fmt_number(self.lam[x], self.exact)) for x in sorted(self.lam)]

    def S_records(self) -> list[tuple[str, str]]:
        return [(self.tree.keys[v], fmt_number(self.S[v], self.exact)) for v in range(self.tree.n_nodes)]


@dataclass
class DualLP:
    lp: LinearProgram
    tree: PathTree
    mu: TargetMeasure
    payoff: np.ndarray
    lam_col: dict[int, int]
    S_col: np.ndarray
    domination_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    super_rows: dict[int, int] = field(default_factory=dict)


def assemble_dual(tree: PathTree, xi: PayoffSpec | np.ndarray, mu: TargetMeasure) -> DualLP:
    """Dual LP: free ``lam(x)`` and ``S(v)``; domination, supermartingale and ``S(root) = 0`` rows.

    ``lam`` lives on the value grid plus the support of ``mu``; a support
    point outside the grid leaves its ``lam`` unconstrained, which makes the
    dual unbounded exactly when the primal has no feasible flow.
    """
    payoff = payoff_vector(xi, tree, exact=True) if isinstance(xi, PayoffSpec) else as_mode(xi, True)
    lp = LinearProgram(maximize=False)
    lam_col = {x: lp.add_var(f"lam[{x}]", None, None, mu.weight(x)) for x in marginal_points(tree, mu)}
    S_col = np.array([lp.add_var(f"S[{tree.keys[v]}]", None, None) for v in range(tree.n_nodes)])
    dom = []
    for v in range(tree.n_nodes):
        dom.append(
            lp.add_row({lam_col[int(tree.value[v])]: 1, int(S_col[v]): 1}, payoff[v], None, f"dominate[{tree.keys[v]}]")
        )
    sup = {}
    for v in np.flatnonzero(tree.internal):
        u, d = tree.children(int(v))
        sup[int(v)] = lp.add_row(
            {int(S_col[v]): 1, int(S_col[u]): Fraction(-1, 2), int(S_col[d]): Fraction(-1, 2)},
            0,
            None,
            f"super[{tree.keys[v]}]",
        )
    lp.add_eq({int(S_col[tree.root]): 1}, 0, "normalization")
    return DualLP(lp, tree, mu, payoff, lam_col, S_col, np.array(dom), sup)


def solve_dual(problem: DualLP, exact: bool = False, tol: float = 1e-9) -> tuple[DualCertificate, object]:
    """Optimal certificate and value ``D(mu)``.

    Raises
    ------
    InfeasibleEmbedding
        When the dual is unbounded, i.e. ``mu`` has no embedding within the horizon.
    """
    _check_exact_size(problem.tree, exact)
    sol = solve_lp(problem.lp, exact=exact, tol=tol)
    if sol.status == UNBOUNDED:
        _, cert = feasibility(problem.mu, problem.tree, exact=exact, tol=tol)
        raise InfeasibleEmbedding("dual is unbounded: target law not embeddable within the horizon", cert)
    if sol.status != OPTIMAL:
        raise InfeasibleEmbedding(f"dual LP status {sol.status}")
    x = sol.x
    cert = DualCertificate(
        problem.tree,
        problem.payoff,
        {k: x[j] for k, j in problem.lam_col.items()},
        x[problem.S_col],
        exact,
    )
    value = sol.objective
    return cert, value


def wald_certificate(tree: PathTree, mu: TargetMeasure, exact: bool = True) -> DualCertificate:
    """The martingale pair ``lam(x) = -x^2``, ``S = value^2 - depth`` for ``xi = -tau``."""
    payoff = payoff_vector(PayoffSpec.neg_tau(), tree, exact)
    lam = {x: -x * x for x in marginal_points(tree, mu)}
    S = [int(x) * int(x) - int(t) for x, t in zip(tree.value, tree.depth)]
    return DualCertificate(tree, payoff, lam, S, exact)


@dataclass
class GapReport:
    P: object
    D: object
    gap: object
    relative: float
    tol: float
    exact: bool

    @property
    def ok(self) -> bool:
        if self.exact:
            return self.gap == 0
        return self.relative <= self.tol


def verify_duality(P_value, D_value, tol: float = 1e-7, exact: bool | None = None, raise_on_gap: bool = True) -> GapReport:
    """Compare primal and dual values.

    Exact inputs must agree identically; floating inputs within
    ``tol * (1 + |P|)``.

    Raises
    ------
    DualityGapError
        On a gap beyond tolerance, unless ``raise_on_gap`` is false.
    """
    if exact is None:
        exact = isinstance(P_value, Fraction) and isinstance(D_value, Fraction)
    if exact:
        gap = to_fraction(D_value) - to_fraction(P_value)
    else:
        gap = float(D_value) - float(P_value)
    rel = abs(float(gap)) / (1 + abs(float(P_value)))
    rep = GapReport(P_value, D_value, gap, rel, tol, exact)
    if raise_on_gap and not rep.ok:
        raise DualityGapError(f"duality gap {float(gap):.3e} (relative {rel:.3e}) exceeds tolerance", rep)
    return rep


def contact_set(cert: DualCertificate, eps: float | None = None) -> ContactSet:
    """Nodes where domination is tight: ``slack <= eps``.

    ``eps`` defaults to 0 for exact certificates and 1e-7 otherwise.
    """
    if eps is None:
        eps = 0 if cert.exact else 1e-7
    sl = cert.slack
    return ContactSet(cert.tree, [v for v in range(cert.tree.n_nodes) if sl[v] <= eps], Provenance.CERTIFICATE)


@dataclass
class SlacknessReport:
    stop_violations: list[tuple[str, object, object]]
    continue_violations: list[tuple[str, object, object]]

    @property
    def ok(self) -> bool:
        return not self.stop_violations and not self.continue_violations


def check_slackness(flow: StoppingFlow, cert: DualCertificate, eps: float | None = None) -> SlacknessReport:
    """Complementary slackness between a flow and a certificate.

    Stop mass may only sit where domination is tight; continue mass only
    where the supermartingale has no drift. Each violation lists the node key,
    the offending mass and the slack.
    """
    if eps is None:
        eps = 0 if (flow.exact and cert.exact) else 1e-7
    sl, dr = cert.slack, cert.drift
    keys = flow.tree.keys
    stop_bad = [(keys[v], flow.stop[v], sl[v]) for v in range(flow.tree.n_nodes) if flow.stop[v] > eps and sl[v] > eps]
    cont_bad = [(keys[v], flow.cont[v], dr[v]) for v in range(flow.tree.n_nodes) if flow.cont[v] > eps and dr[v] > eps]
    return SlacknessReport(stop_bad, cont_bad)
