"""Stop-go pairs, conditional continuation laws and the monotonicity check.

Two stopped prefixes ``v`` and ``v'`` ending at the same value form a stop-go
pair when stopping at ``v`` and letting ``v'`` go on with any continuation
``r`` pays strictly more than the other way round::

    xi(v) + xi(v' (x) r) > xi(v (x) r) + xi(v')   for every r with depth(r) >= 1.

The conditional variant replaces "every r" by an expectation over the
optimizer's own continuation law after ``v``. An optimal flow cannot continue
at ``v`` and stop at ``v'`` for such a pair, since swapping the two would
improve it. :func:`verify_MP` checks exactly that on a solved flow.

Everything here works on FULL trees, where continuations are enumerable.
Continuations are addressed by relative FULL node ids ``r`` (``r = 0`` is
the empty continuation).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

import numpy as np

from ._numeric import fmt_number, scaled_ints, to_fraction
from ._sets import ContactSet, Provenance
from .primal import StoppingFlow
from .walkspace import PathTree, PayoffSpec, payoff_vector, relative_depth

log = logging.getLogger(__name__)

__all__ = [
    "ContactSet",
    "Provenance",
    "Flavor",
    "SGPairSet",
    "ConditionalFamily",
    "MPReport",
    "support_set",
    "lower_extension",
    "enumerate_SG",
    "conditional_family",
    "enumerate_SG_star",
    "project_SG",
    "verify_MP",
    "tower_residual",
]

QUADRATIC_WARN_NODES = 4096
BRANCH_TOL = 1e-12


class Flavor(str, Enum):
    SG = "SG"
    SG_STAR = "SG_STAR"


def _default_eps(exact: bool, eps):
    return (0 if exact else 1e-7) if eps is None else eps


def _default_eps_sg(exact: bool, eps_sg):
    return (0 if exact else 1e-9) if eps_sg is None else eps_sg


def _n_rel(k: int) -> int:
    """Number of relative nodes of depth at most ``k``."""
    return (1 << (k + 1)) - 1


def support_set(flow: StoppingFlow, eps=None) -> ContactSet:
    """Nodes carrying stop mass above ``eps``."""
    eps = _default_eps(flow.exact, eps)
    return ContactSet(flow.tree, [v for v in range(flow.tree.n_nodes) if flow.stop[v] > eps], Provenance.SUPPORT)


def lower_extension(gamma: ContactSet) -> ContactSet:
    """Strict ancestors of the members of ``gamma`` (prefixes stopped strictly earlier)."""
    tree = gamma.tree
    out: set[int] = set()
    frontier = list(gamma.nodes)
    while frontier:
        nxt = []
        for v in frontier:
            for p in tree.parents[v]:
                if p not in out:
                    out.add(p)
                    nxt.append(p)
        frontier = nxt
    return ContactSet(tree, out, Provenance.DERIVED)


# --------------------------------------------------------------------------
# pair sets
# --------------------------------------------------------------------------


@dataclass
class SGPairSet:
    """Ordered pairs ``(v, v')`` with equal endpoint values.

    ``pairs`` hold the strict members with their margins (smallest gap).
    ``censored`` holds pairs the horizon cannot decide, with the margin seen
    on the representable part (``None`` when nothing is representable).
    ``rejected`` holds non-members as ``(v, v', smallest gap, r)`` where ``r``
    is the first continuation (relative id) whose gap is not above the
    threshold.
    """

    flavor: Flavor
    tree: PathTree
    exact: bool
    pairs: list[tuple[int, int]] = field(default_factory=list)
    margins: list = field(default_factory=list)
    censored: list[tuple[int, int, object]] = field(default_factory=list)
    rejected: list[tuple[int, int, object, int]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.as_set()

    def as_set(self) -> set[tuple[int, int]]:
        return set(self.pairs)

    def sort(self) -> "SGPairSet":
        order = sorted(range(len(self.pairs)), key=lambda i: self.pairs[i])
        self.pairs = [self.pairs[i] for i in order]
        self.margins = [self.margins[i] for i in order]
        self.censored.sort(key=lambda t: (t[0], t[1]))
        self.rejected.sort(key=lambda t: (t[0], t[1]))
        return self

    def restrict(self, first: ContactSet | None = None, second: ContactSet | None = None) -> "SGPairSet":
        keep = [
            i
            for i, (v, w) in enumerate(self.pairs)
            if (first is None or v in first) and (second is None or w in second)
        ]
        return SGPairSet(
            self.flavor, self.tree, self.exact, [self.pairs[i] for i in keep], [self.margins[i] for i in keep]
        )

    def records(self) -> list[tuple[str, str, str, str]]:
        k = self.tree.keys
        return [
            (k[v], k[w], self.flavor.value, fmt_number(m, self.exact)) for (v, w), m in zip(self.pairs, self.margins)
        ]

    def witness_records(self) -> list[tuple[str, str, str, str]]:
        """Rejected pairs with their first non-strict continuation, as relative key."""
        k = self.tree.keys
        return [(k[v], k[w], fmt_number(m, self.exact), _rel_key(r)) for v, w, m, r in self.rejected]


def _rel_key(r: int) -> str:
    d = int(relative_depth(np.array([r]))[0])
    c = r + 1 - (1 << d)
    return "^" + "".join("+" if (c >> i) & 1 else "-" for i in range(d))


def _same_value_groups(tree: PathTree) -> dict[int, np.ndarray]:
    groups: dict[int, list[int]] = {}
    for v in range(tree.n_nodes):
        groups.setdefault(int(tree.value[v]), []).append(v)
    return {x: np.array(vs) for x, vs in groups.items()}


class _Payoff:
    """Payoff values in a fast arithmetic: scaled integers (exact) or floats."""

    def __init__(self, xi: PayoffSpec | np.ndarray, tree: PathTree, exact: bool):
        vals = payoff_vector(xi, tree, exact=True) if isinstance(xi, PayoffSpec) else np.asarray(xi)
        self.exact = exact
        if exact:
            self.vals, self.scale = scaled_ints(vals)
        else:
            self.vals, self.scale = np.array([float(v) for v in vals]), 1
        self.tree = tree
        self._inc: dict[int, np.ndarray] = {}

    def increments(self, v: int) -> np.ndarray:
        """``xi(v (x) r) - xi(v)`` over all relative ``r`` that fit under the horizon."""
        a = self._inc.get(v)
        if a is None:
            a = self.vals[self.tree.subtree(v)] - self.vals[v]
            self._inc[v] = a
        return a

    def unscale(self, x):
        if self.exact:
            return Fraction(int(x), self.scale)
        return float(x)


def enumerate_SG(xi: PayoffSpec | np.ndarray, tree: PathTree, eps_sg=None, exact: bool = True) -> SGPairSet:
    """All stop-go pairs of ``tree`` with margin above ``eps_sg``.

    Continuations range over depths ``1 .. N - max(theta, theta')``. Pairs
    with ``max(theta, theta') = N`` admit no continuation and are listed as
    censored.
    """
    tree._require_full("enumerate_SG")
    if tree.n_nodes > QUADRATIC_WARN_NODES:
        log.warning("SG enumeration is quadratic in the node count (%d nodes)", tree.n_nodes)
    eps_sg = _default_eps_sg(exact, eps_sg)
    pay = _Payoff(xi, tree, exact)
    thr = _threshold(eps_sg, pay)
    N = tree.horizon
    out = SGPairSet(Flavor.SG, tree, exact)
    for members in _same_value_groups(tree).values():
        for v in members:
            for w in members:
                m = N - max(int(tree.depth[v]), int(tree.depth[w]))
                if m == 0:
                    out.censored.append((int(v), int(w), None))
                    continue
                L = _n_rel(m)
                gaps = pay.increments(w)[1:L] - pay.increments(v)[1:L]
                g = _scalar(gaps.min(), exact)
                if g > thr:
                    out.pairs.append((int(v), int(w)))
                    out.margins.append(pay.unscale(g))
                else:
                    # first continuation breaking strictness
                    j = int(np.flatnonzero(gaps <= thr)[0])
                    out.rejected.append((int(v), int(w), pay.unscale(g), j + 1))
    return out.sort()


def _scalar(g, exact: bool):
    return int(g) if exact else float(g)


def _threshold(eps, pay: _Payoff):
    """``eps`` expressed in the scaled arithmetic of ``pay``."""
    if pay.exact:
        f = to_fraction(eps) * pay.scale
        return f  # compare ints with a Fraction exactly
    return float(eps)


# --------------------------------------------------------------------------
# conditional laws
# --------------------------------------------------------------------------


@dataclass
class ConditionalFamily:
    """Conditional laws of a flow given the path up to node ``v``.

    ``q1`` is the law of the stopped prefix given the path history up to
    ``depth(v)`` only: comparable nodes ``u`` (ancestors, ``v`` itself and
    descendants) get ``s(u) 2**min(depth(u), depth(v))``. ``q2`` conditions
    ``q1`` on continuing past ``v``; when that has probability zero it is the
    point mass on ``v`` (stop now, path continues freely). ``qstar`` is ``q2``
    on relative continuations of ``v``.
    """

    tree: PathTree
    node: int
    exact: bool
    q1_nodes: np.ndarray
    q1_mass: np.ndarray
    q2_nodes: np.ndarray
    q2_mass: np.ndarray
    qstar: np.ndarray
    degenerate: bool

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    @property
    def q1_continue(self):
        """``q1[T > depth(v)]``."""
        t = int(self.tree.depth[self.node])
        d = self.tree.depth[self.q1_nodes]
        return sum((m for m, dd in zip(self.q1_mass, d) if dd > t), self._zero())

    @property
    def qstar_continue(self):
        """``qstar[T > 0]``."""
        return sum(self.qstar[1:], self._zero())

    @property
    def support_depth(self) -> int:
        """Deepest relative depth charged by ``qstar``."""
        nz = np.flatnonzero([m != 0 for m in self.qstar])
        return int(relative_depth(nz).max()) if len(nz) else 0

    def totals(self) -> tuple:
        z = self._zero()
        return sum(self.q1_mass, z), sum(self.q2_mass, z), sum(self.qstar, z)


def conditional_family(flow: StoppingFlow, v: int, branch_tol: float | None = None) -> ConditionalFamily:
    tree = flow.tree
    tree._require_full("conditional_family")
    v = int(v)
    if branch_tol is None:
        branch_tol = 0 if flow.exact else BRANCH_TOL
    t = int(tree.depth[v])
    anc = np.array(tree.ancestors(v), dtype=np.int64)
    sub = tree.subtree(v)
    scale_anc = [1 << int(d) for d in tree.depth[anc]]
    q1_nodes = np.concatenate([anc, sub])
    q1_mass = np.concatenate(
        [
            np.array([flow.stop[u] * k for u, k in zip(anc, scale_anc)], dtype=flow.stop.dtype),
            flow.stop[sub] * (1 << t),
        ]
    )
    cont_prob = flow.cont[v] * (1 << t)
    qstar = np.zeros(len(sub), dtype=flow.stop.dtype)
    if flow.exact:
        qstar[:] = Fraction(0)
    degenerate = not (cont_prob > branch_tol)
    if degenerate:
        qstar[0] = 1
        q2_nodes, q2_mass = np.array([v]), qstar[:1].copy()
    else:
        qstar[1:] = flow.stop[sub[1:]] / flow.cont[v]
        q2_nodes, q2_mass = sub[1:], qstar[1:].copy()
    return ConditionalFamily(tree, v, flow.exact, q1_nodes, q1_mass, q2_nodes, q2_mass, qstar, degenerate)


def tower_residual(flow: StoppingFlow, v: int) -> float:
    """``max |Q1_v - (Q1_{v+} + Q1_{v-}) / 2|`` at an internal node."""
    tree = flow.tree
    u, d = tree.children(int(v))
    acc: dict[int, object] = {}
    for fam, w in ((conditional_family(flow, v), 1), (conditional_family(flow, u), -0.5), (conditional_family(flow, d), -0.5)):
        wt = Fraction(w) if flow.exact else w
        for n, m in zip(fam.q1_nodes, fam.q1_mass):
            acc[int(n)] = acc.get(int(n), 0) + wt * m
    return max((float(abs(a)) for a in acc.values()), default=0.0)


class _Conditionals:
    """Per-node continuation data used by the SG* tests, in fast arithmetic.

    For a non-degenerate node the continuation law is ``stop[v (x) r] / cont[v]``
    for ``r`` of depth >= 1. In exact mode masses are scaled integers and the
    law is kept unnormalized (divide by ``cont``).
    """

    def __init__(self, flow: StoppingFlow, branch_tol):
        self.flow = flow
        self.tree = flow.tree
        self.exact = flow.exact
        if self.exact:
            both, self.scale = scaled_ints(np.concatenate([flow.stop, flow.cont]))
            n = self.tree.n_nodes
            self.stop, self.cont = both[:n], both[n:]
            self.branch_tol = 0
        else:
            self.stop, self.cont, self.scale = flow.stop, flow.cont, 1
            self.branch_tol = branch_tol
        self._law: dict[int, np.ndarray] = {}
        self._fold: dict[tuple[int, int], np.ndarray] = {}

    def degenerate(self, v: int) -> bool:
        cp = self.flow.cont[v] * (1 << int(self.tree.depth[v]))
        return not (cp > self.branch_tol)

    def law(self, v: int) -> np.ndarray:
        """Unnormalized continuation masses over relative ids (entry 0 is 0)."""
        q = self._law.get(v)
        if q is None:
            sub = self.tree.subtree(v)
            q = self.stop[sub].copy()
            q[0] = 0
            self._law[v] = q
        return q

    def support_depth(self, v: int) -> int:
        q = self.law(v)
        nz = np.flatnonzero(q > 0) if not self.exact else np.flatnonzero(q != 0)
        return int(relative_depth(nz).max()) if len(nz) else 0

    def folded(self, v: int, k: int) -> np.ndarray:
        """Continuation masses with every continuation cut at relative depth ``k``."""
        key = (v, k)
        f = self._fold.get(key)
        if f is None:
            q = self.law(v)
            n = len(q)
            if n <= _n_rel(k):
                f = q
            else:
                r = np.arange(n)
                d = relative_depth(r)
                code = r + 1 - (1 << d)
                cut = np.where(d > k, (1 << k) - 1 + (code & ((1 << k) - 1)), r)
                f = np.zeros(_n_rel(k), dtype=q.dtype)
                np.add.at(f, cut, q)
            self._fold[key] = f
        return f


def _sg_star_gap(pay: _Payoff, cond: _Conditionals, v: int, w: int):
    """Scaled SG* gap of ``(v, w)`` and whether truncation was needed.

    Returns ``(g, truncated)`` where ``g`` has the sign of the gap; exact
    mode: ``g = gap * cont[v] * pay.scale`` (with ``cont`` in flow-scaled
    units), floating: ``g = gap``.
    """
    tree = pay.tree
    N = tree.horizon
    q = cond.law(v)
    kw = N - int(tree.depth[w])
    truncated = cond.support_depth(v) > kw
    qw = cond.folded(v, kw)
    inc_w = pay.increments(w)[: len(qw)]
    inc_v = pay.increments(v)[: len(q)]
    # xi(v) + E[xi(w (x) .)] - E[xi(v (x) .)] - xi(w) = E[inc_w] - E[inc_v]
    g = np.dot(qw, inc_w) - np.dot(q, inc_v)
    if not cond.exact:
        g = g / cond.flow.cont[v]
    return g, truncated


def enumerate_SG_star(
    xi: PayoffSpec | np.ndarray,
    flow: StoppingFlow,
    tree: PathTree | None = None,
    eps_sg=None,
    branch_tol: float | None = None,
    first: ContactSet | None = None,
    second: ContactSet | None = None,
) -> SGPairSet:
    """Pairs whose gap under the continuation law after ``v`` exceeds ``eps_sg``.

    Continuations that would run past the horizon after ``v'`` are cut at the
    horizon; such pairs are listed as censored whatever their truncated gap,
    with that gap as the recorded margin. Nodes where continuing has
    probability zero have gap 0 and never qualify. ``first``/``second``
    restrict the components examined.
    """
    tree = flow.tree if tree is None else tree
    tree._require_full("enumerate_SG_star")
    exact = flow.exact
    eps_sg = _default_eps_sg(exact, eps_sg)
    pay = _Payoff(xi, tree, exact)
    cond = _Conditionals(flow, BRANCH_TOL if branch_tol is None else branch_tol)
    out = SGPairSet(Flavor.SG_STAR, tree, exact)
    for members in _same_value_groups(tree).values():
        firsts = [int(v) for v in members if (first is None or v in first) and not cond.degenerate(int(v))]
        seconds = [int(w) for w in members if second is None or w in second]
        for v in firsts:
            for w in seconds:
                g, trunc = _sg_star_gap(pay, cond, v, w)
                margin = Fraction(int(g), int(cond.cont[v]) * pay.scale) if exact else float(g)
                if trunc:
                    out.censored.append((v, w, margin))
                elif margin > eps_sg:
                    out.pairs.append((v, w))
                    out.margins.append(margin)
    return out.sort()


def project_SG(pairs: SGPairSet, gamma: ContactSet) -> ContactSet:
    """First components of the pairs whose second component lies in ``gamma``."""
    return ContactSet(gamma.tree, {v for v, w in pairs.pairs if w in gamma}, Provenance.DERIVED)


# --------------------------------------------------------------------------
# verifier
# --------------------------------------------------------------------------


@dataclass
class MPReport:
    """Outcome of the monotonicity check on one flow.

    ``violations`` are pairs in ``lower x gamma`` that the horizon can decide
    (the continuation law after ``v`` fits after ``v'``). ``censored`` are
    pairs in the same product that would need continuations past the
    horizon; they are reported, not counted. ``projection`` is the first
    components of pairs with second component in ``gamma``;
    ``projection_violations`` are the nodes of the projection that carry
    continue mass and are decidable.
    """

    flavor: Flavor
    gamma: ContactSet
    lower: ContactSet
    pairs: SGPairSet
    violations: list[tuple[int, int, object]]
    censored: list[tuple[int, int, object]]
    projection: ContactSet
    projection_violations: list[int]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations and not self.projection_violations

    @property
    def verdict(self) -> str:
        return "PASS" if self.ok else "FAIL"

    @property
    def n_violations(self) -> int:
        return len(self.violations)

    def witness_records(self) -> list[tuple[str, str, str, str]]:
        k = self.gamma.tree.keys
        ex = self.pairs.exact
        rows = [(k[v], k[w], "violation", fmt_number(m, ex)) for v, w, m in self.violations]
        rows += [(k[v], k[w], "censored", "NA" if m is None else fmt_number(m, ex)) for v, w, m in self.censored]
        return rows


def verify_MP(
    flow: StoppingFlow,
    xi: PayoffSpec | np.ndarray,
    flavor: Flavor | str = Flavor.SG,
    eps=None,
    eps_sg=None,
    branch_tol: float | None = None,
) -> MPReport:
    """Check that no stop-go pair continues at ``v`` while stopping at ``v'``.

    ``gamma`` is the support of the flow (stop mass above ``eps``) and
    ``lower`` its strict ancestors. A pair ``(v, v')`` in ``lower x gamma``
    of the chosen flavor is a violation when the continuation law after ``v``
    reaches no deeper than the horizon allows after ``v'``; in that case
    exchanging the two continuations is a feasible improvement, so an
    optimal flow cannot have one.
    """
    flavor = Flavor(flavor)
    tree = flow.tree
    tree._require_full("verify_MP")
    exact = flow.exact
    eps = _default_eps(exact, eps)
    eps_sg = _default_eps_sg(exact, eps_sg)
    gamma = support_set(flow, eps)
    lower = lower_extension(gamma)
    continuing = ContactSet(tree, [v for v in range(tree.n_nodes) if flow.cont[v] > eps])
    cond = _Conditionals(flow, BRANCH_TOL if branch_tol is None else branch_tol)
    N = tree.horizon

    if flavor is Flavor.SG_STAR:
        pairs = enumerate_SG_star(xi, flow, eps_sg=eps_sg, branch_tol=branch_tol, second=gamma)
        checked = sum(1 for _ in _candidates(tree, None, gamma))
        soft = [(v, w, m) for v, w, m in pairs.censored if v in lower]
    else:
        pairs, soft, checked = _sg_against(xi, tree, gamma, eps_sg, exact)
        soft = [(v, w, m) for v, w, m in soft if v in lower]
    hard, censored = [], list(soft)
    for (v, w), m in zip(pairs.pairs, pairs.margins):
        if v not in lower:
            continue
        if cond.support_depth(v) <= N - int(tree.depth[w]) and not cond.degenerate(v):
            hard.append((v, w, m))
        else:
            censored.append((v, w, m))
    projection = project_SG(pairs, gamma)
    hard_first = {v for v, _, _ in hard}
    proj_bad = sorted(v for v in projection if v in continuing and v in hard_first)
    censored.sort(key=lambda t: (t[0], t[1]))
    return MPReport(flavor, gamma, lower, pairs, hard, censored, projection, proj_bad, checked)


def _candidates(tree: PathTree, first: ContactSet | None, second: ContactSet):
    for members in _same_value_groups(tree).values():
        for v in members:
            if first is not None and v not in first:
                continue
            for w in members:
                if w in second:
                    yield int(v), int(w)


def _sg_against(xi, tree: PathTree, second: ContactSet, eps_sg, exact: bool):
    """SG pairs with second component in ``second``; returns (pairs, censored, checked)."""
    pay = _Payoff(xi, tree, exact)
    thr = _threshold(eps_sg, pay)
    N = tree.horizon
    out = SGPairSet(Flavor.SG, tree, exact)
    checked = 0
    for v, w in _candidates(tree, None, second):
        checked += 1
        m = N - max(int(tree.depth[v]), int(tree.depth[w]))
        if m == 0:
            out.censored.append((v, w, None))
            continue
        L = _n_rel(m)
        g = _scalar((pay.increments(w)[1:L] - pay.increments(v)[1:L]).min(), exact)
        if g > thr:
            out.pairs.append((v, w))
            out.margins.append(pay.unscale(g))
    # a pair with no representable continuation is undecidable; keep only
    # those where v could actually continue
    censored = [(v, w, None) for v, w, _ in out.censored if int(tree.depth[v]) < N]
    out.censored = []
    return out.sort(), censored, checked
