"""Discrete path space of the simple random walk.

A stopped path is a pair (steps, theta): the walk increments and the stop
index. A :class:`PathTree` enumerates all stopped paths up to a horizon,
either one node per step sequence (``FULL``) or one node per value of a
sufficient statistic (``AUGMENTED``). The reference measure is the uniform
step law: every non-leaf node sends probability 1/2 to each child.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ._numeric import Number, to_fraction
from .errors import ConfigurationError, ResourceError

DEFAULT_FULL_CAP = 16


# --------------------------------------------------------------------------
# stopped paths
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathPrefix:
    """A stopped walk path ``(omega, theta)``.

    ``steps`` may run past ``theta``; everything derived from the prefix only
    looks at ``steps[:theta]``.
    """

    steps: tuple[int, ...] = ()
    theta: int = 0

    def __post_init__(self):
        steps = tuple(int(s) for s in self.steps)
        if any(s not in (1, -1) for s in steps):
            raise ConfigurationError(f"steps must be +1/-1, got {self.steps!r}")
        if not 0 <= self.theta <= len(steps):
            raise ConfigurationError(f"stop index {self.theta} outside [0, {len(steps)}]")
        object.__setattr__(self, "steps", steps)

    @classmethod
    def from_string(cls, text: str, theta: int | None = None) -> "PathPrefix":
        steps = tuple(1 if ch == "+" else -1 for ch in text if ch in "+-")
        return cls(steps, len(steps) if theta is None else theta)

    @property
    def values(self) -> tuple[int, ...]:
        """Partial sums over the whole step sequence, starting at 0."""
        return (0, *itertools.accumulate(self.steps))

    @property
    def endpoint(self) -> int:
        return sum(self.steps[: self.theta])

    @property
    def running_max(self) -> int:
        return max(self.values[: self.theta + 1])

    @property
    def running_min(self) -> int:
        return min(self.values[: self.theta + 1])

    def stopped(self) -> "PathPrefix":
        return PathPrefix(self.steps[: self.theta], self.theta)

    def to_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.steps[: self.theta])


def concat(a: PathPrefix, b: PathPrefix) -> PathPrefix:
    """Concatenate ``a`` with ``b`` translated to start at ``a``'s endpoint.

    The steps of ``a`` after its stop index are dropped; ``b`` keeps its tail.
    """
    return PathPrefix(a.steps[: a.theta] + b.steps, a.theta + b.theta)


# --------------------------------------------------------------------------
# trees
# --------------------------------------------------------------------------


class TreeMode(str, Enum):
    FULL = "full"
    AUGMENTED = "augmented"


class Statistic(str, Enum):
    PATH = "path"  # the whole step sequence (FULL trees)
    TIME_VALUE = "time_value"
    TIME_VALUE_MAX = "time_value_max"


@dataclass(frozen=True, eq=False)
class PathTree:
    """Immutable finite-horizon walk model.

    Node arrays are indexed by node id. Node ids are ordered by depth and then
    by key, so iteration order is deterministic.
    """

    horizon: int
    mode: TreeMode
    statistic: Statistic
    depth: np.ndarray
    value: np.ndarray
    running_max: np.ndarray | None
    up: np.ndarray
    down: np.ndarray
    parents: tuple[tuple[int, ...], ...]
    keys: tuple[str, ...]
    multiplicity: np.ndarray
    _index: dict = field(repr=False, default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.depth)

    @property
    def root(self) -> int:
        return 0

    @property
    def grid(self) -> np.ndarray:
        return np.arange(-self.horizon, self.horizon + 1)

    @property
    def is_full(self) -> bool:
        return self.mode is TreeMode.FULL

    @property
    def leaves(self) -> np.ndarray:
        return self.depth == self.horizon

    @property
    def internal(self) -> np.ndarray:
        return self.depth < self.horizon

    def index(self, key: str) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise ConfigurationError(f"unknown node key {key!r}") from None

    def children(self, v: int) -> tuple[int, int]:
        return int(self.up[v]), int(self.down[v])

    def at_depth(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.depth == t)

    # FULL-mode helpers ----------------------------------------------------

    def _require_full(self, what: str):
        if not self.is_full:
            raise ConfigurationError(f"{what} needs a FULL tree")

    def code(self, v) -> np.ndarray | int:
        """Step bits of a FULL node: bit i set iff step i is +1."""
        self._require_full("code")
        return np.asarray(v) + 1 - (1 << self.depth[v])

    def node(self, t: int, code) -> np.ndarray | int:
        return (1 << t) - 1 + code

    def prefix(self, v: int) -> PathPrefix:
        self._require_full("prefix")
        t = int(self.depth[v])
        c = int(self.code(v))
        return PathPrefix(tuple(1 if (c >> i) & 1 else -1 for i in range(t)), t)

    def node_of(self, p: PathPrefix) -> int:
        if p.theta > self.horizon:
            raise ConfigurationError(f"prefix of length {p.theta} exceeds horizon {self.horizon}")
        if self.is_full:
            c = sum(1 << i for i, s in enumerate(p.steps[: p.theta]) if s > 0)
            return int(self.node(p.theta, c))
        if self.statistic is Statistic.TIME_VALUE:
            return self.index(_tv_key(p.theta, p.endpoint))
        return self.index(_tvm_key(p.theta, p.endpoint, p.running_max))

    def parent(self, v: int) -> int:
        ps = self.parents[v]
        if len(ps) != 1:
            raise ConfigurationError(f"node {self.keys[v]} has {len(ps)} parents")
        return ps[0]

    def ancestors(self, v: int) -> list[int]:
        """Strict ancestors of a FULL node, root first."""
        self._require_full("ancestors")
        t = int(self.depth[v])
        c = int(self.code(v))
        return [int(self.node(s, c & ((1 << s) - 1))) for s in range(t)]

    def subtree(self, v: int, max_depth: int | None = None) -> np.ndarray:
        """Absolute ids of ``v`` followed by relative continuations.

        Entry ``r`` is the node ``v (x) r`` where ``r`` is read as a node id of
        a FULL tree of horizon ``horizon - depth(v)`` (``r = 0`` is ``v`` itself).
        """
        self._require_full("subtree")
        t = int(self.depth[v])
        c = int(self.code(v))
        k = self.horizon - t if max_depth is None else max_depth
        rel = np.arange((1 << (k + 1)) - 1)
        d = _depth_of(rel)
        rc = rel + 1 - (1 << d)
        return (1 << (t + d)) - 1 + (c + (rc << t))

    def concat_nodes(self, v: int, r: int) -> int:
        """Node id of ``v (x) r`` for a relative FULL node id ``r``."""
        self._require_full("concat_nodes")
        d = int(_depth_of(np.array([r]))[0])
        t = int(self.depth[v])
        if t + d > self.horizon:
            raise ConfigurationError("concatenation runs past the horizon")
        rc = r + 1 - (1 << d)
        return int(self.node(t + d, int(self.code(v)) + (rc << t)))


def _depth_of(idx: np.ndarray) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros_like(idx)
    x = idx + 1
    while np.any(x > 1):
        m = x > 1
        out[m] += 1
        x = np.where(m, x >> 1, x)
    return out


def relative_depth(r) -> np.ndarray:
    """Depth of relative FULL node ids (root = 0)."""
    return _depth_of(r)


def _full_key(t: int, c: int) -> str:
    return "^" + "".join("+" if (c >> i) & 1 else "-" for i in range(t))


def _tv_key(t: int, x: int) -> str:
    return f"{t},{x}"


def _tvm_key(t: int, x: int, m: int) -> str:
    return f"{t},{x},{m}"


def build_tree(
    N: int,
    mode: TreeMode | str = TreeMode.FULL,
    statistic: Statistic | str | None = None,
    max_full: int = DEFAULT_FULL_CAP,
) -> PathTree:
    """Build the horizon-``N`` walk tree.

    Parameters
    ----------
    N : int
        Horizon, at least 1.
    mode : TreeMode
        ``FULL`` enumerates every step sequence; ``AUGMENTED`` merges paths
        with equal ``statistic``.
    statistic : Statistic, optional
        Required in AUGMENTED mode: ``TIME_VALUE`` or ``TIME_VALUE_MAX``.
    max_full : int
        FULL-mode cap on ``N`` (2**(N+1)-1 nodes).
    """
    mode = TreeMode(mode)
    if N < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {N}")
    if mode is TreeMode.FULL:
        if statistic not in (None, Statistic.PATH, "path"):
            raise ConfigurationError("FULL trees carry the whole path; no statistic to declare")
        if N > max_full:
            raise ResourceError(f"FULL tree with N={N} exceeds cap N<={max_full}; use AUGMENTED mode")
        return _build_full(N)
    if statistic is None:
        raise ConfigurationError("AUGMENTED mode needs a statistic")
    statistic = Statistic(statistic)
    if statistic is Statistic.PATH:
        raise ConfigurationError("AUGMENTED mode needs TIME_VALUE or TIME_VALUE_MAX")
    return _build_lattice(N, statistic)


def _build_full(N: int) -> PathTree:
    n = (1 << (N + 1)) - 1
    depth = np.repeat(np.arange(N + 1), [1 << t for t in range(N + 1)])
    idx = np.arange(n)
    code = idx + 1 - (1 << depth)
    value = np.zeros(n, dtype=np.int64)
    rmax = np.zeros(n, dtype=np.int64)
    for t in range(1, N + 1):
        sl = slice((1 << t) - 1, (1 << (t + 1)) - 1)
        c = code[sl]
        par = (1 << (t - 1)) - 1 + (c & ((1 << (t - 1)) - 1))
        step = np.where((c >> (t - 1)) & 1, 1, -1)
        value[sl] = value[par] + step
        rmax[sl] = np.maximum(rmax[par], value[sl])
    up = np.full(n, -1, dtype=np.int64)
    down = np.full(n, -1, dtype=np.int64)
    inner = depth < N
    up[inner] = (1 << (depth[inner] + 1)) - 1 + code[inner] + (1 << depth[inner])
    down[inner] = (1 << (depth[inner] + 1)) - 1 + code[inner]
    parents = [()] + [
        ((1 << (int(d) - 1)) - 1 + (int(c) & ((1 << (int(d) - 1)) - 1)),)
        for d, c in zip(depth[1:], code[1:])
    ]
    keys = tuple(_full_key(int(d), int(c)) for d, c in zip(depth, code))
    return PathTree(
        horizon=N,
        mode=TreeMode.FULL,
        statistic=Statistic.PATH,
        depth=depth,
        value=value,
        running_max=rmax,
        up=up,
        down=down,
        parents=tuple(parents),
        keys=keys,
        multiplicity=np.ones(n, dtype=np.int64),
        _index={k: i for i, k in enumerate(keys)},
    )


def _build_lattice(N: int, statistic: Statistic) -> PathTree:
    with_max = statistic is Statistic.TIME_VALUE_MAX
    root = (0, 0, 0) if with_max else (0, 0)
    levels = [[root]]
    for t in range(N):
        nxt = set()
        for st in levels[-1]:
            nxt.update(_lattice_children(st, with_max))
        levels.append(sorted(nxt))
    states = [s for lvl in levels for s in lvl]
    pos = {s: i for i, s in enumerate(states)}
    n = len(states)
    depth = np.array([s[0] for s in states], dtype=np.int64)
    value = np.array([s[1] for s in states], dtype=np.int64)
    rmax = np.array([s[2] for s in states], dtype=np.int64) if with_max else None
    up = np.full(n, -1, dtype=np.int64)
    down = np.full(n, -1, dtype=np.int64)
    parents: list[list[int]] = [[] for _ in range(n)]
    mult = np.zeros(n, dtype=np.int64)
    mult[0] = 1
    for i, s in enumerate(states):
        if s[0] == N:
            continue
        u, d = _lattice_children(s, with_max)
        up[i], down[i] = pos[u], pos[d]
        parents[pos[u]].append(i)
        parents[pos[d]].append(i)
        mult[pos[u]] += mult[i]
        mult[pos[d]] += mult[i]
    keyf = (lambda s: _tvm_key(*s)) if with_max else (lambda s: _tv_key(*s))
    keys = tuple(keyf(s) for s in states)
    return PathTree(
        horizon=N,
        mode=TreeMode.AUGMENTED,
        statistic=statistic,
        depth=depth,
        value=value,
        running_max=rmax,
        up=up,
        down=down,
        parents=tuple(tuple(p) for p in parents),
        keys=keys,
        multiplicity=mult,
        _index={k: i for i, k in enumerate(keys)},
    )


def _lattice_children(state, with_max: bool):
    if with_max:
        t, x, m = state
        return (t + 1, x + 1, max(m, x + 1)), (t + 1, x - 1, m)
    t, x = state
    return (t + 1, x + 1), (t + 1, x - 1)


def statistic_map(full: PathTree, aug: PathTree) -> np.ndarray:
    """For each FULL node, the AUGMENTED node carrying the same statistic."""
    if not full.is_full or aug.is_full or full.horizon != aug.horizon:
        raise ConfigurationError("statistic_map needs a FULL and an AUGMENTED tree of equal horizon")
    if aug.statistic is Statistic.TIME_VALUE:
        keys = [_tv_key(int(t), int(x)) for t, x in zip(full.depth, full.value)]
    else:
        keys = [_tvm_key(int(t), int(x), int(m)) for t, x, m in zip(full.depth, full.value, full.running_max)]
    return np.array([aug.index(k) for k in keys], dtype=np.int64)


# --------------------------------------------------------------------------
# target laws
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TargetMeasure:
    """A centered law on the integers, stored with rational weights."""

    points: tuple[int, ...]
    weights: tuple[Fraction, ...]
    tolerance: float = field(default=1e-12, compare=False)

    def __post_init__(self):
        if len(self.points) != len(self.weights):
            raise ConfigurationError("points and weights differ in length")
        merged: dict[int, Fraction] = {}
        for x, w in zip(self.points, self.weights):
            if isinstance(x, float) and not float(x).is_integer():
                raise ConfigurationError(f"support point {x} is not an integer")
            w = to_fraction(w)
            if w < 0:
                raise ConfigurationError(f"negative weight {w} at {x}")
            merged[int(x)] = merged.get(int(x), Fraction(0)) + w
        merged = {x: w for x, w in merged.items() if w != 0}
        if not merged:
            raise ConfigurationError("measure has no mass")
        total = sum(merged.values())
        mean = sum(x * w for x, w in merged.items())
        tol = to_fraction(self.tolerance)
        if abs(total - 1) > tol:
            raise ConfigurationError(f"weights sum to {float(total)!r}, not 1")
        if abs(mean) > tol:
            raise ConfigurationError(f"measure is not centered: mean {float(mean)!r}")
        pts = tuple(sorted(merged))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", tuple(merged[x] for x in pts))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, Number | str]]) -> "TargetMeasure":
        pairs = list(pairs)
        return cls(tuple(int(x) for x, _ in pairs), tuple(to_fraction(w) for _, w in pairs))

    @classmethod
    def dirac(cls, x: int = 0) -> "TargetMeasure":
        return cls((x,), (Fraction(1),))

    def weight(self, x: int) -> Fraction:
        try:
            return self.weights[self.points.index(int(x))]
        except ValueError:
            return Fraction(0)

    def as_dict(self) -> dict[int, Fraction]:
        return dict(zip(self.points, self.weights))

    def integrate(self, f: Callable[[int], Number] | Mapping[int, Number]) -> Fraction:
        """``mu(f)`` for a function or table on the integers."""
        get = f.__getitem__ if isinstance(f, Mapping) else f
        return sum((to_fraction(get(x)) * w for x, w in zip(self.points, self.weights)), Fraction(0))

    @property
    def radius(self) -> int:
        return max(abs(x) for x in self.points)

    @property
    def second_moment(self) -> Fraction:
        return sum((x * x * w for x, w in zip(self.points, self.weights)), Fraction(0))

    def fits(self, N: int) -> bool:
        return self.radius <= N


# --------------------------------------------------------------------------
# payoffs
# --------------------------------------------------------------------------


class PayoffKind(str, Enum):
    RUNNING_MAX = "running_max"
    NEG_TAU = "neg_tau"
    NEG_TAU_SQ = "neg_tau_sq"
    TAU_SQ = "tau_sq"
    TERMINAL_F = "terminal"
    TIME_VALUE_F = "time_value"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PayoffSpec:
    """A non-anticipative payoff on stopped paths.

    ``func`` is ``f(x)`` for TERMINAL_F and ``f(t, x)`` for TIME_VALUE_F.
    ``table`` is used by CUSTOM and maps ``(steps, theta)`` to a value, with
    ``steps`` either the stopped prefix (``len == theta``) or a full path of
    horizon length. ``offset`` is added to every value.
    """

    kind: PayoffKind
    func: Callable | None = None
    table: Mapping | None = None
    offset: Number = 0
    label: str = ""

    # constructors ---------------------------------------------------------

    @classmethod
    def running_max(cls):
        return cls(PayoffKind.RUNNING_MAX, label="running_max")

    @classmethod
    def neg_tau(cls):
        return cls(PayoffKind.NEG_TAU, label="neg_tau")

    @classmethod
    def neg_tau_sq(cls):
        return cls(PayoffKind.NEG_TAU_SQ, label="neg_tau_sq")

    @classmethod
    def tau_sq(cls):
        return cls(PayoffKind.TAU_SQ, label="tau_sq")

    @classmethod
    def terminal(cls, f: Callable[[int], Number] | Mapping[int, Number], default: Number = 0, label="terminal"):
        if isinstance(f, Mapping):
            tbl = {int(k): v for k, v in f.items()}
            return cls(PayoffKind.TERMINAL_F, func=lambda x: tbl.get(int(x), default), label=label)
        return cls(PayoffKind.TERMINAL_F, func=f, label=label)

    @classmethod
    def terminal_abs(cls, strike: Number):
        k = to_fraction(strike)
        return cls(PayoffKind.TERMINAL_F, func=lambda x: abs(x - k), label=f"abs(x-{k})")

    @classmethod
    def constant(cls, k: Number):
        return cls(PayoffKind.TERMINAL_F, func=lambda x: 0, offset=k, label=f"const({k})")

    @classmethod
    def time_value(cls, f: Callable[[int, int], Number], label="time_value"):
        return cls(PayoffKind.TIME_VALUE_F, func=f, label=label)

    @classmethod
    def custom(cls, table: Mapping, label="custom"):
        norm = {}
        for (steps, theta), v in table.items():
            if isinstance(steps, str):
                steps = PathPrefix.from_string(steps).steps
            norm[(tuple(int(s) for s in steps), int(theta))] = v
        return cls(PayoffKind.CUSTOM, table=norm, label=label)

    def shifted(self, c: Number) -> "PayoffSpec":
        return PayoffSpec(self.kind, self.func, self.table, to_fraction(self.offset) + to_fraction(c), self.label)

    # expressibility ---------------------------------------------------------

    def expressible_on(self, tree: PathTree) -> bool:
        return self.expressible_on_statistic(tree.statistic)

    def expressible_on_statistic(self, statistic: Statistic | None) -> bool:
        """Whether the payoff is a function of ``statistic`` (``None``/PATH: the whole path)."""
        if statistic in (None, Statistic.PATH):
            return True
        if self.kind is PayoffKind.CUSTOM:
            return False
        if self.kind is PayoffKind.RUNNING_MAX:
            return statistic is Statistic.TIME_VALUE_MAX
        return True


def _raw_value(xi: PayoffSpec, t: int, x: int, m: int | None):
    k = xi.kind
    if k is PayoffKind.RUNNING_MAX:
        return m
    if k is PayoffKind.NEG_TAU:
        return -t
    if k is PayoffKind.NEG_TAU_SQ:
        return -t * t
    if k is PayoffKind.TAU_SQ:
        return t * t
    if k is PayoffKind.TERMINAL_F:
        return xi.func(x)
    if k is PayoffKind.TIME_VALUE_F:
        return xi.func(t, x)
    raise ConfigurationError(f"payoff kind {k} has no statistic form")


def _custom_lookup(xi: PayoffSpec, p: PathPrefix):
    tbl = xi.table
    key = (p.steps[: p.theta], p.theta)
    if key in tbl:
        return tbl[key]
    key = (p.steps, p.theta)
    if key in tbl:
        return tbl[key]
    raise ConfigurationError(f"custom payoff has no entry for prefix '{p.to_string()}' at theta={p.theta}")


def eval_payoff(xi: PayoffSpec, where: PathPrefix | int, tree: PathTree | None = None, exact: bool = True):
    """Evaluate ``xi`` on a stopped path, or on node ``where`` of ``tree``."""
    if isinstance(where, PathPrefix):
        p = where
        if xi.kind is PayoffKind.CUSTOM:
            raw = _custom_lookup(xi, p)
        else:
            raw = _raw_value(xi, p.theta, p.endpoint, p.running_max)
    else:
        if tree is None:
            raise ConfigurationError("node evaluation needs the tree")
        v = int(where)
        if not xi.expressible_on(tree):
            raise ConfigurationError(f"payoff {xi.kind.value} is not a function of the {tree.statistic.value} statistic")
        if xi.kind is PayoffKind.CUSTOM:
            return _custom_node(xi, tree, v, exact)
        m = None if tree.running_max is None else int(tree.running_max[v])
        raw = _raw_value(xi, int(tree.depth[v]), int(tree.value[v]), m)
    val = to_fraction(raw) + to_fraction(xi.offset)
    return val if exact else float(val)


def _custom_node(xi: PayoffSpec, tree: PathTree, v: int, exact: bool):
    p = tree.prefix(v)
    if (p.steps, p.theta) in xi.table:
        val = to_fraction(xi.table[(p.steps, p.theta)]) + to_fraction(xi.offset)
        return val if exact else float(val)
    # node value must agree across every full-path extension
    k = tree.horizon - p.theta
    seen = set()
    for tail in itertools.product((1, -1), repeat=k):
        seen.add(to_fraction(_custom_lookup(xi, PathPrefix(p.steps + tail, p.theta))))
        if len(seen) > 1:
            raise ConfigurationError(
                f"custom payoff anticipates the future at prefix '{p.to_string()}' (theta={p.theta})"
            )
    val = seen.pop() + to_fraction(xi.offset)
    return val if exact else float(val)


def payoff_vector(xi: PayoffSpec, tree: PathTree, exact: bool = False) -> np.ndarray:
    """Node values of ``xi``: Fractions in an object array, or float64."""
    if not xi.expressible_on(tree):
        raise ConfigurationError(f"payoff {xi.kind.value} is not a function of the {tree.statistic.value} statistic")
    off = to_fraction(xi.offset)
    k = xi.kind
    t = tree.depth
    if k is PayoffKind.CUSTOM:
        vals = [eval_payoff(xi, v, tree, exact=True) for v in range(tree.n_nodes)]
    elif k is PayoffKind.RUNNING_MAX:
        vals = [Fraction(int(m)) + off for m in tree.running_max]
    elif k in (PayoffKind.NEG_TAU, PayoffKind.NEG_TAU_SQ, PayoffKind.TAU_SQ):
        sq = {PayoffKind.NEG_TAU: -t, PayoffKind.NEG_TAU_SQ: -t * t, PayoffKind.TAU_SQ: t * t}[k]
        vals = [Fraction(int(a)) + off for a in sq]
    elif k is PayoffKind.TERMINAL_F:
        cache = {int(x): to_fraction(xi.func(int(x))) + off for x in np.unique(tree.value)}
        vals = [cache[int(x)] for x in tree.value]
    else:
        cache = {}
        vals = []
        for tt, x in zip(tree.depth, tree.value):
            key = (int(tt), int(x))
            if key not in cache:
                cache[key] = to_fraction(xi.func(*key)) + off
            vals.append(cache[key])
    if exact:
        out = np.empty(len(vals), dtype=object)
        out[:] = vals
        return out
    return np.array([float(v) for v in vals])


@dataclass
class NonAnticipationReport:
    violations: list[tuple[PathPrefix, tuple]]
    checked: int

    @property
    def ok(self) -> bool:
        return not self.violations


def check_nonanticipative(xi: PayoffSpec, tree: PathTree) -> NonAnticipationReport:
    """Verify that ``xi(omega, theta)`` ignores the steps after ``theta``.

    Every full path of the horizon is paired with every stop index; paths that
    share the stopped prefix must give the same value. One violation is listed
    per offending stopped prefix together with the distinct values seen.
    """
    tree._require_full("check_nonanticipative")
    N = tree.horizon
    groups: dict[tuple, set] = {}
    checked = 0
    for path in itertools.product((1, -1), repeat=N):
        for theta in range(N + 1):
            p = PathPrefix(path, theta)
            val = eval_payoff(xi, p)
            groups.setdefault((path[:theta], theta), set()).add(val)
            checked += 1
    violations = [
        (PathPrefix(steps, theta), tuple(sorted(vals)))
        for (steps, theta), vals in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        if len(vals) > 1
    ]
    return NonAnticipationReport(violations, checked)


def binomial_count(t: int, x: int) -> int:
    if (t + x) % 2 or abs(x) > t:
        return 0
    return math.comb(t, (t + x) // 2)
