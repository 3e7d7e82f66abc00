"""Linear programs with rational data, solved by HiGHS and optionally certified exactly.

The floating path is a plain HiGHS simplex solve. The exact path takes the
optimal basis HiGHS reports, recomputes the basic solution and the dual
multipliers in rational arithmetic (FLINT), and accepts the answer only if
the rational point is primal feasible and the rational reduced costs have the
optimal signs. A certified basis is an exact optimum, independent of the
floating tolerances that produced it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import flint
import highspy
import numpy as np

from ._numeric import to_fraction
from .errors import ExactSolveError

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_INF = highspy.kHighsInf
_BS = highspy.HighsBasisStatus


@dataclass
class LinearProgram:
    """``opt c.x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper``.

    Bounds are Fractions or ``None`` for an infinite side. Rows are sparse
    dicts ``{column: coefficient}``.
    """

    maximize: bool = False
    cost: list = field(default_factory=list)
    col_lower: list = field(default_factory=list)
    col_upper: list = field(default_factory=list)
    col_names: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    row_lower: list = field(default_factory=list)
    row_upper: list = field(default_factory=list)
    row_names: list = field(default_factory=list)

    @property
    def n_vars(self) -> int:
        return len(self.cost)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_var(self, name: str, lower=0, upper=None, cost=0) -> int:
        self.cost.append(to_fraction(cost))
        self.col_lower.append(None if lower is None else to_fraction(lower))
        self.col_upper.append(None if upper is None else to_fraction(upper))
        self.col_names.append(name)
        return len(self.cost) - 1

    def add_row(self, coeffs: dict, lower=None, upper=None, name: str = "") -> int:
        row = {int(j): to_fraction(a) for j, a in coeffs.items() if a != 0}
        self.rows.append(row)
        self.row_lower.append(None if lower is None else to_fraction(lower))
        self.row_upper.append(None if upper is None else to_fraction(upper))
        self.row_names.append(name)
        return len(self.rows) - 1

    def add_eq(self, coeffs: dict, rhs, name: str = "") -> int:
        return self.add_row(coeffs, rhs, rhs, name)

    def copy(self) -> "LinearProgram":
        return LinearProgram(
            self.maximize,
            list(self.cost),
            list(self.col_lower),
            list(self.col_upper),
            list(self.col_names),
            [dict(r) for r in self.rows],
            list(self.row_lower),
            list(self.row_upper),
            list(self.row_names),
        )

    def activity(self, x) -> list:
        return [sum((a * x[j] for j, a in row.items()), 0 * x[0] if len(x) else 0) for row in self.rows]

    def objective(self, x):
        return sum((c * x[j] for j, c in enumerate(self.cost) if c != 0), 0 * x[0] if len(x) else 0)

    def max_violation(self, x) -> float:
        """Largest bound or row violation of ``x`` (0 for a feasible point)."""
        worst = 0.0
        for j, v in enumerate(x):
            lo, hi = self.col_lower[j], self.col_upper[j]
            if lo is not None:
                worst = max(worst, float(lo - v))
            if hi is not None:
                worst = max(worst, float(v - hi))
        for i, r in enumerate(self.activity(x)):
            lo, hi = self.row_lower[i], self.row_upper[i]
            if lo is not None:
                worst = max(worst, float(lo - r))
            if hi is not None:
                worst = max(worst, float(r - hi))
        return worst


@dataclass
class LPSolution:
    """Solver outcome.

    ``row_duals`` are multipliers with ``cost = A^T y + reduced`` at the
    optimum, for the problem as posed (max or min).
    """

    status: str
    exact: bool
    x: np.ndarray | None = None
    objective: Fraction | float | None = None
    row_duals: np.ndarray | None = None
    attempts: int = 1

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _highs_model(lp: LinearProgram) -> highspy.HighsLp:
    model = highspy.HighsLp()
    n, m = lp.n_vars, lp.n_rows
    model.num_col_ = n
    model.num_row_ = m
    sign = -1.0 if lp.maximize else 1.0
    model.col_cost_ = np.array([sign * float(c) for c in lp.cost], dtype=float)
    model.col_lower_ = np.array([-_INF if b is None else float(b) for b in lp.col_lower], dtype=float)
    model.col_upper_ = np.array([_INF if b is None else float(b) for b in lp.col_upper], dtype=float)
    model.row_lower_ = np.array([-_INF if b is None else float(b) for b in lp.row_lower], dtype=float)
    model.row_upper_ = np.array([_INF if b is None else float(b) for b in lp.row_upper], dtype=float)
    cols: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for i, row in enumerate(lp.rows):
        for j, a in row.items():
            cols[j].append((i, float(a)))
    start, index, value = [0], [], []
    for col in cols:
        for i, a in col:
            index.append(i)
            value.append(a)
        start.append(len(index))
    model.a_matrix_.format_ = highspy.MatrixFormat.kColwise
    model.a_matrix_.start_ = np.array(start, dtype=np.int32)
    model.a_matrix_.index_ = np.array(index, dtype=np.int32)
    model.a_matrix_.value_ = np.array(value, dtype=float)
    return model


_ATTEMPTS = (
    {},
    {"presolve": "off"},
    {"presolve": "off", "simplex_strategy": 4},
    {
        "presolve": "off",
        "primal_feasibility_tolerance": 1e-10,
        "dual_feasibility_tolerance": 1e-10,
        "simplex_strategy": 1,
    },
)


def _run_highs(lp: LinearProgram, tol: float, seed: int | None, extra: dict, time_limit: float | None):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("solver", "simplex")
    h.setOptionValue("primal_feasibility_tolerance", tol)
    h.setOptionValue("dual_feasibility_tolerance", tol)
    if seed is not None:
        h.setOptionValue("random_seed", int(seed))
    if time_limit is not None:
        h.setOptionValue("time_limit", float(time_limit))
    for k, v in extra.items():
        h.setOptionValue(k, v)
    h.passModel(_highs_model(lp))
    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        # presolve could not tell which; the simplex can
        h.setOptionValue("presolve", "off")
        h.run()
        status = h.getModelStatus()
    return h, status


def solve_lp(
    lp: LinearProgram,
    exact: bool = False,
    tol: float = 1e-9,
    seed: int | None = None,
    time_limit: float | None = None,
) -> LPSolution:
    """Solve ``lp``; with ``exact=True`` return a rationally certified optimum.

    Raises
    ------
    ExactSolveError
        If no HiGHS basis could be certified in rational arithmetic.
    """
    attempts = _ATTEMPTS if exact else _ATTEMPTS[:1]
    for k, extra in enumerate(attempts, start=1):
        h, status = _run_highs(lp, tol, seed, extra, time_limit)
        if status == highspy.HighsModelStatus.kInfeasible:
            return LPSolution(INFEASIBLE, exact, attempts=k)
        if status == highspy.HighsModelStatus.kUnbounded:
            return LPSolution(UNBOUNDED, exact, attempts=k)
        if status != highspy.HighsModelStatus.kOptimal:
            if status == highspy.HighsModelStatus.kUnboundedOrInfeasible and not lp.rows:
                return LPSolution(UNBOUNDED, exact, attempts=k)
            log.debug("HiGHS status %s on attempt %d", h.modelStatusToString(status), k)
            continue
        if not exact:
            sol = h.getSolution()
            x = np.array(sol.col_value, dtype=float)
            y = np.array(sol.row_dual, dtype=float)
            if lp.maximize:
                y = -y
            obj = float(np.dot([float(c) for c in lp.cost], x)) if lp.n_vars else 0.0
            return LPSolution(OPTIMAL, False, x, obj, y, attempts=k)
        basis = h.getBasis()
        cert = certify_basis(lp, list(basis.col_status), list(basis.row_status))
        if cert is not None:
            x, y = cert
            return LPSolution(OPTIMAL, True, x, lp.objective(x), y, attempts=k)
        log.info("basis from attempt %d failed rational certification", k)
    raise ExactSolveError(f"no certifiable optimal basis after {len(attempts)} attempts")


def _fmpq(f: Fraction):
    return flint.fmpq(f.numerator, f.denominator)


def _to_frac(q) -> Fraction:
    return Fraction(int(q.p), int(q.q))


def certify_basis(lp: LinearProgram, col_status: list, row_status: list):
    """Recompute a simplex basis in rational arithmetic.

    Returns ``(x, y)`` (object arrays of Fractions; ``y`` in the sign
    convention of :class:`LPSolution`) when the basis is primal feasible and
    dual optimal, else ``None``.
    """
    m, n = lp.n_rows, lp.n_vars
    basic_cols = [j for j in range(n) if col_status[j] == _BS.kBasic]
    basic_rows = [i for i in range(m) if row_status[i] == _BS.kBasic]
    if len(basic_cols) + len(basic_rows) != m:
        return None

    cols: list[list[tuple[int, Fraction]]] = [[] for _ in range(n)]
    for i, row in enumerate(lp.rows):
        for j, a in row.items():
            cols[j].append((i, a))

    def at_bound(status, lo, hi):
        if status == _BS.kUpper and hi is not None:
            return hi
        if status in (_BS.kLower, _BS.kUpper, _BS.kNonbasic):
            if lo is not None:
                return lo
            if hi is not None:
                return hi
        return Fraction(0)

    x = [Fraction(0)] * n
    is_basic_col = [False] * n
    for j in basic_cols:
        is_basic_col[j] = True
    for j in range(n):
        if not is_basic_col[j]:
            x[j] = at_bound(col_status[j], lp.col_lower[j], lp.col_upper[j])
    r = [Fraction(0)] * m
    is_basic_row = [False] * m
    for i in basic_rows:
        is_basic_row[i] = True
    rhs = [Fraction(0)] * m
    for i in range(m):
        if not is_basic_row[i]:
            r[i] = at_bound(row_status[i], lp.row_lower[i], lp.row_upper[i])
            rhs[i] = r[i]
    for j in range(n):
        if not is_basic_col[j] and x[j] != 0:
            for i, a in cols[j]:
                rhs[i] -= a * x[j]

    if m == 0:
        z_vals, y_vals = [], []
    else:
        flat = [0] * (m * m)
        for k, j in enumerate(basic_cols):
            for i, a in cols[j]:
                flat[i * m + k] = _fmpq(a)
        for k, i in enumerate(basic_rows, start=len(basic_cols)):
            flat[i * m + k] = -1
        M = flint.fmpq_mat(m, m, flat)
        sign = -1 if lp.maximize else 1
        cB = [sign * lp.cost[j] for j in basic_cols] + [Fraction(0)] * len(basic_rows)
        try:
            z = M.solve(flint.fmpq_mat(m, 1, [_fmpq(v) for v in rhs]))
            yv = M.transpose().solve(flint.fmpq_mat(m, 1, [_fmpq(v) for v in cB]))
        except (ZeroDivisionError, ValueError):
            return None
        z_vals = [_to_frac(q) for q in z.entries()]
        y_vals = [_to_frac(q) for q in yv.entries()]

    for k, j in enumerate(basic_cols):
        x[j] = z_vals[k]
    for k, i in enumerate(basic_rows, start=len(basic_cols)):
        r[i] = z_vals[k]

    def within(v, lo, hi):
        return (lo is None or v >= lo) and (hi is None or v <= hi)

    for j in basic_cols:
        if not within(x[j], lp.col_lower[j], lp.col_upper[j]):
            return None
    for i in basic_rows:
        if not within(r[i], lp.row_lower[i], lp.row_upper[i]):
            return None

    # reduced costs of the minimisation form
    sign = -1 if lp.maximize else 1

    def sign_ok(d, v, lo, hi):
        if lo is not None and hi is not None and lo == hi:
            return True
        if lo is None and hi is None:
            return d == 0
        if lo is not None and v == lo:
            return d >= 0
        if hi is not None and v == hi:
            return d <= 0
        return d == 0

    y = y_vals
    for j in range(n):
        if is_basic_col[j]:
            continue
        d = sign * lp.cost[j] - sum((a * y[i] for i, a in cols[j]), Fraction(0))
        if not sign_ok(d, x[j], lp.col_lower[j], lp.col_upper[j]):
            return None
    for i in range(m):
        if is_basic_row[i]:
            continue
        if not sign_ok(y[i], r[i], lp.row_lower[i], lp.row_upper[i]):
            return None

    xs = np.empty(n, dtype=object)
    xs[:] = x
    ys = np.empty(m, dtype=object)
    ys[:] = [sign * v for v in y]
    return xs, ys
