"""Dense two-phase simplex for small and medium linear programs.

Problems are stated in general form::

    minimize    c'x
    subject to  A[i] x  (<= | = | >=)  b[i]
                lb <= x <= ub          (bounds may be infinite)

Internally the problem is brought to ``A x = b, 0 <= x <= U`` and solved with
a bounded-variable tableau simplex: finite upper bounds never become rows, so
a program with many bounded columns and few rows stays cheap.  Pricing is
Dantzig's rule; after a run of degenerate pivots the solver switches to
Bland's rule, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from ..errors import InfeasibleError, NumericalFailureError, UnboundedError

SENSES = ("<=", "=", ">=")


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        m = A.shape[0]
        b = np.asarray(self.b, dtype=float).ravel()
        lb = np.broadcast_to(np.asarray(self.lb, dtype=float), (n,)).copy()
        ub = np.broadcast_to(np.asarray(self.ub, dtype=float), (n,)).copy()
        senses = tuple(self.senses)
        if b.size != m or len(senses) != m:
            raise ValueError("row count mismatch between A, b and senses")
        if any(s not in SENSES for s in senses):
            raise ValueError(f"row senses must be in {SENSES}")
        if np.any(lb > ub) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise ValueError("inconsistent variable bounds")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("non-finite problem data")
        names = tuple(self.names) if self.names else tuple(f"x{j}" for j in range(n))
        if len(names) != n:
            raise ValueError("one name per variable")
        for k, v in dict(c=c, A=A, b=b, lb=lb, ub=ub, senses=senses, names=names).items():
            object.__setattr__(self, k, v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    duals: np.ndarray
    status: str = "optimal"
    iterations: int = 0
    info: dict = field(default_factory=dict)


LpSolver = Callable[[LpProblem], LpSolution]


# --------------------------------------------------------------------------
# reduction to standard bounded form
# --------------------------------------------------------------------------


@dataclass
class _Standard:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    U: np.ndarray
    row_sign: np.ndarray
    # x_orig = offset + T @ x_std[:n_struct]
    T: np.ndarray
    offset: np.ndarray
    n_struct: int
    basis: np.ndarray
    n_art: int


def _standardize(p: LpProblem) -> _Standard:
    m, n = p.shape
    cols, costs, ups = [], [], []
    T_cols = []
    offset = np.zeros(n)
    for j in range(n):
        a, cj, lo, hi = p.A[:, j], p.c[j], p.lb[j], p.ub[j]
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            offset[j] = lo
            cols.append(a), costs.append(cj), ups.append(hi - lo), T_cols.append(e)
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-a), costs.append(-cj), ups.append(np.inf), T_cols.append(-e)
        else:
            cols.append(a), costs.append(cj), ups.append(np.inf), T_cols.append(e)
            cols.append(-a), costs.append(-cj), ups.append(np.inf), T_cols.append(-e)
    A = np.column_stack(cols) if cols else np.zeros((m, 0))
    T = np.column_stack(T_cols) if T_cols else np.zeros((n, 0))
    c = np.array(costs, dtype=float)
    U = np.array(ups, dtype=float)
    n_struct = A.shape[1]
    b = p.b - p.A @ offset
    # slacks
    slack_cols = []
    for i, s in enumerate(p.senses):
        if s == "<=":
            col = np.zeros(m)
            col[i] = 1.0
            slack_cols.append(col)
        elif s == ">=":
            col = np.zeros(m)
            col[i] = -1.0
            slack_cols.append(col)
    if slack_cols:
        S = np.column_stack(slack_cols)
        A = np.hstack([A, S])
        c = np.concatenate([c, np.zeros(S.shape[1])])
        U = np.concatenate([U, np.full(S.shape[1], np.inf)])
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    # initial basis: a slack with +1 in its row, otherwise an artificial
    basis = np.full(m, -1)
    for k in range(n_struct, A.shape[1]):
        col = A[:, k]
        i = int(np.argmax(np.abs(col)))
        if col[i] == 1.0 and basis[i] < 0:
            basis[i] = k
    need = np.where(basis < 0)[0]
    if need.size:
        art = np.zeros((m, need.size))
        art[need, np.arange(need.size)] = 1.0
        basis[need] = A.shape[1] + np.arange(need.size)
        A = np.hstack([A, art])
        c = np.concatenate([c, np.zeros(need.size)])
        U = np.concatenate([U, np.full(need.size, np.inf)])
    return _Standard(A, b, c, U, sign, T, offset, n_struct, basis, int(need.size))


# --------------------------------------------------------------------------
# bounded-variable tableau simplex
# --------------------------------------------------------------------------


class _Tableau:
    def __init__(self, A, b, U, basis, tol):
        self.A, self.b, self.U, self.tol = A, b, U, tol
        self.m, self.n = A.shape
        self.basis = basis.copy()
        self.at_upper = np.zeros(self.n, dtype=bool)
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        try:
            lu = linalg.lu_factor(B)
        except (linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailureError("basis matrix is singular") from exc
        if np.any(np.abs(np.diag(lu[0])) < 1e-13):
            raise NumericalFailureError("basis matrix is singular")
        self.lu = lu
        self.T = linalg.lu_solve(lu, self.A)
        rhs = self.b - self.A[:, self.at_upper] @ self.U[self.at_upper]
        self.xB = linalg.lu_solve(lu, rhs)

    def values(self) -> np.ndarray:
        x = np.where(self.at_upper, self.U, 0.0)
        x = np.where(np.isfinite(x), x, 0.0)
        x[self.basis] = self.xB
        return x

    def duals(self, c) -> np.ndarray:
        return linalg.lu_solve(self.lu, c[self.basis], trans=1)

    def run(self, c, max_iter, bland_after=50):
        tol = self.tol
        is_basic = np.zeros(self.n, dtype=bool)
        is_basic[self.basis] = True
        degenerate = 0
        it = 0
        fixed = self.U <= 0
        while True:
            if it and it % 64 == 0:
                self.refactor()
            d = c - c[self.basis] @ self.T
            can_up = ~is_basic & ~self.at_upper & ~fixed & (d < -tol)
            can_down = ~is_basic & self.at_upper & ~fixed & (d > tol)
            cand = can_up | can_down
            if not cand.any():
                return it
            if it >= max_iter:
                raise NumericalFailureError(f"simplex did not finish in {max_iter} iterations")
            bland = degenerate >= bland_after
            if bland:
                j = int(np.flatnonzero(cand)[0])
            else:
                j = int(np.argmax(np.where(cand, np.abs(d), -1.0)))
            s = 1.0 if can_up[j] else -1.0
            col = s * self.T[:, j]
            t_best = self.U[j]
            r = -1
            to_upper = False
            scale = max(1.0, float(np.max(np.abs(self.T[:, j]))))
            piv_tol = 1e-11 * scale
            for i in range(self.m):
                a = col[i]
                if a > piv_tol:
                    t = max(self.xB[i], 0.0) / a
                    up = False
                elif a < -piv_tol and np.isfinite(self.U[self.basis[i]]):
                    t = max(self.U[self.basis[i]] - self.xB[i], 0.0) / (-a)
                    up = True
                else:
                    continue
                if t < t_best - 1e-12 or (
                    r >= 0 and abs(t - t_best) <= 1e-12 and (
                        self.basis[i] < self.basis[r] if bland else abs(a) > abs(col[r])
                    )
                ):
                    t_best, r, to_upper = t, i, up
            if not np.isfinite(t_best):
                raise UnboundedError("objective is unbounded below")
            degenerate = degenerate + 1 if t_best <= tol else 0
            self.xB -= t_best * col
            it += 1
            if r < 0:
                # bound flip of the entering variable
                self.at_upper[j] = not self.at_upper[j]
                continue
            leave = self.basis[r]
            enter_val = t_best if s > 0 else self.U[j] - t_best
            self.at_upper[j] = False
            self.at_upper[leave] = to_upper
            piv = self.T[r, j]
            self.T[r] /= piv
            others = np.arange(self.m) != r
            self.T[others] -= np.outer(self.T[others, j], self.T[r])
            self.xB[r] = enter_val
            self.basis[r] = j
            is_basic[leave] = False
            is_basic[j] = True

    def finalize(self):
        # canonical column order: equal bases give bit-identical solutions
        self.basis = np.sort(self.basis)
        self.refactor()


def solve_lp(problem: LpProblem, tol: float = 1e-9, max_iter: int | None = None) -> LpSolution:
    """Solve ``problem`` to optimality; the bundled default solver.

    Returns the optimal basic solution together with the row duals
    ``y = d(objective)/d(b)``.  Raises ``InfeasibleError``,
    ``UnboundedError`` or ``NumericalFailureError``.
    """
    st = _standardize(problem)
    m, n = st.A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    if m == 0:
        x_std = np.zeros(n)
        if np.any(st.c < 0):
            neg = st.c < 0
            if np.any(~np.isfinite(st.U[neg])):
                raise UnboundedError("objective is unbounded below")
            x_std[neg] = st.U[neg]
        x = st.offset + st.T @ x_std[: st.n_struct]
        return LpSolution(x, float(problem.c @ x), np.zeros(0))
    tab = _Tableau(st.A, st.b, st.U, st.basis, tol)
    iters = 0
    first_art = n - st.n_art
    if st.n_art:
        c1 = np.zeros(n)
        c1[first_art:] = 1.0
        iters += tab.run(c1, max_iter)
        tab.finalize()
        infeas = float(np.sum(tab.values()[first_art:]))
        if infeas > tol * max(1.0, float(np.max(np.abs(st.b)))) * 10:
            raise InfeasibleError(f"no feasible point (phase-one residual {infeas:.3g})")
        # artificials are pinned at zero from here on
        tab.U = st.U.copy()
        tab.U[first_art:] = 0.0
    iters += tab.run(st.c, max_iter)
    tab.finalize()
    x_std = tab.values()
    if st.n_art:
        x_std[first_art:] = 0.0
    x = st.offset + st.T @ x_std[: st.n_struct]
    y = tab.duals(st.c) * st.row_sign
    return LpSolution(x, float(problem.c @ x), y, "optimal", iters)


def scipy_solver(problem: LpProblem) -> LpSolution:
    """Adapter that solves the same contract with ``scipy.optimize.linprog`` (HiGHS)."""
    from scipy.optimize import linprog

    A, b, sen = problem.A, problem.b, problem.senses
    le = [i for i, s in enumerate(sen) if s == "<="]
    ge = [i for i, s in enumerate(sen) if s == ">="]
    eq = [i for i, s in enumerate(sen) if s == "="]
    A_ub = np.vstack([A[le], -A[ge]]) if le or ge else None
    b_ub = np.concatenate([b[le], -b[ge]]) if le or ge else None
    bounds = [(None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
              for lo, hi in zip(problem.lb, problem.ub)]
    res = linprog(problem.c, A_ub=A_ub, b_ub=b_ub, A_eq=A[eq] if eq else None,
                  b_eq=b[eq] if eq else None, bounds=bounds, method="highs")
    if res.status == 2:
        raise InfeasibleError(res.message)
    if res.status == 3:
        raise UnboundedError(res.message)
    if res.status != 0:
        raise NumericalFailureError(res.message)
    y = np.zeros(len(sen))
    if le or ge:
        marg = res.ineqlin.marginals
        y[le] = marg[: len(le)]
        y[ge] = -marg[len(le):]
    if eq:
        y[eq] = res.eqlin.marginals
    return LpSolution(np.asarray(res.x), float(res.fun), y, "optimal", int(res.nit))


# --------------------------------------------------------------------------
# plain-text dump
# --------------------------------------------------------------------------
#
#   LP <m> <n>
#   NAMES n1 n2 ...
#   OBJ c1 c2 ...
#   LB l1 l2 ...          (-inf allowed)
#   UB u1 u2 ...          (inf allowed)
#   ROW <sense> <rhs> a1 a2 ...      (m lines)


def _fmt(v) -> str:
    return " ".join(repr(float(t)) for t in np.ravel(v))


def dump_lp(problem: LpProblem) -> str:
    m, n = problem.shape
    lines = [
        f"LP {m} {n}",
        "NAMES " + " ".join(problem.names),
        "OBJ " + _fmt(problem.c),
        "LB " + _fmt(problem.lb),
        "UB " + _fmt(problem.ub),
    ]
    for i in range(m):
        lines.append(f"ROW {problem.senses[i]} {float(problem.b[i])!r} " + _fmt(problem.A[i]))
    return "\n".join(lines) + "\n"


def load_lp(text: str) -> LpProblem:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or rows[0][0] != "LP":
        raise ValueError("not an LP dump")
    m, n = int(rows[0][1]), int(rows[0][2])
    tags = {r[0]: r[1:] for r in rows[1:] if r[0] != "ROW"}
    body = [r[1:] for r in rows[1:] if r[0] == "ROW"]
    if len(body) != m:
        raise ValueError(f"expected {m} rows, found {len(body)}")
    num = lambda xs: np.array([float(t) for t in xs])  # noqa: E731
    A = np.array([num(r[2:]) for r in body]).reshape(m, n)
    return LpProblem(
        c=num(tags["OBJ"]),
        A=A,
        senses=tuple(r[0] for r in body),
        b=num([r[1] for r in body]),
        lb=num(tags["LB"]),
        ub=num(tags["UB"]),
        names=tuple(tags.get("NAMES", ())),
    )
