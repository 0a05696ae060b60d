"""Dense linear algebra used by the solvers.

Two routines live here: a row-pivoted Gaussian elimination for square
systems and a two-phase tableau simplex (Bland's rule) for small dense
linear programs.  Both are deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-13
_RATIO_TOL = 1e-12
_MAX_PIVOTS = 100_000


class SingularMatrix(ArithmeticError):
    """Raised when elimination meets a pivot below the relative threshold."""


class IllFormedProblem(ValueError):
    """Raised for LP inputs with inconsistent dimensions or non-finite data."""


def solve_linear(A, b):
    """Solve ``A x = b`` by Gaussian elimination with scaled row pivoting.

    A pivot is rejected when its magnitude falls below ``1e-13`` times the
    largest entry of its (original) row.
    """
    a = np.array(A, dtype=float, copy=True)
    x = np.array(b, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    n = a.shape[0]
    if x.shape[0] != n:
        raise ValueError(f"right-hand side has length {x.shape[0]}, expected {n}")

    scale = np.abs(a).max(axis=1)
    if np.any(scale == 0.0):
        raise SingularMatrix("matrix has an all-zero row")

    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k]) / scale[k:]))
        if abs(a[p, k]) < PIVOT_TOL * scale[p]:
            raise SingularMatrix(f"pivot {a[p, k]:.3e} at column {k} below threshold")
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
            scale[[k, p]] = scale[[p, k]]
        factors = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(factors, a[k, k:])
        x[k + 1:] -= np.multiply.outer(factors, x[k])

    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


class LpStatus(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class LpProblem:
    """``maximize c.x`` subject to ``A_eq x = b_eq``, ``A_ge x >= b_ge``, ``lb <= x <= ub``.

    ``lb`` defaults to zero; entries may be ``-inf``.  ``ub`` defaults to
    ``+inf`` everywhere.
    """

    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ge: np.ndarray | None = None
    b_ge: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).ravel()
        n = c.shape[0]
        object.__setattr__(self, "c", c)
        for mat, rhs in (("A_eq", "b_eq"), ("A_ge", "b_ge")):
            A = getattr(self, mat)
            b = getattr(self, rhs)
            A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float)
            b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
            if A.ndim == 1 and A.size == n:
                A = A[None, :]
            if A.ndim != 2 or A.shape[1] != n:
                raise IllFormedProblem(f"{mat} has shape {A.shape}, expected (m, {n})")
            if b.shape[0] != A.shape[0]:
                raise IllFormedProblem(f"{rhs} has length {b.shape[0]}, expected {A.shape[0]}")
            object.__setattr__(self, mat, A)
            object.__setattr__(self, rhs, b)
        lb = np.zeros(n) if self.lb is None else np.broadcast_to(np.asarray(self.lb, float), (n,)).copy()
        ub = np.full(n, np.inf) if self.ub is None else np.broadcast_to(np.asarray(self.ub, float), (n,)).copy()
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)
        finite = [c, self.A_eq, self.b_eq, self.A_ge, self.b_ge]
        if not all(np.all(np.isfinite(v)) for v in finite):
            raise IllFormedProblem("LP coefficients must be finite")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise IllFormedProblem("invalid variable bounds")

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    duals_eq: np.ndarray | None = None
    duals_ge: np.ndarray | None = None
    pivots: int = 0
    info: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL


class _Tableau:
    """Dense tableau ``B^-1 [M | rhs]`` with Bland's pivoting rule."""

    def __init__(self, M, rhs, basis):
        self.T = np.hstack([M, rhs[:, None]])
        self.basis = list(basis)
        self.pivots = 0

    def reduced_costs(self, cost):
        cb = cost[self.basis]
        return cost - cb @ self.T[:, :-1]

    def pivot(self, i, j):
        T = self.T
        T[i] /= T[i, j]
        col = T[:, j].copy()
        col[i] = 0.0
        T -= np.outer(col, T[i])
        self.basis[i] = j
        self.pivots += 1
        if self.pivots > _MAX_PIVOTS:
            raise RuntimeError("simplex pivot limit exceeded")

    def run(self, cost, allowed):
        """Maximize ``cost`` over the current tableau; returns False if unbounded."""
        T = self.T
        while True:
            d = self.reduced_costs(cost)
            candidates = np.flatnonzero((d > OPT_TOL) & allowed)
            if candidates.size == 0:
                return True
            j = int(candidates[0])
            col = T[:, j]
            rows = np.flatnonzero(col > _RATIO_TOL)
            if rows.size == 0:
                return False
            ratios = T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + _RATIO_TOL * (1.0 + abs(best))]
            i = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(i, j)


def _standard_form(problem: LpProblem):
    """Rewrite the problem over nonnegative variables with equality rows only.

    Returns ``(M, rhs, cost, recover, n_eq, n_ge)`` where ``recover`` maps a
    standard-form point back to the original variables.
    """
    n = problem.n_vars
    lb, ub = problem.lb, problem.ub
    # original x = shift + T_map @ z, z >= 0
    cols = []
    shift = np.zeros(n)
    ub_rows = []
    for k in range(n):
        if np.isfinite(lb[k]):
            shift[k] = lb[k]
            cols.append((k, 1.0))
            if np.isfinite(ub[k]):
                ub_rows.append((len(cols) - 1, ub[k] - lb[k]))
        elif np.isfinite(ub[k]):
            shift[k] = ub[k]
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    nz = len(cols)
    T_map = np.zeros((n, nz))
    for idx, (k, s) in enumerate(cols):
        T_map[k, idx] = s

    A_eq = problem.A_eq @ T_map
    b_eq = problem.b_eq - problem.A_eq @ shift
    A_ge = problem.A_ge @ T_map
    b_ge = problem.b_ge - problem.A_ge @ shift
    if ub_rows:
        extra = np.zeros((len(ub_rows), nz))
        for r, (idx, width) in enumerate(ub_rows):
            extra[r, idx] = -1.0
        A_ge = np.vstack([A_ge, extra])
        b_ge = np.concatenate([b_ge, [-w for _, w in ub_rows]])

    n_eq, n_ge = A_eq.shape[0], A_ge.shape[0]
    M = np.zeros((n_eq + n_ge, nz + n_ge))
    M[:n_eq, :nz] = A_eq
    M[n_eq:, :nz] = A_ge
    M[n_eq:, nz:] = -np.eye(n_ge)
    rhs = np.concatenate([b_eq, b_ge])
    cost = np.concatenate([problem.c @ T_map, np.zeros(n_ge)])

    def recover(zfull):
        return shift + T_map @ zfull[:nz]

    return M, rhs, cost, recover, n_eq, n_ge


def lp_solve(problem: LpProblem) -> LpSolution:
    """Solve a dense LP with the two-phase simplex method and Bland's rule.

    Infeasible and unbounded problems are reported through ``status``.
    Dual values follow the convention ``y_ge <= 0`` and
    ``A_eq^T y_eq + A_ge^T y_ge >= c`` at optimality.
    """
    if not isinstance(problem, LpProblem):
        raise IllFormedProblem("lp_solve expects an LpProblem")
    M, rhs, cost, recover, n_eq, n_ge = _standard_form(problem)
    m, N = M.shape
    n_ge_orig = problem.A_ge.shape[0]

    if m == 0:
        if np.any(cost > OPT_TOL):
            return LpSolution(LpStatus.UNBOUNDED)
        x = recover(np.zeros(N))
        return LpSolution(LpStatus.OPTIMAL, x, float(problem.c @ x),
                          np.zeros(n_eq), np.zeros(n_ge_orig))

    sign = np.where(rhs < 0, -1.0, 1.0)
    M = M * sign[:, None]
    rhs = rhs * sign

    # phase 1: one artificial per row
    tab = _Tableau(np.hstack([M, np.eye(m)]), rhs, range(N, N + m))
    cost1 = np.concatenate([np.zeros(N), -np.ones(m)])
    tab.run(cost1, np.ones(N + m, dtype=bool))
    infeas = -float(cost1[tab.basis] @ tab.T[:, -1])
    if infeas > FEAS_TOL * (1.0 + np.abs(rhs).max()):
        return LpSolution(LpStatus.INFEASIBLE, pivots=tab.pivots, info={"phase1": infeas})

    # drive remaining artificials out of the basis; drop redundant rows
    keep = list(range(m))
    for i in range(m):
        if tab.basis[i] >= N:
            row = tab.T[i, :N]
            cand = np.flatnonzero(np.abs(row) > FEAS_TOL)
            if cand.size:
                tab.pivot(i, int(cand[0]))
            else:
                keep.remove(i)
    T = tab.T[keep][:, list(range(N)) + [N + m]]
    basis = [tab.basis[i] for i in keep]
    tab2 = _Tableau(T[:, :-1], T[:, -1], basis)
    tab2.pivots = tab.pivots
    if not tab2.run(cost, np.ones(N, dtype=bool)):
        return LpSolution(LpStatus.UNBOUNDED, pivots=tab2.pivots)

    z = np.zeros(N)
    z[tab2.basis] = np.maximum(tab2.T[:, -1], 0.0)
    x = recover(z)

    y = np.zeros(m)
    if keep:
        B = M[np.ix_(keep, tab2.basis)]
        y[keep] = solve_linear(B.T, cost[tab2.basis])
    y *= sign
    return LpSolution(
        LpStatus.OPTIMAL,
        x=x,
        objective=float(problem.c @ x),
        duals_eq=y[:n_eq],
        duals_ge=y[n_eq:n_eq + n_ge_orig],
        pivots=tab2.pivots,
    )
