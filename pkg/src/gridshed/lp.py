"""Linear-program contract and a deterministic solve backed by HiGHS.

Problems are built incrementally (sparse rows as index->coefficient dicts)
and are not mutated during solve, so distinct problems may be solved
concurrently.  Solutions satisfy all constraints to a scaled tolerance of
1e-7 or better; identical input yields identical output.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix


class LpNumericalError(RuntimeError):
    """The LP solver failed numerically (distinct from model infeasibility)."""


@dataclass
class LpProblem:
    """Sparse LP: minimize c'x subject to eq/ub rows and variable bounds."""

    names: list = field(default_factory=list)
    c: list = field(default_factory=list)
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)
    eq_rows: list = field(default_factory=list)
    eq_rhs: list = field(default_factory=list)
    ub_rows: list = field(default_factory=list)
    ub_rhs: list = field(default_factory=list)
    tags: dict = field(default_factory=dict)

    @property
    def n_vars(self):
        return len(self.names)

    @property
    def n_constraints(self):
        return len(self.eq_rows) + len(self.ub_rows)

    def add_var(self, name, lower=0.0, upper=None, cost=0.0):
        idx = len(self.names)
        self.names.append(name)
        self.c.append(cost)
        self.lower.append(lower)
        self.upper.append(upper)
        return idx

    def add_eq(self, coeffs, rhs):
        self.eq_rows.append(dict(coeffs))
        self.eq_rhs.append(rhs)

    def add_ub(self, coeffs, rhs):
        self.ub_rows.append(dict(coeffs))
        self.ub_rhs.append(rhs)


@dataclass(frozen=True)
class LpSolution:
    """Solve outcome: status in {optimal, infeasible, unbounded} plus primals."""

    status: str
    x: np.ndarray | None = None
    objective: float | None = None

    @property
    def optimal(self):
        return self.status == "optimal"


def _sparse(rows, n):
    data, ri, ci = [], [], []
    for i, row in enumerate(rows):
        for j, v in row.items():
            ri.append(i)
            ci.append(j)
            data.append(v)
    return csr_matrix((data, (ri, ci)), shape=(len(rows), n))


def solve_lp(problem):
    """Solve an LpProblem; raises LpNumericalError on solver breakdown."""
    n = problem.n_vars
    if n == 0:
        return LpSolution(status="optimal", x=np.zeros(0), objective=0.0)
    c = np.asarray(problem.c, dtype=float)
    bounds = list(zip(problem.lower, problem.upper))
    a_eq = _sparse(problem.eq_rows, n) if problem.eq_rows else None
    b_eq = np.asarray(problem.eq_rhs, dtype=float) if problem.eq_rhs else None
    a_ub = _sparse(problem.ub_rows, n) if problem.ub_rows else None
    b_ub = np.asarray(problem.ub_rhs, dtype=float) if problem.ub_rhs else None

    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs",
        options={"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9},
    )
    if res.status == 0:
        return LpSolution(status="optimal", x=np.asarray(res.x), objective=float(res.fun))
    if res.status == 2:
        return LpSolution(status="infeasible")
    if res.status == 3:
        return LpSolution(status="unbounded")
    raise LpNumericalError(f"LP solve failed: status={res.status} ({res.message})")
