"""Gauss-Newton SQP solver for collocation problems.

The cost is a sum of squares, so its Gauss-Newton matrix 2 J_r' J_r serves as
the QP Hessian. Each iteration linearizes the defects, boundary conditions,
inequalities g >= 0 and simple bounds, solves the QP with a small primal-dual
active-set loop on the dense KKT system, and globalizes with an l1 merit line
search plus one second-order correction.

All derivatives are central finite differences with step max(1e-6, 1e-7 |y|).
Columns are perturbed in groups that share no constraint rows (node index mod 3),
so a full Jacobian costs a few hundred function evaluations regardless of n.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, lu_factor, lu_solve

from ..errors import LineSearchFail, MaxIter, SolverNonFinite
from .collocation import DecisionVector, defects

log = logging.getLogger(__name__)


@dataclass
class CollocationNLP:
    """A transcribed optimal-control problem.

    ``cost_residuals(dv)`` returns an (n_blocks, k) array whose squared sum is the
    cost; ``cost_stencil`` is "node" (block k reads node k) or "interval" (block j
    reads nodes j and j+1). ``inequality(dv)`` returns an (n, k) node-local array
    required to be >= 0. ``boundary(dv)`` returns equality residuals reading only
    ``boundary_nodes``. Every block may also read the final time.
    """

    n: int
    nx: int
    nu: int
    dynamics: object
    cost_residuals: object
    cost_stencil: str = "node"
    boundary: object = None
    boundary_nodes: tuple = (0,)
    inequality: object = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 grid nodes, got {self.n}")
        size = self.size
        self.lower = np.full(size, -np.inf) if self.lower is None else np.asarray(self.lower, float)
        self.upper = np.full(size, np.inf) if self.upper is None else np.asarray(self.upper, float)
        if self.lower.shape != (size,) or self.upper.shape != (size,):
            raise ValueError("bounds must match the decision vector length")
        if np.any(self.lower > self.upper):
            raise ValueError("empty bound interval")
        if self.cost_stencil not in ("node", "interval"):
            raise ValueError(f"unknown cost stencil {self.cost_stencil!r}")

    @property
    def size(self):
        return self.n * (self.nx + self.nu) + 1

    def unflatten(self, y):
        return DecisionVector.unflatten(y, self.n, self.nx, self.nu)

    def node_of_column(self):
        n, nx, nu = self.n, self.nx, self.nu
        node = np.empty(self.size, dtype=int)
        node[: n * nx] = np.repeat(np.arange(n), nx)
        node[n * nx : n * (nx + nu)] = np.repeat(np.arange(n), nu)
        node[-1] = -1
        return node

    def count_boundary_conditions(self, y):
        return 0 if self.boundary is None else len(np.atleast_1d(self.boundary(self.unflatten(y))))


@dataclass
class Evaluation:
    defects: np.ndarray
    boundary: np.ndarray
    inequality: np.ndarray
    cost_residuals: np.ndarray

    @property
    def equality(self):
        return np.concatenate([self.defects, self.boundary])

    @property
    def cost(self):
        return float(self.cost_residuals @ self.cost_residuals)

    def violation(self):
        eq = np.max(np.abs(self.equality), initial=0.0)
        ineq = np.max(-self.inequality, initial=0.0)
        return max(eq, ineq)


def evaluate(problem: CollocationNLP, y) -> Evaluation:
    dv = problem.unflatten(y)
    d = defects(dv, problem.dynamics).ravel()
    b = np.zeros(0) if problem.boundary is None else np.atleast_1d(problem.boundary(dv)).astype(float)
    g = np.zeros(0) if problem.inequality is None else np.asarray(problem.inequality(dv), float).ravel()
    r = np.asarray(problem.cost_residuals(dv), float).ravel()
    return Evaluation(d, b, g, r)


def fd_steps(y):
    return np.maximum(1e-6, 1e-7 * np.abs(y))


def _local_rows(problem, ev):
    """For each node, the indices (into the stacked local vector) of rows reading it."""
    n, nx = problem.n, problem.nx
    nd, nr, ng = ev.defects.size, ev.cost_residuals.size, ev.inequality.size
    rows = [[] for _ in range(n)]
    # defects: interval j reads nodes j and j+1
    for j in range(n - 1):
        block = np.arange(j * nx, (j + 1) * nx)
        rows[j].append(block)
        rows[j + 1].append(block)
    if ng:
        k = ng // n
        for j in range(n):
            rows[j].append(nd + j * k + np.arange(k))
    if nr:
        off = nd + ng
        if problem.cost_stencil == "node":
            k = nr // n
            for j in range(n):
                rows[j].append(off + j * k + np.arange(k))
        else:
            k = nr // (n - 1)
            for j in range(n - 1):
                block = off + j * k + np.arange(k)
                rows[j].append(block)
                rows[j + 1].append(block)
    return [np.concatenate(r) if r else np.zeros(0, int) for r in rows]


def _stack_local(ev):
    return np.concatenate([ev.defects, ev.inequality, ev.cost_residuals])


def jacobians(problem: CollocationNLP, y, ev: Evaluation, free=None):
    """Central-difference Jacobians (J_eq, J_ineq, J_cost) at ``y``.

    ``free`` masks the columns to differentiate; the rest are left zero.
    """
    size = problem.size
    free = np.ones(size, bool) if free is None else free
    h = fd_steps(y)
    node = problem.node_of_column()
    base_local = _stack_local(ev)
    m_local = base_local.size
    J_local = np.zeros((m_local, size))
    rows_of = _local_rows(problem, ev)
    n, nx, nu = problem.n, problem.nx, problem.nu

    # component index within a node, so every group perturbs one component per node
    comp = np.empty(size, dtype=int)
    comp[: n * nx] = np.tile(np.arange(nx), n)
    comp[n * nx : n * (nx + nu)] = nx + np.tile(np.arange(nu), n)
    comp[-1] = -1

    for color in range(3):
        for c in range(nx + nu):
            cols = np.flatnonzero(free & (comp == c) & (node % 3 == color) & (node >= 0))
            if cols.size == 0:
                continue
            yp, ym = y.copy(), y.copy()
            yp[cols] += h[cols]
            ym[cols] -= h[cols]
            diff = _stack_local(evaluate(problem, yp)) - _stack_local(evaluate(problem, ym))
            for col in cols:
                r = rows_of[node[col]]
                J_local[r, col] = diff[r] / (2.0 * h[col])

    nb = ev.boundary.size
    J_b = np.zeros((nb, size))
    if free[-1]:
        yp, ym = y.copy(), y.copy()
        yp[-1] += h[-1]
        ym[-1] -= h[-1]
        ep, em = evaluate(problem, yp), evaluate(problem, ym)
        J_local[:, -1] = (_stack_local(ep) - _stack_local(em)) / (2.0 * h[-1])
        if nb:
            J_b[:, -1] = (ep.boundary - em.boundary) / (2.0 * h[-1])

    if nb:
        bnodes = set(int(j) % n for j in problem.boundary_nodes)
        cols = np.flatnonzero(free & np.isin(node, list(bnodes)))
        for col in cols:
            yp, ym = y.copy(), y.copy()
            yp[col] += h[col]
            ym[col] -= h[col]
            dvp, dvm = problem.unflatten(yp), problem.unflatten(ym)
            J_b[:, col] = (np.atleast_1d(problem.boundary(dvp)) - np.atleast_1d(problem.boundary(dvm))) / (
                2.0 * h[col]
            )

    nd, ng = ev.defects.size, ev.inequality.size
    J_eq = np.vstack([J_local[:nd], J_b])
    J_g = J_local[nd : nd + ng]
    J_r = J_local[nd + ng :]
    return J_eq, J_g, J_r


@dataclass
class SolverOptions:
    tol_c: float = 1e-4
    tol_g: float = 1e-3
    max_iter: int = 200
    time_limit: float | None = None
    regularization: float = 1e-8


@dataclass
class SolveReport:
    status: str
    iterations: int
    qp_iterations: int
    constraint_violation: float
    stationarity: float
    cost: float
    initial_cost: float
    initial_violation: float
    penalty: float
    multipliers_eq: np.ndarray = field(repr=False)
    multipliers_ineq: np.ndarray = field(repr=False)
    bound_multipliers_lower: np.ndarray = field(repr=False)
    bound_multipliers_upper: np.ndarray = field(repr=False)
    n_boundary_conditions: int = 0
    wall_time: float = 0.0
    history: list = field(default_factory=list, repr=False)

    def as_dict(self):
        return {
            "status": self.status,
            "iterations": self.iterations,
            "qp_iterations": self.qp_iterations,
            "constraint_violation": self.constraint_violation,
            "stationarity": self.stationarity,
            "cost": self.cost,
            "initial_cost": self.initial_cost,
            "initial_violation": self.initial_violation,
            "penalty": self.penalty,
            "n_boundary_conditions": self.n_boundary_conditions,
            "history": self.history,
        }


def bound_violation(y, lower, upper):
    return np.maximum(lower - y, 0.0) + np.maximum(y - upper, 0.0)


def total_violation(problem: CollocationNLP, y, ev: Evaluation):
    """Infinity norm over equalities, violated inequalities and violated bounds."""
    return max(ev.violation(), float(np.max(bound_violation(y, problem.lower, problem.upper), initial=0.0)))


def _l1_violation(problem, y, ev):
    return (np.abs(ev.equality).sum() + np.maximum(-ev.inequality, 0.0).sum()
            + bound_violation(y, problem.lower, problem.upper).sum())


class _QP:
    """Dense equality/inequality QP  min 0.5 d'Hd + g'd,  A_e d + c = 0,  A_i d + b >= 0."""

    def __init__(self, H, g, A_e, c, A_i, b):
        self.H, self.g, self.A_e, self.c, self.A_i, self.b = H, g, A_e, c, A_i, b
        self.lu = None
        self.rows = None

    def _factor(self, W):
        A = np.vstack([self.A_e, self.A_i[W]])
        n, m = self.H.shape[0], A.shape[0]
        K = np.zeros((n + m, n + m))
        K[:n, :n] = self.H
        K[:n, n:] = -A.T
        K[n:, :n] = A
        # tiny dual regularization keeps dependent active rows solvable
        K[n:, n:] = -1e-12 * np.eye(m)
        self.lu = lu_factor(K, check_finite=False)
        self.rows = A
        return A

    def _solve(self, rhs_eq):
        n = self.H.shape[0]
        sol = lu_solve(self.lu, np.concatenate([-self.g, -rhs_eq]), check_finite=False)
        if not np.all(np.isfinite(sol)):
            raise LinAlgError("singular KKT system")
        return sol[:n], sol[n:]

    def solve(self, W0):
        W = sorted(set(W0))
        k = self.b.size
        me = self.c.size
        count = 0
        for count in range(1, 4 * k + 20):
            self._factor(W)
            used = list(W)
            d, nu = self._solve(np.concatenate([self.c, self.b[W]]))
            nu_w = nu[me:]
            if nu_w.size and nu_w.min() < -1e-10:
                W.pop(int(np.argmin(nu_w)))
                continue
            slack = self.A_i @ d + self.b if k else np.zeros(0)
            slack[W] = np.inf
            if k and slack.min() < -1e-10:
                W.append(int(np.argmin(slack)))
                W.sort()
                continue
            break
        nu_i = np.zeros(k)
        nu_i[used] = nu_w
        self.W = used
        return d, nu[:me], nu_i, count

    def correction(self, rhs_eq_active):
        """Re-solve with the last active set and factorization for a new constraint offset."""
        return self._solve(rhs_eq_active)[0]


def nlp_solve(problem: CollocationNLP, initial_guess, options: SolverOptions | None = None):
    """Solve the transcribed problem from ``initial_guess``.

    Returns ``(DecisionVector, SolveReport)``. Raises ``MaxIter``,
    ``LineSearchFail`` or ``SolverNonFinite`` carrying the best iterate and
    report when the tolerances are not met.
    """
    opts = options or SolverOptions()
    start = time.perf_counter()
    y0 = initial_guess.flatten() if isinstance(initial_guess, DecisionVector) else np.asarray(initial_guess, float)
    if y0.shape != (problem.size,):
        raise ValueError(f"initial guess has length {y0.size}, expected {problem.size}")
    lo, hi = problem.lower, problem.upper
    fixed = lo == hi
    y = y0.copy()
    y[fixed] = lo[fixed]
    work = np.flatnonzero(~fixed)
    lo_rows = work[np.isfinite(lo[work])]
    hi_rows = work[np.isfinite(hi[work])]
    pos = {int(c): i for i, c in enumerate(work)}

    ev = evaluate(problem, y)
    if not np.all(np.isfinite(_stack_local(ev))) or not np.all(np.isfinite(ev.boundary)):
        raise SolverNonFinite("non-finite residuals at the initial guess", best=problem.unflatten(y))
    initial_cost, initial_violation = ev.cost, total_violation(problem, y, ev)
    m_g = ev.inequality.size
    nbc = ev.boundary.size

    nu_eq = np.zeros(ev.equality.size)
    nu_in = np.zeros(m_g + lo_rows.size + hi_rows.size)
    penalty = 1.0
    reg = opts.regularization
    best = (y.copy(), ev)
    iterations = qp_iterations = 0
    history = []
    status = "MaxIter"
    stationarity = np.inf
    W_prev = []

    def better(y_new, e_new, y_old, e_old):
        v_new, v_old = total_violation(problem, y_new, e_new), total_violation(problem, y_old, e_old)
        if v_new <= opts.tol_c and v_old <= opts.tol_c:
            return e_new.cost < e_old.cost
        return v_new < v_old

    def merit(y_, ev_):
        return ev_.cost + penalty * _l1_violation(problem, y_, ev_)

    # selectors turning bound rows into reduced-space inequality rows
    S_lo = np.zeros((lo_rows.size, work.size))
    S_lo[np.arange(lo_rows.size), [pos[int(c)] for c in lo_rows]] = 1.0
    S_hi = np.zeros((hi_rows.size, work.size))
    S_hi[np.arange(hi_rows.size), [pos[int(c)] for c in hi_rows]] = -1.0

    while iterations < opts.max_iter:
        if opts.time_limit is not None and time.perf_counter() - start > opts.time_limit:
            break
        iterations += 1
        J_eq, J_g, J_r = jacobians(problem, y, ev, ~fixed)
        Jr = J_r[:, work]
        grad = 2.0 * Jr.T @ ev.cost_residuals
        H = 2.0 * Jr.T @ Jr
        A_e = J_eq[:, work]
        A_i = np.vstack([J_g[:, work], S_lo, S_hi])
        b_i = np.concatenate([ev.inequality, y[lo_rows] - lo[lo_rows], hi[hi_rows] - y[hi_rows]])
        violation = total_violation(problem, y, ev)

        step_taken = False
        while True:
            qp = _QP(H + reg * np.eye(work.size), grad, A_e, ev.equality, A_i, b_i)
            try:
                W0 = set(W_prev) | set(np.flatnonzero(b_i <= 0.0).tolist())
                d, nu_eq, nu_in, count = qp.solve(W0)
            except LinAlgError:
                reg = max(reg * 100.0, 1e-10)
                if reg > 1e6:
                    break
                continue
            qp_iterations += count
            lag = grad - A_e.T @ nu_eq - A_i.T @ nu_in
            stationarity = float(np.max(np.abs(lag), initial=0.0))
            if not history or history[-1]["iter"] != iterations:
                history.append({"iter": iterations, "cost": ev.cost, "violation": violation,
                                "stationarity": stationarity, "active": len(qp.W)})
                log.debug("it %d cost %.6g viol %.3e stat %.3e active %d reg %.1e", iterations, ev.cost,
                          violation, stationarity, len(qp.W), reg)
            if violation <= opts.tol_c and stationarity <= opts.tol_g:
                status = "Converged"
                break

            penalty = max(penalty, 1.5 * float(np.max(np.abs(np.concatenate([nu_eq, nu_in])), initial=0.0)) + 1e-6)
            phi0 = merit(y, ev)
            slope = float(grad @ d) - penalty * _l1_violation(problem, y, ev)
            slope = min(slope, -1e-16)

            def trial(step):
                y_t = y.copy()
                y_t[work] += step
                ev_t = evaluate(problem, y_t)
                ok = np.all(np.isfinite(_stack_local(ev_t))) and np.all(np.isfinite(ev_t.boundary))
                return y_t, ev_t, (merit(y_t, ev_t) if ok else np.inf)

            y_t, ev_t, phi_t = trial(d)
            accepted = phi_t <= phi0 + 1e-4 * slope
            if not accepted and np.isfinite(phi_t):
                # second-order correction against curvature of the constraints
                # bound rows are linear, so only general inequalities get a new offset
                shifted = [(ev_t.inequality[i] - A_i[i] @ d) if i < m_g else b_i[i] for i in qp.W]
                rhs = np.concatenate([ev_t.equality - A_e @ d, shifted])
                try:
                    d_soc = qp.correction(rhs)
                    y_s, ev_s, phi_s = trial(d_soc)
                    if phi_s <= phi0 + 1e-4 * slope:
                        y_t, ev_t, phi_t, accepted = y_s, ev_s, phi_s, True
                except LinAlgError:
                    pass
            alpha = 1.0
            while not accepted and alpha > 1e-6:
                alpha *= 0.5
                y_t, ev_t, phi_t = trial(alpha * d)
                accepted = phi_t <= phi0 + 1e-4 * alpha * slope
            if accepted:
                y, ev = y_t, ev_t
                W_prev = qp.W
                reg = max(reg / 10.0, opts.regularization)
                step_taken = True
                break
            reg *= 100.0
            if reg > 1e6:
                break
        if status == "Converged":
            break
        if better(y, ev, *best):
            best = (y.copy(), ev)
        if not step_taken:
            status = "LineSearchFail"
            break
    else:
        status = "MaxIter"

    if status == "Converged" or better(y, ev, *best):
        best = (y.copy(), ev)
    y_best, ev_best = best
    z_lo = np.zeros(problem.size)
    z_hi = np.zeros(problem.size)
    z_lo[lo_rows] = nu_in[m_g : m_g + lo_rows.size]
    z_hi[hi_rows] = nu_in[m_g + lo_rows.size :]
    report = SolveReport(
        status=status,
        iterations=iterations,
        qp_iterations=qp_iterations,
        constraint_violation=total_violation(problem, y_best, ev_best),
        stationarity=stationarity,
        cost=ev_best.cost,
        initial_cost=initial_cost,
        initial_violation=initial_violation,
        penalty=penalty,
        multipliers_eq=nu_eq,
        multipliers_ineq=nu_in[:m_g],
        bound_multipliers_lower=z_lo,
        bound_multipliers_upper=z_hi,
        n_boundary_conditions=nbc,
        wall_time=time.perf_counter() - start,
        history=history,
    )
    solution = problem.unflatten(y_best)
    if status == "LineSearchFail":
        raise LineSearchFail(f"no acceptable step (violation {report.constraint_violation:.3e})",
                             best=solution, report=report)
    if status != "Converged":
        raise MaxIter(f"no convergence after {iterations} iterations "
                      f"(violation {report.constraint_violation:.3e}, stationarity {stationarity:.3e})",
                      best=solution, report=report)
    return solution, report
