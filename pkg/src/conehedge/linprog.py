"""Scalar linear programming.

One solving contract used by every other module: ``solve`` takes a dense
``LpProblem`` (minimize ``c.x`` subject to ``A x >= b``, ``E x = f`` and
per-variable bounds) and returns a status-tagged ``LpResult`` with primal
point and row duals.

Two engines sit behind the contract.  The default for small dense
problems is a bounded-variable revised simplex with a Bland anti-cycling
fallback after ``10 m`` degenerate pivots; it terminates at a vertex and
keeps per-call overhead in the tens of microseconds, which the backward
recursion relies on.  Large instances (the no-arbitrage certificate and
the path-wise membership oracle on big trees) are routed to HiGHS via
scipy.  Identical inputs give identical results per engine: pivot rules
are deterministic and HiGHS runs single-threaded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

ATOL = 1e-9
CS_TOL = 1e-7

# problems at most this size go to the built-in simplex under engine="auto"
_SIMPLEX_MAX_VARS = 120
_SIMPLEX_MAX_ROWS = 600


class LpNumericalError(RuntimeError):
    """Numerical failure (cycling guard or residual check), distinct from
    an infeasible status."""


@dataclass
class LpProblem:
    objective: np.ndarray
    ineq: tuple[np.ndarray, np.ndarray] | None = None   # A x >= b
    eq: tuple[np.ndarray, np.ndarray] | None = None     # E x = f
    bounds: list[tuple[float | None, float | None]] | None = None  # default free

    def __post_init__(self):
        import scipy.sparse

        self.objective = np.asarray(self.objective, dtype=float).reshape(-1)
        n = self.objective.size
        if self.ineq is not None:
            A = self.ineq[0]
            if not scipy.sparse.issparse(A):
                A = np.atleast_2d(np.asarray(A, dtype=float))
            b = np.asarray(self.ineq[1], dtype=float).reshape(-1)
            if A.shape != (b.size, n):
                raise ValueError("inconsistent inequality dimensions")
            self.ineq = (A, b)
        if self.eq is not None:
            E = self.eq[0]
            if not scipy.sparse.issparse(E):
                E = np.atleast_2d(np.asarray(E, dtype=float))
            f = np.asarray(self.eq[1], dtype=float).reshape(-1)
            if E.shape != (f.size, n):
                raise ValueError("inconsistent equality dimensions")
            self.eq = (E, f)
        if self.bounds is not None and len(self.bounds) != n:
            raise ValueError("bounds length must match variable count")
        for arr in [self.objective,
                    *(self.ineq if self.ineq else ()),
                    *(self.eq if self.eq else ())]:
            if scipy.sparse.issparse(arr):
                if not np.all(np.isfinite(arr.data)):
                    raise ValueError("coefficients must be finite")
            elif arr.size and not np.all(np.isfinite(arr)):
                raise ValueError("coefficients must be finite")

    @property
    def is_sparse(self):
        import scipy.sparse
        return any(part is not None and scipy.sparse.issparse(part[0])
                   for part in (self.ineq, self.eq))

    @property
    def nvars(self):
        return self.objective.size

    @property
    def nrows(self):
        m = 0
        if self.ineq is not None:
            m += self.ineq[1].size
        if self.eq is not None:
            m += self.eq[1].size
        return m


@dataclass
class LpResult:
    status: str                     # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    objective_value: float | None = None
    ineq_duals: np.ndarray | None = None
    eq_duals: np.ndarray | None = None


def solve(p: LpProblem, engine: str = "auto", feasible_point=None) -> LpResult:
    """Solve an LP; raises LpNumericalError only when both engines fail.

    ``feasible_point`` lets callers that know a primal-feasible start skip
    simplex phase 1 (the point is re-verified before being trusted).
    """
    if engine == "auto":
        small = (not p.is_sparse and p.nvars <= _SIMPLEX_MAX_VARS
                 and p.nrows <= _SIMPLEX_MAX_ROWS)
        engine = "simplex" if small else "highs"
    if engine == "simplex" and p.is_sparse:
        engine = "highs"
    if engine == "simplex":
        try:
            res = _solve_simplex(p, feasible_point)
            _verify(p, res)
            return res
        except LpNumericalError:
            res = _solve_highs(p)
            _verify(p, res)
            return res
    if engine == "highs":
        res = _solve_highs(p)
        _verify(p, res)
        return res
    raise ValueError(f"unknown engine {engine!r}")


def _verify(p: LpProblem, res: LpResult, tol=1e-7):
    if res.status != "optimal":
        return
    x = res.x
    if p.ineq is not None:
        A, b = p.ineq
        scale = np.maximum(1.0, np.abs(b))
        slack = A @ x - b
        if np.any(slack < -tol * scale):
            raise LpNumericalError("primal inequality residual too large")
        u = res.ineq_duals
        if np.any(u < -tol):
            raise LpNumericalError("negative inequality dual")
        if np.any(np.abs(u * slack) > CS_TOL * np.maximum(1.0, np.abs(slack)) * np.maximum(1.0, u)):
            raise LpNumericalError("complementary slackness violated")
    if p.eq is not None:
        E, f = p.eq
        scale = np.maximum(1.0, np.abs(f))
        if np.any(np.abs(E @ x - f) > tol * scale):
            raise LpNumericalError("primal equality residual too large")
    if p.bounds is not None:
        for j, (lo, hi) in enumerate(p.bounds):
            if lo is not None and x[j] < lo - tol * max(1.0, abs(lo)):
                raise LpNumericalError("lower bound violated")
            if hi is not None and x[j] > hi + tol * max(1.0, abs(hi)):
                raise LpNumericalError("upper bound violated")


# ---------------------------------------------------------------------------
# HiGHS engine
# ---------------------------------------------------------------------------

def _solve_highs(p: LpProblem) -> LpResult:
    A_ub = b_ub = A_eq = b_eq = None
    if p.ineq is not None:
        A_ub, b_ub = -p.ineq[0], -p.ineq[1]
    if p.eq is not None:
        A_eq, b_eq = p.eq
    bounds = p.bounds if p.bounds is not None else [(None, None)] * p.nvars
    res = scipy.optimize.linprog(
        p.objective, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
        bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10,
                 "dual_feasibility_tolerance": 1e-10},
    )
    if res.status == 2:
        return LpResult(status="infeasible")
    if res.status == 3:
        return LpResult(status="unbounded")
    if res.status != 0:
        raise LpNumericalError(f"HiGHS failed: {res.message}")
    ineq_duals = eq_duals = None
    if p.ineq is not None:
        # scipy marginals for A_ub x <= b_ub are <= 0; our A x >= b dual is >= 0
        ineq_duals = np.maximum(-np.asarray(res.ineqlin.marginals), 0.0)
    if p.eq is not None:
        eq_duals = np.asarray(res.eqlin.marginals)
    return LpResult(status="optimal", x=np.asarray(res.x),
                    objective_value=float(res.fun),
                    ineq_duals=ineq_duals, eq_duals=eq_duals)


# ---------------------------------------------------------------------------
# Revised simplex engine (bounded variables, two phases)
# ---------------------------------------------------------------------------

_PIVOT_TOL = 1e-9


def _feasible_start(p: LpProblem, x):
    """Check a proposed warm start against all constraints."""
    x = np.asarray(x, dtype=float)
    if x.shape != (p.nvars,) or not np.all(np.isfinite(x)):
        return None
    tol = 1e-9
    if p.ineq is not None:
        A, b = p.ineq
        if np.any(A @ x < b - tol * np.maximum(1.0, np.abs(b))):
            return None
    if p.eq is not None:
        E, f = p.eq
        if np.any(np.abs(E @ x - f) > tol * np.maximum(1.0, np.abs(f))):
            return None
    if p.bounds is not None:
        for j, (lo, hi) in enumerate(p.bounds):
            if lo is not None and x[j] < lo - tol:
                return None
            if hi is not None and x[j] > hi + tol:
                return None
    return x


def _solve_simplex(p: LpProblem, feasible_point=None) -> LpResult:
    n = p.nvars
    m_ineq = p.ineq[1].size if p.ineq is not None else 0
    m_eq = p.eq[1].size if p.eq is not None else 0
    m = m_ineq + m_eq

    # standard form: [A -I; E 0] (x, s) = (b, f), s >= 0
    N = n + m_ineq
    M = np.zeros((m, N))
    rhs = np.zeros(m)
    if p.ineq is not None:
        A, b = p.ineq
        M[:m_ineq, :n] = A
        M[:m_ineq, n:] = -np.eye(m_ineq)
        rhs[:m_ineq] = b
    if p.eq is not None:
        E, f = p.eq
        M[m_ineq:, :n] = E
        rhs[m_ineq:] = f

    lower = np.full(N, -np.inf)
    upper = np.full(N, np.inf)
    if p.bounds is not None:
        for j, (lo, hi) in enumerate(p.bounds):
            lower[j] = -np.inf if lo is None else lo
            upper[j] = np.inf if hi is None else hi
    lower[n:] = 0.0

    if np.any(lower > upper):
        return LpResult(status="infeasible")

    if m == 0:
        return _solve_boundsonly(p, lower[:n], upper[:n])

    warm = _feasible_start(p, feasible_point) if feasible_point is not None else None
    if warm is not None:
        x0 = np.concatenate([warm, np.maximum(p.ineq[0] @ warm - p.ineq[1], 0.0)
                             if p.ineq is not None else np.zeros(0)])
    else:
        # start every variable at the feasible value nearest zero
        x0 = np.clip(np.zeros(N), lower, upper)

    resid = rhs - M @ x0
    # artificial columns absorb the residual with +-1 entries
    Mext = np.hstack([M, np.diag(np.where(resid >= 0, 1.0, -1.0))])
    lower_ext = np.concatenate([lower, np.zeros(m)])
    upper_ext = np.concatenate([upper, np.full(m, np.inf)])
    xval = np.concatenate([x0, np.abs(resid)])
    basis = list(range(N, N + m))

    if warm is None:
        art_cost = np.concatenate([np.zeros(N), np.ones(m)])
        status, basis, xval = _iterate(Mext, art_cost, lower_ext, upper_ext,
                                       basis, xval)
        if status == "numerical":
            raise LpNumericalError("phase-1 simplex failed")
        phase1_obj = float(art_cost @ xval)
        if phase1_obj > 1e-9 * max(1.0, float(np.max(np.abs(rhs))) if m else 1.0):
            return LpResult(status="infeasible")

    # pin artificials at zero for phase 2
    lower_ext[N:] = 0.0
    upper_ext[N:] = 0.0
    xval[N:] = 0.0
    real_cost = np.concatenate([p.objective, np.zeros(m_ineq + m)])
    status, basis, xval = _iterate(Mext, real_cost, lower_ext, upper_ext, basis, xval)
    if status == "numerical":
        raise LpNumericalError("phase-2 simplex failed")
    if status == "unbounded":
        return LpResult(status="unbounded")

    x = xval[:n]
    Bmat = Mext[:, basis]
    try:
        y = np.linalg.solve(Bmat.T, real_cost[basis])
    except np.linalg.LinAlgError as exc:
        raise LpNumericalError("singular final basis") from exc
    ineq_duals = y[:m_ineq] if p.ineq is not None else None
    if ineq_duals is not None:
        if np.any(ineq_duals < -1e-7):
            raise LpNumericalError("sign-violating inequality dual")
        ineq_duals = np.maximum(ineq_duals, 0.0)
    eq_duals = y[m_ineq:] if p.eq is not None else None
    return LpResult(status="optimal", x=x,
                    objective_value=float(p.objective @ x),
                    ineq_duals=ineq_duals, eq_duals=eq_duals)


def _solve_boundsonly(p, lower, upper):
    c = p.objective
    x = np.zeros(p.nvars)
    for j, cj in enumerate(c):
        if cj > 0:
            if np.isinf(lower[j]):
                return LpResult(status="unbounded")
            x[j] = lower[j]
        elif cj < 0:
            if np.isinf(upper[j]):
                return LpResult(status="unbounded")
            x[j] = upper[j]
        else:
            x[j] = min(max(0.0, lower[j]), upper[j])
    return LpResult(status="optimal", x=x, objective_value=float(c @ x),
                    ineq_duals=None, eq_duals=None)


def _iterate(M, cost, lower, upper, basis, xval):
    """Bounded-variable revised simplex main loop.

    Dantzig pricing, switching to Bland's rule after 10 m consecutive
    degenerate pivots; a hard iteration cap reports numerical failure.
    """
    import scipy.linalg

    m, N = M.shape
    basis = np.asarray(basis, dtype=int)
    xval = xval.copy()
    in_basis = np.zeros(N, dtype=bool)
    in_basis[basis] = True
    low_inf = np.isinf(lower)
    up_inf = np.isinf(upper)
    free = low_inf & up_inf
    fixed = ~low_inf & ~up_inf & (lower == upper)
    lo_tol = 1e-11 * np.maximum(1.0, np.where(low_inf, 1.0, np.abs(lower)))
    hi_tol = 1e-11 * np.maximum(1.0, np.where(up_inf, 1.0, np.abs(upper)))
    degenerate_run = 0
    bland_after = 10 * max(m, 1)
    max_iter = 50 * (m + N) + 200

    for _ in range(max_iter):
        try:
            lu = scipy.linalg.lu_factor(M[:, basis], check_finite=False)
            y = scipy.linalg.lu_solve(lu, cost[basis], trans=1, check_finite=False)
        except (ValueError, scipy.linalg.LinAlgError):
            return "numerical", basis, xval
        d = cost - M.T @ y

        # nonbasic variables may rest strictly inside their bounds after a
        # warm start; they move in either improving direction
        at_lower = ~low_inf & (xval <= lower + lo_tol)
        at_upper = ~up_inf & (xval >= upper - hi_tol)
        open_ = ~in_basis & ~fixed
        elig_up = open_ & ~at_upper & (d < -_PIVOT_TOL)
        elig_dn = open_ & ~at_lower & (d > _PIVOT_TOL) & ~elig_up
        elig = elig_up | elig_dn
        if not elig.any():
            return "optimal", basis, xval
        if degenerate_run >= bland_after:
            entering = int(np.argmax(elig))           # smallest eligible index
        else:
            score = np.where(elig, np.abs(d), -1.0)
            entering = int(np.argmax(score))
        direction = 1.0 if elig_up[entering] else -1.0

        try:
            w = scipy.linalg.lu_solve(lu, M[:, entering], check_finite=False)
        except (ValueError, scipy.linalg.LinAlgError):
            return "numerical", basis, xval
        # entering moves by t*direction; basics move by -t*direction*w
        delta = -direction * w
        room_up = upper[basis] - xval[basis]
        room_dn = xval[basis] - lower[basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            ti = np.where(delta > _PIVOT_TOL, room_up / delta,
                          np.where(delta < -_PIVOT_TOL, room_dn / (-delta), np.inf))
        ti = np.where(np.isnan(ti), np.inf, ti)
        t_rows = float(np.min(ti)) if m else np.inf
        if direction > 0:
            t_limit = max(upper[entering] - xval[entering], 0.0)
        else:
            t_limit = max(xval[entering] - lower[entering], 0.0)
        if np.isinf(t_rows) and np.isinf(t_limit):
            return "unbounded", basis, xval
        if t_rows <= t_limit:
            near = ti <= t_rows + 1e-12
            cand = np.flatnonzero(near)
            leaving = int(cand[np.argmin(basis[cand])])
            t = max(t_rows, 0.0)
        else:
            leaving = -1
            t = t_limit
        xval[entering] += direction * t
        xval[basis] -= direction * t * w
        if leaving >= 0:
            out = basis[leaving]
            xval[out] = min(max(xval[out], lower[out]), upper[out])
            in_basis[out] = False
            in_basis[entering] = True
            basis[leaving] = entering
        degenerate_run = degenerate_run + 1 if t <= _PIVOT_TOL else 0
    return "numerical", basis, xval
