import numpy as np
import pytest

from conehedge.geometry import Polyhedron, to_vrep
from conehedge.linprog import LpProblem, LpResult, solve


def test_min_x_geq_3():
    res = solve(LpProblem(objective=[1.0], ineq=([[1.0]], [3.0])))
    assert res.status == "optimal"
    assert res.x[0] == pytest.approx(3.0, abs=1e-9)
    assert res.ineq_duals[0] == pytest.approx(1.0, abs=1e-7)


def test_infeasible():
    res = solve(LpProblem(objective=[1.0], ineq=([[1.0], [-1.0]], [1.0, 0.0])))
    assert res.status == "infeasible"


def test_unbounded():
    res = solve(LpProblem(objective=[-1.0], ineq=([[1.0]], [0.0])))
    assert res.status == "unbounded"


def test_one_period_digital_max_cash_at_root():
    # variables (v0, v1, alpha, z_buy, z_sell) for the one-period digital
    # market: maximize the cash withdrawal alpha from x0 = (25, 0)
    k0 = np.array([[25.0, -18.0], [-1.0, 1.0]])  # columns: buy, sell stock
    succ_rows = np.array([
        [1.0, 20.0], [1.0, 26.0],   # up-node superhedging set
        [1.0, 16.0], [1.0, 23.0],   # down-node superhedging set
    ])
    succ_rhs = np.array([20.0, 26.0, 0.0, 0.0])
    n = 2 + 1 + 2
    A = np.zeros((4, n))
    A[:, :2] = succ_rows
    E = np.zeros((2, n))
    E[:, :2] = np.eye(2)
    E[0, 2] = 1.0           # + alpha * y with y = e_cash
    E[:, 3:] = k0
    f = np.array([25.0, 0.0])
    prob = LpProblem(objective=[0, 0, -1.0, 0, 0], ineq=(A, succ_rhs), eq=(E, f),
                     bounds=[(None, None), (None, None), (0, None), (0, None), (0, None)])
    res = solve(prob)
    assert res.status == "optimal"
    assert res.objective_value == pytest.approx(0.0, abs=1e-9)  # alpha* = 0
    # the vertex (0,1) is reachable: v=(0,1), z=(1,0) satisfies the system
    v = np.array([0.0, 1.0, 0.0, 1.0, 0.0])
    assert np.allclose(E @ v, f)
    assert np.all(A @ v >= succ_rhs - 1e-12)


def _random_bounded_lp(rng):
    d = int(rng.integers(2, 4))
    m = int(rng.integers(3, 7))
    B = np.vstack([rng.normal(size=(m, d)), np.eye(d), -np.eye(d)])
    center = rng.normal(size=d)
    b = B @ center - rng.uniform(0.2, 2.0, size=B.shape[0])
    c = rng.normal(size=d)
    return LpProblem(objective=c, ineq=(B, b))


def test_random_lp_matches_vertex_enumeration():
    rng = np.random.default_rng(42)
    for _ in range(30):
        prob = _random_bounded_lp(rng)
        res = solve(prob, engine="simplex")
        assert res.status == "optimal"
        poly = to_vrep(Polyhedron.from_hrep(*prob.ineq))
        pts, rays = poly.vrep()
        assert rays == []  # boxed, hence bounded
        brute = min(float(prob.objective @ q) for q in pts)
        assert res.objective_value == pytest.approx(brute, abs=1e-7)


def test_simplex_agrees_with_highs():
    rng = np.random.default_rng(1234)
    for _ in range(40):
        prob = _random_bounded_lp(rng)
        a = solve(prob, engine="simplex")
        b = solve(prob, engine="highs")
        assert a.status == b.status == "optimal"
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)


def test_strong_duality_and_dual_feasibility():
    rng = np.random.default_rng(9)
    for _ in range(25):
        d = int(rng.integers(2, 5))
        m = int(rng.integers(2, 6))
        A = np.vstack([rng.normal(size=(m, d)), np.eye(d)])
        b = np.concatenate([rng.normal(size=m) - 3.0, np.zeros(d)])
        c = np.abs(rng.normal(size=d)) + 0.1  # bounded below on the orthant
        prob = LpProblem(objective=c, ineq=(A, b))
        res = solve(prob, engine="simplex")
        if res.status != "optimal":
            continue
        u = res.ineq_duals
        assert np.all(u >= -1e-9)
        # dual feasibility: c - A^T u >= -tol would violate optimality for
        # free variables, so stationarity must hold exactly
        assert np.allclose(A.T @ u, c, atol=1e-7)
        assert res.objective_value == pytest.approx(float(b @ u), abs=1e-7)


def test_equality_duals_stationarity():
    # min x + y  s.t.  x + 2y = 4, x - y >= 0
    prob = LpProblem(objective=[1.0, 1.0],
                     ineq=([[1.0, -1.0]], [0.0]),
                     eq=([[1.0, 2.0]], [4.0]))
    for engine in ("simplex", "highs"):
        res = solve(prob, engine=engine)
        assert res.status == "optimal"
        resid = np.array([1.0, 1.0]) - np.array([[1.0, -1.0]]).T @ res.ineq_duals \
            - np.array([[1.0, 2.0]]).T @ res.eq_duals
        assert np.allclose(resid, 0.0, atol=1e-7), engine


def test_determinism():
    rng = np.random.default_rng(77)
    prob = _random_bounded_lp(rng)
    r1 = solve(prob, engine="simplex")
    r2 = solve(prob, engine="simplex")
    assert np.array_equal(r1.x, r2.x)
    assert r1.objective_value == r2.objective_value


def test_degenerate_problem_terminates():
    # many redundant rows through one vertex: stresses the Bland fallback
    d = 3
    rng = np.random.default_rng(5)
    B = rng.normal(size=(40, d))
    B = np.vstack([B, np.eye(d)])
    b = np.zeros(B.shape[0])  # every row tight at the origin
    c = np.ones(d)
    res = solve(LpProblem(objective=c, ineq=(B, b)), engine="simplex")
    assert res.status == "optimal"
    assert res.objective_value == pytest.approx(0.0, abs=1e-9)
