import numpy as np
import pytest

from conehedge.geometry import canonicalize
from conehedge.payoffs import Claim
from conehedge.shp import shp_backward
from conehedge.strategy import (
    StaleFrontierError,
    StrategyError,
    StrategySession,
    default_gamma,
    run_policy,
)

from treegen import one_period_digital_tree, random_tree

PATH = ["t1j2_1", "t2j3_2", "t3j3_3", "t4j4_4"]


def first_vertex(res):
    pts, _ = canonicalize(res.root).vrep()
    return next(p for p in pts if abs(p[0] + 27.404) < 0.01)


class TestReplays:
    def test_max_cash_total(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = run_policy(tree, claim, res, first_vertex(res), PATH,
                             mode="max-cash")
        assert session.total_withdrawn(0) == pytest.approx(2.882, abs=1e-3)
        # the whole withdrawal happens at t=2
        assert session.state.history[2].alpha == pytest.approx(2.882, abs=1e-3)

    def test_min_trade_total(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = run_policy(tree, claim, res, first_vertex(res), PATH,
                             mode="min-trade")
        assert session.total_withdrawn(0) == pytest.approx(6.143, abs=1e-3)
        # nothing is withdrawn before the horizon
        assert all(abs(rec.alpha) <= 1e-9 for rec in session.state.history[:-1])

    def test_mixed_script_total(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = run_policy(
            tree, claim, res, first_vertex(res), PATH,
            script=["max-cash", "max-cash", {"alpha": 1.222},
                    "min-trade-vertex", "min-trade-vertex"])
        assert session.total_withdrawn(0) == pytest.approx(3.006, abs=1e-3)


class TestFrontier:
    def test_t2_frontier_extremes(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        session.advance(session.select("max-cash"), PATH[0])
        session.advance(session.select("max-cash"), PATH[1])
        pts = session.frontier()
        alphas = [p.alpha for p in pts]
        assert max(alphas) == pytest.approx(2.882, abs=1e-3)
        assert min(p.trade_cost for p in pts) < min(
            p.trade_cost for p in pts if p.alpha == max(alphas))

    def test_frontier_dominance(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        pts = session.frontier()
        for p in pts:
            for q in pts:
                if p is q:
                    continue
                assert not (p.alpha >= q.alpha - 1e-9
                            and p.trade_cost <= q.trade_cost + 1e-9
                            and (p.alpha > q.alpha + 1e-9
                                 or p.trade_cost < q.trade_cost - 1e-9))

    def test_lp_extremes_match_frontier(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        session.advance(session.select("max-cash"), PATH[0])
        session.advance(session.select("max-cash"), PATH[1])
        pts = session.frontier()
        v, alpha, z = session.max_withdrawal()
        assert alpha == pytest.approx(max(p.alpha for p in pts), abs=1e-7)
        node = tree.nodes[session.state.node_id]
        v2, z2 = session.min_trading()
        gamma = default_gamma(node)
        # leaving the withdrawal inside the portfolio never costs extra
        # trading, so the no-withdrawal optimum equals the frontier minimum
        assert float(gamma @ z2) == pytest.approx(
            min(p.trade_cost for p in pts), abs=1e-7)

    def test_single_point_step(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        pts = session.frontier()
        assert len(pts) == 1
        assert pts[0].alpha == pytest.approx(0.0, abs=1e-9)


class TestSessionMechanics:
    def test_rejects_non_member_start(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        with pytest.raises(StrategyError):
            StrategySession(tree, claim, res, np.zeros(3))

    def test_stale_frontier_rejected(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        pts = session.frontier()
        session.advance(pts[0], PATH[0])
        with pytest.raises(StaleFrontierError):
            session.advance(pts[0], PATH[1])

    def test_bad_successor_rejected(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        with pytest.raises(StrategyError):
            session.advance(session.frontier()[0], "t2j1_1")

    def test_terminal_dominance_and_done(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = run_policy(tree, claim, res, first_vertex(res), PATH,
                             mode="max-cash")
        st = session.state
        assert st.done
        assert np.all(st.V - claim.at(st.node_id) >= -1e-7)
        with pytest.raises(StrategyError):
            session.frontier()

    def test_superhedge_preserved_along_path(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        for nxt in PATH:
            point = session.select("max-cash")
            session.advance(point, nxt)
            assert res.at(session.state.node_id).contains(session.state.V, 1e-7)

    def test_advance_with_zero_step_keeps_portfolio(self):
        rng = np.random.default_rng(3)
        tree = random_tree(rng, d=2, T=1)
        claim = Claim({nid: np.full(2, -5.0) for nid in tree.terminals})
        res = shp_backward(tree, claim, check_na=False)
        x0 = np.array([1.0, 1.0])  # comfortably interior
        assert res.root.contains(x0)
        session = StrategySession(tree, claim, res, x0)
        point = session.custom_point(0.0, np.zeros(
            tree.nodes[tree.root].cone.generators.shape[1]))
        session.advance(point, tree.succ[tree.root][0])
        assert np.allclose(session.state.V, x0)

    def test_custom_point_validated(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res))
        with pytest.raises(StrategyError):
            session.custom_point(50.0, np.zeros(4))  # withdrawing too much


class TestStepFeasibleSet:
    def test_one_period_step_set_contains_known_point(self):
        tree = one_period_digital_tree()
        claim = Claim({"up": [0.0, 1.0], "down": [0.0, 0.0]})
        res = shp_backward(tree, claim, check_na=False)
        session = StrategySession(tree, claim, res, np.array([25.0, 0.0]))
        feas = session.step_feasible_set()
        assert feas.contains([0.0, 1.0], 1e-9)

    def test_nonempty_from_vertices(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        pts, _ = canonicalize(res.root).vrep()
        for p in pts:
            session = StrategySession(tree, claim, res, p)
            assert not session.step_feasible_set().is_empty

    def test_dominated_start_gives_smaller_set(self):
        rng = np.random.default_rng(11)
        tree = random_tree(rng, d=2, T=1)
        claim = Claim({nid: rng.normal(size=2) for nid in tree.terminals})
        res = shp_backward(tree, claim, check_na=False)
        pts, _ = canonicalize(res.root).vrep()
        base = pts[0]
        richer = base + np.array([0.5, 0.5])
        s1 = StrategySession(tree, claim, res, base).step_feasible_set()
        s2 = StrategySession(tree, claim, res, richer).step_feasible_set()
        vs, _ = s1.vrep()
        for v in vs:
            assert s2.contains(v, 1e-7)


class TestGamma:
    def test_default_gamma_spread_proportional(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        node = tree.nodes[tree.root]
        gamma = default_gamma(node)
        spreads = node.spreads
        assert gamma.shape == (4,)
        assert np.allclose(gamma, [spreads[0], spreads[0], spreads[1], spreads[1]])

    def test_zero_gamma_degenerate_mode(self, outperformance_fixture):
        spec, tree, claim, res = outperformance_fixture
        session = StrategySession(tree, claim, res, first_vertex(res),
                                  gamma=np.zeros(4))
        v, z = session.min_trading()
        assert np.all(np.isfinite(v))
