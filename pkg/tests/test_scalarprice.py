import numpy as np
import pytest

from conehedge.payoffs import Claim
from conehedge.scalarprice import (
    recover_shp,
    scalar_cap,
    scalar_cut,
    scalar_price_run,
    scalar_terminal,
)
from conehedge.shp import scalar_price, shp_backward

from treegen import one_period_digital_tree, random_tree


def assert_same_vectors(got, expected, tol=1e-9):
    got = [np.asarray(g, float) for g in got]
    expected = [np.asarray(e, float) for e in expected]
    assert len(got) == len(expected), (got, expected)
    rem = list(got)
    for e in expected:
        hit = next((i for i, g in enumerate(rem) if np.max(np.abs(g - e)) <= tol), None)
        assert hit is not None, (e, rem)
        rem.pop(hit)


def digital_claim():
    return Claim({"up": [0.0, 1.0], "down": [0.0, 0.0]})


class TestTerminal:
    def test_up_node_hypograph(self):
        # oracle: the dual-cone slice through S_cash = 1 runs from stock
        # price 20 to 26; the claim value there is the stock price itself
        tree = one_period_digital_tree()
        h = scalar_terminal(tree, "up", digital_claim(), asset=0)
        assert_same_vectors(h.vertices(), [[20.0, 20.0], [26.0, 26.0]])

    def test_zero_claim_flat(self):
        tree = one_period_digital_tree()
        h = scalar_terminal(tree, "down", digital_claim(), asset=0)
        assert_same_vectors(h.vertices(), [[16.0, 0.0], [23.0, 0.0]])

    def test_cash_claim_constant(self):
        tree = one_period_digital_tree()
        claim = Claim({"up": [7.0, 0.0], "down": [7.0, 0.0]})
        h = scalar_terminal(tree, "up", claim, asset=0)
        assert all(p[-1] == pytest.approx(7.0, abs=1e-9) for p in h.vertices())


class TestCapAndCut:
    def test_single_child_identity(self):
        tree = one_period_digital_tree()
        h = scalar_terminal(tree, "up", digital_claim(), asset=0)
        capped = scalar_cap([h], "root")
        rng = np.random.default_rng(0)
        for _ in range(50):
            x = rng.normal(scale=10.0, size=2) + np.array([22.0, 5.0])
            assert capped.poly.contains(x, 1e-7) == h.poly.contains(x, 1e-7)

    def test_one_period_cap_then_cut(self):
        tree = one_period_digital_tree()
        up = scalar_terminal(tree, "up", digital_claim(), asset=0)
        down = scalar_terminal(tree, "down", digital_claim(), asset=0)
        capped = scalar_cap([up, down], "root")
        assert_same_vectors(capped.vertices(),
                            [[16.0, 0.0], [20.0, 20.0], [26.0, 26.0]])
        cut = scalar_cut(capped, tree, "root")
        assert_same_vectors(cut.vertices(),
                            [[18.0, 10.0], [20.0, 20.0], [25.0, 25.0]])
        assert cut.max_value() == pytest.approx(25.0, abs=1e-9)

    def test_cut_idempotent(self):
        tree = one_period_digital_tree()
        up = scalar_terminal(tree, "up", digital_claim(), asset=0)
        once = scalar_cut(up, tree, "up")
        twice = scalar_cut(once, tree, "up")
        assert_same_vectors(once.vertices(), twice.vertices(), tol=1e-7)

    def test_cut_with_trivial_cone_keeps_everything(self):
        # a trivial solvency cone has the whole price space as its dual,
        # so the cut adds no rows beyond the implicit normalization
        import copy
        from conehedge.geometry import Cone
        tree = one_period_digital_tree()
        up = scalar_terminal(tree, "up", digital_claim(), asset=0)
        loose = copy.deepcopy(tree)
        loose.nodes["up"].cone = Cone(np.zeros((2, 0)))
        cut = scalar_cut(up, loose, "up")
        assert_same_vectors(cut.vertices(), up.vertices(), tol=1e-9)

    def test_identical_children(self):
        tree = one_period_digital_tree()
        up = scalar_terminal(tree, "up", digital_claim(), asset=0)
        capped = scalar_cap([up, up, up], "root")
        assert_same_vectors(capped.vertices(), up.vertices(), tol=1e-9)


class TestFullRun:
    def test_one_period_digital_price(self):
        tree = one_period_digital_tree()
        price, hypos = scalar_price_run(tree, digital_claim(), asset=0)
        assert price == pytest.approx(25.0, abs=1e-9)

    def test_recover_shp_one_period_digital(self):
        tree = one_period_digital_tree()
        price, hypos = scalar_price_run(tree, digital_claim(), asset=0)
        rec = recover_shp(hypos[tree.root])
        pts, rays = rec.vrep()
        assert_same_vectors(pts, [[0.0, 1.0], [-80.0, 5.0]])

    def test_hypograph_property(self):
        tree = one_period_digital_tree()
        price, hypos = scalar_price_run(tree, digital_claim(), asset=0)
        for h in hypos.values():
            _, rays = h.poly.vrep()
            down = np.zeros(2)
            down[-1] = -1.0
            assert any(np.allclose(r / np.max(np.abs(r)), down) for r in rays)

    def test_call_table_n6_price(self):
        from conehedge.market import TreeSpec, build_crr
        from conehedge.payoffs import call_physical
        spec = TreeSpec(kind="crr", S0=[100.0], sigma=[0.2], n=6, r=0.10,
                        lam=[0.0, 0.00125], rate_convention="effective")
        tree = build_crr(spec)
        price, _ = scalar_price_run(tree, call_physical(tree, 80.0, 1),
                                    asset=0, check_na=False)
        assert price * spec.bond_price(0) == pytest.approx(27.854, abs=1e-3)

    def test_digital_lattice_n100_price(self):
        from conehedge.market import TreeSpec, build_crr
        from conehedge.payoffs import digital_asset_or_nothing
        spec = TreeSpec(kind="crr", S0=[18.0], sigma=[0.2], n=100, r=0.03,
                        lam=[0.0, 0.04], rate_convention="nominal")
        tree = build_crr(spec)
        price, _ = scalar_price_run(tree, digital_asset_or_nothing(tree, 19.0, 1),
                                    asset=0, check_na=False)
        assert price == pytest.approx(19.29, abs=5e-3)  # bond units

    def test_agreement_with_backward_recursion_random(self):
        rng = np.random.default_rng(71)
        for case in range(5):
            d = 2 if case % 2 == 0 else 3
            tree = random_tree(rng, d=d, T=2)
            claim = Claim({nid: rng.normal(scale=1.5, size=d)
                           for nid in tree.terminals})
            price, hypos = scalar_price_run(tree, claim, asset=0, check_na=False)
            res = shp_backward(tree, claim, check_na=False)
            assert price == pytest.approx(scalar_price(res.root, 0), abs=1e-7)
            rec = recover_shp(hypos[tree.root])
            for _ in range(200):
                x = rng.normal(scale=3.0, size=d)
                assert rec.contains(x, 1e-6) == res.root.contains(x, 1e-6)

    def test_recover_all_nodes_random(self):
        rng = np.random.default_rng(99)
        tree = random_tree(rng, d=2, T=2)
        claim = Claim({nid: rng.normal(size=2) for nid in tree.terminals})
        price, hypos = scalar_price_run(tree, claim, asset=0, check_na=False)
        res = shp_backward(tree, claim, check_na=False)
        for nid in tree.nodes:
            rec = recover_shp(hypos[nid])
            target = res.at(nid)
            for _ in range(60):
                x = rng.normal(scale=3.0, size=2)
                assert rec.contains(x, 1e-6) == target.contains(x, 1e-6), nid
