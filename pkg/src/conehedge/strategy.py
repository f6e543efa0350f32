"""Forward-pass superhedging strategies along a realized path.

Holding a portfolio inside the node's superhedging set, a step chooses a
triplet (next portfolio, withdrawal, trade): the next portfolio must lie
in every successor's superhedging set (or dominate the claim at the
horizon) and the trade closes the budget through the node's solvency
cone.  The step policies are the maximal withdrawal of a reference
portfolio, the minimal spread-weighted trading volume, and the full
bi-criteria Pareto frontier between them, solved as a two-objective
vector optimization problem.

A session is single-writer: one advance at a time, each invalidating
previously computed frontiers via a version counter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linprog
from .geometry import Cone, Polyhedron, as_vector, canonicalize
from .market import MarketTree
from .payoffs import Claim
from .shp import ShpError, ShpResult
from .vop import VopProblem, VopUnboundedError, benson_solve


class StrategyError(RuntimeError):
    pass


class StaleFrontierError(StrategyError):
    pass


@dataclass
class FrontierPoint:
    """A Pareto-efficient step choice: withdrawal scale against
    spread-weighted trading volume, with its realizing variables."""

    alpha: float
    trade_cost: float
    v: np.ndarray
    z: np.ndarray
    index: int
    version: int


@dataclass
class StepRecord:
    node_id: str
    t: int
    alpha: float
    withdrawal: np.ndarray
    trade: np.ndarray
    v_after: np.ndarray


@dataclass
class StrategyState:
    node_id: str
    t: int
    V: np.ndarray
    withdrawals: np.ndarray
    history: list[StepRecord] = field(default_factory=list)
    version: int = 0
    done: bool = False


def default_gamma(node) -> np.ndarray:
    """Spread-proportional weights for the paired buy/sell cone shape;
    unit weights otherwise."""
    gens = node.cone.generators
    d, s = gens.shape
    if node.spreads is not None and s == 2 * (d - 1):
        ok = True
        for i in range(d - 1):
            buy, sell = gens[:, 2 * i], gens[:, 2 * i + 1]
            ok &= abs(buy[i + 1] + 1.0) <= 1e-9 and abs(sell[i + 1] - 1.0) <= 1e-9
            ok &= np.all(np.abs(np.delete(buy, [0, i + 1])) <= 1e-9)
            ok &= np.all(np.abs(np.delete(sell, [0, i + 1])) <= 1e-9)
        if ok:
            return np.repeat(node.spreads, 2)
    return np.ones(s)


class StrategySession:
    """Step-by-step superhedging along a path chosen by the caller."""

    def __init__(self, tree: MarketTree, claim: Claim, shp: ShpResult, x0,
                 y=None, gamma=None):
        self.tree = tree
        self.claim = claim
        self.shp = shp
        x0 = as_vector(x0, tree.d)
        root = shp.root
        if not root.contains(x0, tol=1e-7):
            raise StrategyError("initial portfolio does not superhedge the claim")
        if y is None:
            y = np.zeros(tree.d)
            y[0] = 1.0
        self.y = as_vector(y, tree.d)
        if np.any(self.y < 0) or np.max(self.y) <= 0:
            raise StrategyError("withdrawal portfolio must be nonnegative, nonzero")
        self.gamma_override = None if gamma is None else as_vector(gamma)
        self.state = StrategyState(node_id=tree.root, t=0, V=x0.copy(),
                                   withdrawals=np.zeros(tree.d))

    # -- step constraint assembly -------------------------------------------

    def _gamma(self, node):
        if self.gamma_override is not None:
            if self.gamma_override.size != node.cone.generators.shape[1]:
                raise StrategyError("gamma length must match generator count")
            return self.gamma_override
        return default_gamma(node)

    def _target_rows(self):
        """Rows (R, r) with R v >= r the next-portfolio requirement."""
        nid = self.state.node_id
        d = self.tree.d
        if self.state.t < self.tree.T:
            blocks = [self.shp.at(s) for s in sorted(set(self.tree.succ[nid]))]
            R = np.vstack([p.B for p in blocks])
            r = np.concatenate([p.b for p in blocks])
        else:
            R = np.eye(d)
            r = self.claim.at(nid).copy()
        return R, r

    def _step_system(self, *, allow_withdrawal=True):
        """Constraint data over variables (v, alpha, z)."""
        node = self.tree.nodes[self.state.node_id]
        d = self.tree.d
        gens = node.cone.generators
        s = gens.shape[1]
        R, r = self._target_rows()
        n = d + 1 + s
        A = np.zeros((R.shape[0], n))
        A[:, :d] = R
        E = np.zeros((d, n))
        E[:, :d] = np.eye(d)
        E[:, d] = self.y
        E[:, d + 1:] = gens
        f = self.state.V.copy()
        hi = None if allow_withdrawal else 0.0
        bounds = [(None, None)] * d + [(0.0, hi)] + [(0.0, None)] * s
        return node, A, r, E, f, bounds, s

    def step_feasible_set(self) -> Polyhedron:
        """Admissible next portfolios with no withdrawal: the current
        holdings minus the solvency cone, inside every successor set."""
        node = self.tree.nodes[self.state.node_id]
        R, r = self._target_rows()
        Z = node.dual.generators.T
        B = np.vstack([R, -Z])
        b = np.concatenate([r, -(Z @ self.state.V)])
        out = canonicalize(Polyhedron(dim=self.tree.d, B=B, b=b))
        if out.is_empty:
            raise StrategyError("step has no feasible continuation")
        return out

    # -- step policies --------------------------------------------------------

    def max_withdrawal(self):
        """Maximal withdrawal of the reference portfolio this step."""
        node, A, r, E, f, bounds, s = self._step_system()
        d = self.tree.d
        obj = np.zeros(d + 1 + s)
        obj[d] = -1.0
        res = linprog.solve(linprog.LpProblem(objective=obj, ineq=(A, r),
                                              eq=(E, f), bounds=bounds))
        if res.status == "unbounded":
            raise StrategyError("unbounded withdrawal: arbitrage in inputs")
        if res.status != "optimal":
            raise StrategyError(f"withdrawal step failed: {res.status}")
        x = res.x
        return x[:d], float(x[d]), x[d + 1:]

    def min_trading(self):
        """Minimal spread-weighted trading volume, no withdrawal."""
        node, A, r, E, f, bounds, s = self._step_system(allow_withdrawal=False)
        d = self.tree.d
        obj = np.zeros(d + 1 + s)
        obj[d + 1:] = self._gamma(node)
        res = linprog.solve(linprog.LpProblem(objective=obj, ineq=(A, r),
                                              eq=(E, f), bounds=bounds))
        if res.status != "optimal":
            raise StrategyError(f"min-trading step failed: {res.status}")
        x = res.x
        return x[:d], x[d + 1:]

    def frontier(self) -> list[FrontierPoint]:
        """Pareto frontier between withdrawal and trading cost.

        Vertices of the two-objective upper image, every one of them
        minimal, sorted by decreasing withdrawal.
        """
        if self.state.done:
            raise StrategyError("session is complete")
        node, A, r, E, f, bounds, s = self._step_system()
        d = self.tree.d
        n = d + 1 + s
        gamma = self._gamma(node)
        P = np.zeros((2, n))
        P[0, d] = -1.0
        P[1, d + 1:] = gamma
        B = np.vstack([A, E, -E])
        b = np.concatenate([r, f, -f])
        # alpha >= 0 and z >= 0 become explicit rows for the solver
        nn = np.zeros((1 + s, n))
        nn[0, d] = 1.0
        nn[1:, d + 1:] = np.eye(s)
        B = np.vstack([B, nn])
        b = np.concatenate([b, np.zeros(1 + s)])
        prob = VopProblem(P=P, B=B, b=b, C=Cone(np.eye(2)), c=[1.0, 1.0])
        try:
            sol = benson_solve(prob)
        except VopUnboundedError as exc:
            raise StrategyError(f"frontier unbounded: {exc}") from exc
        pts, _ = sol.upper_image.vrep()
        out = []
        for yv in pts:
            x = sol.vertex_attainers[tuple(np.round(yv, 9))]
            out.append((float(-yv[0]), float(yv[1]), x))
        out.sort(key=lambda t: (-t[0], t[1]))
        return [FrontierPoint(alpha=a, trade_cost=c, v=x[:d], z=x[d + 1:],
                              index=i, version=self.state.version)
                for i, (a, c, x) in enumerate(out)]

    # -- advancing -------------------------------------------------------------

    def custom_point(self, alpha, z) -> FrontierPoint:
        """Validate a caller-supplied (withdrawal, trade) pair."""
        node = self.tree.nodes[self.state.node_id]
        z = as_vector(z, node.cone.generators.shape[1])
        alpha = float(alpha)
        if alpha < -1e-12 or np.any(z < -1e-12):
            raise StrategyError("withdrawal and trades must be nonnegative")
        v = self.state.V - alpha * self.y - node.cone.generators @ z
        R, r = self._target_rows()
        slack = R @ v - r
        if np.any(slack < -1e-7 * np.maximum(1.0, np.abs(r))):
            raise StrategyError("custom point violates the continuation sets")
        gamma = self._gamma(node)
        return FrontierPoint(alpha=alpha, trade_cost=float(gamma @ z), v=v, z=z,
                             index=-1, version=self.state.version)

    def advance(self, chosen: FrontierPoint, next_node: str | None = None) -> StrategyState:
        """Apply a chosen step and move to a successor node.

        Rejects frontier points computed before the last advance and any
        successor not reachable from the current node.
        """
        st = self.state
        if st.done:
            raise StrategyError("session is complete")
        if chosen.version != st.version:
            raise StaleFrontierError("frontier point is stale; recompute")
        node = self.tree.nodes[st.node_id]
        trade = node.cone.generators @ chosen.z
        record = StepRecord(node_id=st.node_id, t=st.t, alpha=chosen.alpha,
                            withdrawal=chosen.alpha * self.y, trade=trade,
                            v_after=chosen.v.copy())
        if st.t < self.tree.T:
            if next_node is None or next_node not in self.tree.succ[st.node_id]:
                raise StrategyError("next node must be a successor of the current node")
            target = self.shp.at(next_node)
            if not target.contains(chosen.v, tol=1e-7):
                raise StrategyError("advance broke the superhedging invariant")
            st.node_id = next_node
            st.t += 1
        else:
            payoff = self.claim.at(st.node_id)
            if np.any(chosen.v - payoff < -1e-7):
                raise StrategyError("terminal portfolio fails to dominate the claim")
            st.done = True
        st.V = chosen.v.copy()
        st.withdrawals = st.withdrawals + record.withdrawal
        st.history.append(record)
        st.version += 1
        return st

    # -- canned policies ---------------------------------------------------------

    def select(self, mode: str) -> FrontierPoint:
        """Pick a step by policy name.

        "max-cash" takes the frontier vertex with the largest withdrawal.
        "min-trade" solves the no-withdrawal trading LP before the horizon
        (its optimum need not be a frontier vertex) and cashes out at the
        horizon.  "min-trade-vertex" stays on the frontier: least trading
        cost, largest withdrawal among cost ties.
        """
        if mode == "min-trade" and self.state.t < self.tree.T:
            v, z = self.min_trading()
            node = self.tree.nodes[self.state.node_id]
            return FrontierPoint(alpha=0.0, trade_cost=float(self._gamma(node) @ z),
                                 v=v, z=z, index=-1, version=self.state.version)
        pts = self.frontier()
        if mode == "max-cash" or mode == "min-trade":
            best = max(pts, key=lambda p: (p.alpha, -p.trade_cost))
        elif mode == "min-trade-vertex":
            best = min(pts, key=lambda p: (p.trade_cost, -p.alpha))
        else:
            raise StrategyError(f"unknown mode {mode!r}")
        return best

    def total_withdrawn(self, asset=None) -> float:
        if asset is None:
            return float(np.sum(self.state.withdrawals))
        return float(self.state.withdrawals[asset])


def run_policy(tree, claim, shp, x0, path, mode="max-cash", y=None, gamma=None,
               script=None):
    """Replay a whole path under a fixed policy or an explicit script.

    ``path`` lists the node ids visited after the root; ``script`` entries
    (one per step, root included) may be "max-cash", "min-trade",
    {"alpha": value} picking the frontier vertex with that withdrawal, or
    {"index": k}.
    """
    session = StrategySession(tree, claim, shp, x0, y=y, gamma=gamma)
    steps = len(path) + 1
    for k in range(steps):
        sel = script[k] if script is not None else mode
        if isinstance(sel, str):
            point = session.select(sel)
        elif "alpha" in sel:
            pts = session.frontier()
            point = min(pts, key=lambda p: abs(p.alpha - float(sel["alpha"])))
            if abs(point.alpha - float(sel["alpha"])) > 1e-3:
                raise StrategyError(
                    f"no frontier vertex with withdrawal near {sel['alpha']}")
        else:
            point = session.frontier()[int(sel["index"])]
        nxt = path[k] if k < len(path) else None
        session.advance(point, nxt)
    return session
