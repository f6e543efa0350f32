"""Backward recursion for superhedging portfolio sets.

Terminal nodes carry the claim translated by the solvency cone, written
down directly from the dual-cone generators.  Each interior node stacks
its successors' inequality systems as the feasible set of a linear vector
optimization problem whose objective is the node's liquidation map and
whose ordering cone is the liquidated solvency cone; the geometric-dual
solution is read off as the node's inequality representation while the
primal solution keeps the efficient portfolios and directions.

An LP feasibility oracle over adapted trade plans provides the
independent membership check used to validate the recursion.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linprog
from .geometry import Cone, Polyhedron, as_vector, canonicalize
from .market import MarketTree, check_no_arbitrage, liquidation_map
from .payoffs import Claim
from .vop import VopProblem, VopUnboundedError, benson_solve


class ShpError(RuntimeError):
    pass


class NoArbitrageViolation(ShpError):
    pass


@dataclass
class NodeShp:
    polyhedron: Polyhedron
    efficient_points: list[np.ndarray]
    efficient_directions: list[np.ndarray]


@dataclass
class ShpResult:
    sets: dict[str, NodeShp]
    root_id: str

    def at(self, nid) -> Polyhedron:
        return self.sets[nid].polyhedron

    @property
    def root(self) -> Polyhedron:
        return self.sets[self.root_id].polyhedron


def _terminal_set(node, payoff):
    Bw = node.dual.generators.T            # rows: dual-cone generators
    bw = Bw @ payoff
    poly = Polyhedron(dim=payoff.size, B=Bw, b=bw,
                      points=[payoff.copy()],
                      rays=[g.copy() for g in node.cone.vectors()])
    poly.canonical = True
    return NodeShp(poly, [payoff.copy()], [])


def _swap_to_last(vec):
    """Permutation matrix moving the largest component's slot to the end."""
    q = vec.size
    pos = int(np.argmax(np.abs(vec)))
    perm = np.eye(q)
    if pos != q - 1:
        perm[[pos, q - 1]] = perm[[q - 1, pos]]
    return perm


def _interior_set(tree, nid, succ_sets, numeraire):
    node = tree.nodes[nid]
    blocks = [succ_sets[s] for s in sorted(set(tree.succ[nid]))]
    B = np.vstack([s.polyhedron.B for s in blocks])
    b = np.concatenate([s.polyhedron.b for s in blocks])
    P, C = liquidation_map(node.cone, node.bidask)
    trivial = P.shape == (tree.d, tree.d) and np.array_equal(P, np.eye(tree.d))
    # order the liquidated coordinates so the numeraire image sits last and
    # the interior parameter is the last unit vector
    perm = _swap_to_last(P @ _unit_vec(tree.d, numeraire))
    P = perm @ P
    C = Cone(perm @ C.generators)
    # permutations commute with dualization, so the cached node dual serves
    dual_rows = (perm @ node.dual.generators).T if trivial else None
    # successor facet normals are componentwise nonnegative, so the
    # componentwise max of one member per successor is feasible
    warm = np.max(np.column_stack([s.efficient_points[0] for s in blocks]), axis=1)
    prob = VopProblem(P=P, B=B, b=b, C=C, c=None)
    try:
        sol = benson_solve(prob, dual_rows=dual_rows, assume_valid=True,
                           feasible_point=warm)
    except VopUnboundedError as exc:
        raise NoArbitrageViolation(
            f"unbounded superhedging set at node {nid}: {exc}") from exc
    rows = np.array([P.T @ w for (_, w) in sol.dual_points])
    rhs = np.array([float(b @ u) for (u, _) in sol.dual_points])
    rays = [r.copy() for r in sol.primal_directions]
    rays += [g.copy() for g in node.cone.vectors()]
    poly = Polyhedron(dim=tree.d, B=rows, b=rhs,
                      points=[p.copy() for p in sol.primal_points], rays=rays)
    return NodeShp(poly, sol.primal_points, sol.primal_directions)


def _unit_vec(d, i):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def shp_backward(tree: MarketTree, claim: Claim, *, numeraire: int = 0,
                 check_na: bool = True, threads: int = 1) -> ShpResult:
    """Compute the superhedging set at every node of the tree.

    Raises ``NoArbitrageViolation`` when the no-arbitrage certificate
    fails up front (skippable via ``check_na`` for callers that already
    hold one) or when an interior problem comes back unbounded.
    """
    claim.validate(tree)
    if check_na and not check_no_arbitrage(tree):
        raise NoArbitrageViolation("market admits arbitrage")
    sets: dict[str, NodeShp] = {}
    for nid in tree.terminals:
        sets[nid] = _terminal_set(tree.nodes[nid], claim.at(nid))
    for level in reversed(tree.levels[:-1]):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = pool.map(
                    lambda nid: (nid, _interior_set(tree, nid, sets, numeraire)),
                    level)
                for nid, nodeset in results:
                    sets[nid] = nodeset
        else:
            for nid in level:
                sets[nid] = _interior_set(tree, nid, sets, numeraire)
    return ShpResult(sets=sets, root_id=tree.root)


# ---------------------------------------------------------------------------
# Restriction and scalar price extraction
# ---------------------------------------------------------------------------

def restrict(shp0: Polyhedron, assets) -> Polyhedron:
    """Intersect with the span of the chosen asset axes, in their frame."""
    assets = list(assets)
    if not assets:
        raise ShpError("restriction needs at least one asset")
    B, b = shp0.hrep()
    return canonicalize(Polyhedron(dim=len(assets), B=B[:, assets], b=b))


def scalar_price(shp0: Polyhedron, asset: int = 0) -> float:
    """Smallest superhedging price in units of one asset.

    Normalizes every inequality row to coefficient one on the chosen
    asset, which the recession-cone interiority guarantees is possible;
    the largest right-hand side is the price.
    """
    B, b = shp0.hrep()
    col = B[:, asset]
    scale = np.max(np.abs(B), axis=1)
    if np.any(col <= 1e-12 * scale):
        raise ShpError(
            "scalar price undefined: a facet has nonpositive weight on the asset")
    return float(np.max(b / col))


# ---------------------------------------------------------------------------
# Independent LP membership oracle
# ---------------------------------------------------------------------------

def _enumerate_paths(tree: MarketTree, max_paths: int):
    """All root-to-terminal node paths; prefix-distinct trade variables."""
    paths = [[tree.root]]
    for _ in range(tree.T):
        nxt = []
        for path in paths:
            for child in tree.succ[path[-1]]:
                nxt.append(path + [child])
            if len(nxt) > max_paths:
                raise ShpError("membership oracle: too many paths to enumerate")
        paths = nxt
    return paths


def membership_oracle(tree: MarketTree, claim: Claim, x0, *,
                      max_paths: int = 4096) -> bool:
    """True iff x0 superhedges the claim, by LP feasibility over adapted
    nonnegative generator weights along every path.

    Trade plans are adapted to path prefixes, so recombining lattices are
    unfolded; the enumeration is capped to keep the oracle an audit tool.
    """
    x0 = as_vector(x0, tree.d)
    paths = _enumerate_paths(tree, max_paths)
    # variable block per distinct path prefix
    offsets: dict[tuple, tuple[int, int]] = {}
    total = 0
    for path in paths:
        for t in range(len(path)):
            prefix = tuple(path[:t + 1])
            if prefix not in offsets:
                s = tree.nodes[path[t]].cone.generators.shape[1]
                offsets[prefix] = (total, s)
                total += s
    rows = []
    rhs = []
    for path in paths:
        block = np.zeros((tree.d, total))
        for t in range(len(path)):
            prefix = tuple(path[:t + 1])
            off, s = offsets[prefix]
            block[:, off:off + s] = tree.nodes[path[t]].cone.generators
        rows.append(block)
        rhs.append(x0 - claim.at(path[-1]))
    E = np.vstack(rows)
    f = np.concatenate(rhs)
    res = linprog.solve(linprog.LpProblem(
        objective=np.zeros(total), eq=(E, f),
        bounds=[(0.0, None)] * total))
    return res.status == "optimal"
