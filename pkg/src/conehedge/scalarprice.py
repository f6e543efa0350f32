"""Scalar superhedging price by hypograph recursion.

An independent route to the price of a claim in units of one asset: per
node, carry the hypograph of a concave value function of the frictionless
price vector (normalized to one on the numeraire and constrained to the
node's dual cone).  Going backward, child hypographs are capped by a
convex hull, then cut by the node's price constraints; the price is the
top of the root hypograph.

The numeraire coordinate is dropped throughout, keeping hypographs
full-dimensional in (price, value) space; it is reinstated only when the
superhedging set itself is recovered from the hypograph vertices, which
cross-validates the backward recursion module facet for facet.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Polyhedron, canonicalize, convex_union
from .market import MarketTree, check_no_arbitrage
from .payoffs import Claim
from .shp import NoArbitrageViolation, ShpError


@dataclass
class HypoFn:
    """Hypograph of a node's concave value function.

    ``poly`` lives in R^d with coordinates (prices without the numeraire
    component, value); the last coordinate is the function value and the
    downward direction is always a recession ray.
    """

    node_id: str
    asset: int
    poly: Polyhedron

    def vertices(self):
        pts, _ = self.poly.vrep()
        return pts

    def max_value(self) -> float:
        return max(float(p[-1]) for p in self.vertices())


def _drop(vec, i):
    return np.concatenate([vec[:i], vec[i + 1:]])


def _embed(vec, i, value=1.0):
    return np.concatenate([vec[:i], [value], vec[i:]])


def _slice_rows(node, asset, d):
    """Rows of {S in K+, S_asset = 1} in dropped coordinates, zero value
    coefficient."""
    gens = node.cone.generators  # S in K+ iff gens^T S >= 0
    rows = []
    rhs = []
    for k in range(gens.shape[1]):
        g = gens[:, k]
        rows.append(np.append(_drop(g, asset), 0.0))
        rhs.append(-g[asset])
    if not rows:
        return np.zeros((0, d)), np.zeros(0)
    return np.array(rows), np.array(rhs)


def scalar_terminal(tree: MarketTree, node_id: str, claim: Claim,
                    asset: int = 0) -> HypoFn:
    """Terminal hypograph: the claim's frictionless value on the price
    slice, minus infinity outside it."""
    node = tree.nodes[node_id]
    x = claim.at(node_id)
    d = tree.d
    rows, rhs = _slice_rows(node, asset, d)
    val_row = np.append(_drop(x, asset), -1.0)
    B = np.vstack([rows, val_row])
    b = np.append(rhs, -x[asset])
    poly = canonicalize(Polyhedron(dim=d, B=B, b=b))
    return HypoFn(node_id=node_id, asset=asset, poly=poly)


def scalar_cap(children: list[HypoFn], node_id: str) -> HypoFn:
    """Concave cap: the convex hull of the child hypographs."""
    if not children:
        raise ShpError("cap needs at least one child")
    poly = convex_union([h.poly for h in children])
    return HypoFn(node_id=node_id, asset=children[0].asset, poly=poly)


def scalar_cut(h: HypoFn, tree: MarketTree, node_id: str) -> HypoFn:
    """Restrict a hypograph to the node's normalized price slice."""
    node = tree.nodes[node_id]
    rows, rhs = _slice_rows(node, h.asset, tree.d)
    B0, b0 = h.poly.hrep()
    poly = canonicalize(Polyhedron(dim=tree.d, B=np.vstack([B0, rows]),
                                   b=np.concatenate([b0, rhs])))
    if poly.is_empty:
        raise NoArbitrageViolation(
            f"price slice at node {node_id} is empty: no consistent prices")
    return HypoFn(node_id=node_id, asset=h.asset, poly=poly)


def scalar_price_run(tree: MarketTree, claim: Claim, asset: int = 0, *,
                     check_na: bool = True):
    """Price the claim in units of the chosen asset.

    Returns ``(price, hypos)`` with the per-node hypographs retained for
    recovery and audit.
    """
    claim.validate(tree)
    if check_na and not check_no_arbitrage(tree):
        raise NoArbitrageViolation("market admits arbitrage")
    hypos: dict[str, HypoFn] = {}
    for nid in tree.terminals:
        hypos[nid] = scalar_terminal(tree, nid, claim, asset)
    for level in reversed(tree.levels[:-1]):
        for nid in level:
            children = [hypos[c] for c in sorted(set(tree.succ[nid]))]
            capped = scalar_cap(children, nid)
            hypos[nid] = scalar_cut(capped, tree, nid)
    price = hypos[tree.root].max_value()
    return price, hypos


def recover_shp(h: HypoFn) -> Polyhedron:
    """Superhedging set from the hypograph vertices.

    Each vertex (S, v) of the hypograph contributes the inequality
    S.x >= v with the numeraire coordinate reinstated at one.
    """
    pts = h.vertices()
    rows = []
    rhs = []
    for p in pts:
        s = _embed(p[:-1], h.asset, 1.0)
        rows.append(s)
        rhs.append(float(p[-1]))
    return canonicalize(Polyhedron(dim=rows[0].size, B=np.array(rows),
                                   b=np.array(rhs)))
