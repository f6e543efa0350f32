"""Finite event-tree market models with proportional transaction costs.

A market is a leveled DAG of nodes (recombining lattices share children),
each carrying a bid-ask matrix and the solvency cone it spans.  Builders
cover the binomial single-stock lattice and the correlated multi-asset
lattice obtained by driving independent coordinates through a Cholesky
transform of the log-price covariance.

Solvency-cone generators follow the bid-ask scaling used throughout the
examples: exchanges against the numeraire asset carry coefficient -+1 on
the risky leg, so generator weights read as traded share counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import linprog
from .geometry import Cone, as_matrix, as_vector, dual_cone, minimal_generators

FRICTIONLESS_TOL = 1e-12


class MarketError(ValueError):
    pass


@dataclass
class BidAskMatrix:
    """pi[i][j] = units of asset i needed to buy one unit of asset j."""

    pi: np.ndarray

    def __post_init__(self):
        pi = as_matrix(self.pi)
        d = pi.shape[0]
        if pi.shape != (d, d):
            raise MarketError("bid-ask matrix must be square")
        if np.any(pi <= 0):
            raise MarketError("bid-ask entries must be positive")
        if not np.allclose(np.diag(pi), 1.0, atol=1e-12):
            raise MarketError("bid-ask diagonal must be one")
        for k in range(d):
            via = np.outer(pi[:, k], pi[k, :])
            if np.any(pi > via * (1 + 1e-9)):
                raise MarketError("bid-ask matrix violates the triangle condition")
        self.pi = pi

    @property
    def d(self):
        return self.pi.shape[0]


def solvency_cone(bidask: BidAskMatrix, numeraire: int = 0) -> Cone:
    """Solvency cone spanned by the exchange vectors and unit vectors,
    reduced to its irredundant generators.

    Exchanges involving the numeraire are scaled to one unit of the other
    asset (ask on the buy leg, bid on the sell leg); remaining exchanges
    keep the raw one-unit-bought scaling.
    """
    pi = bidask.pi
    d = bidask.d
    gens = []
    for j in range(d):
        if j == numeraire:
            continue
        buy = pi[numeraire, j] * _e(d, numeraire) - _e(d, j)
        sell = -(1.0 / pi[j, numeraire]) * _e(d, numeraire) + _e(d, j)
        gens.extend([buy, sell])
    for i in range(d):
        for j in range(d):
            if i == j or numeraire in (i, j):
                continue
            gens.append(pi[i, j] * _e(d, i) - _e(d, j))
    for i in range(d):
        gens.append(_e(d, i))
    return minimal_generators(Cone.from_vectors(gens))


def _e(d, i):
    v = np.zeros(d)
    v[i] = 1.0
    return v


def _standard_cone(d, bid, ask):
    """Fast path for a frictionless numeraire: the 2(d-1) exchange columns
    are irredundant and the unit vectors are conic combinations of them."""
    gens = []
    for i in range(d - 1):
        gens.append(np.concatenate([[ask[i]], -_e(d - 1, i)]))
        gens.append(np.concatenate([[-bid[i]], _e(d - 1, i)]))
    return Cone.from_vectors(gens)


def liquidation_map(cone: Cone, bidask: BidAskMatrix):
    """Merge frictionless asset pairs so the ordering cone has no lines.

    Returns ``(P, C)`` with ``P`` the (q, d) merge matrix and ``C = P K``.
    Frictionless pairs (``pi_ij * pi_ji = 1``) form equivalence classes by
    the triangle condition; each class collapses onto its smallest index.
    """
    pi = bidask.pi
    d = bidask.d
    rep = list(range(d))

    def find(i):
        while rep[i] != i:
            rep[i] = rep[rep[i]]
            i = rep[i]
        return i

    for i in range(d):
        for j in range(i + 1, d):
            if abs(pi[i, j] * pi[j, i] - 1.0) <= FRICTIONLESS_TOL:
                ri, rj = find(i), find(j)
                if ri != rj:
                    rep[max(ri, rj)] = min(ri, rj)
    reps = sorted({find(i) for i in range(d)})
    q = len(reps)
    P = np.zeros((q, d))
    for row, r in enumerate(reps):
        for j in range(d):
            if find(j) == r:
                P[row, j] = 1.0 if j == r else pi[r, j]
    if q == d:
        return np.eye(d), cone
    img = P @ cone.generators
    keep = np.max(np.abs(img), axis=0) > 1e-12  # lineality directions vanish
    merged = minimal_generators(Cone(img[:, keep]))
    if not merged.is_pointed():
        raise MarketError("liquidated cone still contains lines")
    return P, merged


@dataclass
class MarketNode:
    id: str
    t: int
    parents: list[str]
    prob: float
    bidask: BidAskMatrix
    cone: Cone
    dual: Cone = None
    spreads: np.ndarray | None = None  # per-risky spread in numeraire units
    bid: np.ndarray | None = None      # quoted risky bid prices
    ask: np.ndarray | None = None      # quoted risky ask prices

    def __post_init__(self):
        if self.prob <= 0:
            raise MarketError("node probabilities must be positive")
        if self.dual is None:
            self.dual = dual_cone(self.cone)
        if self.bid is None:
            # recover quotes from the exchange rates against asset 0
            pi = self.bidask.pi
            self.ask = pi[0, 1:].copy()
            self.bid = 1.0 / pi[1:, 0]


@dataclass
class MarketTree:
    d: int
    T: int
    nodes: dict[str, MarketNode]
    levels: list[list[str]]
    succ: dict[str, list[str]]
    spec: "TreeSpec | None" = None
    prices: dict[str, np.ndarray] = field(default_factory=dict)  # mid prices, risky only
    bond: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.levels[0]) != 1:
            raise MarketError("tree must have a unique root")
        for t, level in enumerate(self.levels[:-1]):
            for nid in level:
                if not self.succ.get(nid):
                    raise MarketError(f"non-terminal node {nid} has no successor")
        for nid in self.levels[-1]:
            if self.succ.get(nid):
                raise MarketError("terminal nodes cannot have successors")

    @property
    def root(self):
        return self.levels[0][0]

    @property
    def terminals(self):
        return self.levels[-1]

    def node(self, nid):
        return self.nodes[nid]

    def branch_weight(self, nid):
        return 1.0 / len(self.succ[nid])

    def validate_liquidity(self, margin=1e-10):
        """Certify e_i in the interior of every node's solvency cone."""
        for node in self.nodes.values():
            Z = node.dual.generators.T
            scale = np.max(np.abs(Z), axis=1)
            for i in range(self.d):
                if np.any(Z[:, i] / scale <= margin):
                    raise MarketError(
                        f"liquidity violated at node {node.id}: e_{i} not interior")
        return True


@dataclass
class TreeSpec:
    """Builder inputs for the lattice market models.

    ``lam`` lists proportional costs with the riskless asset first, then
    one entry per risky asset.  ``rate_convention`` chooses the bond
    accrual: "nominal" compounds r/n per step, "effective" compounds the
    annual effective rate.
    """

    kind: str                     # "crr" | "correlated"
    S0: np.ndarray
    sigma: np.ndarray
    n: int
    r: float = 0.0
    rho: np.ndarray | None = None
    lam: np.ndarray | None = None
    maturity: float = 1.0
    rate_convention: str = "nominal"

    def __post_init__(self):
        self.S0 = as_vector(self.S0)
        self.sigma = as_vector(self.sigma, size=self.S0.size)
        k = self.S0.size
        if self.kind not in ("crr", "correlated"):
            raise MarketError(f"unknown builder kind {self.kind!r}")
        if self.kind == "crr" and k != 1:
            raise MarketError("crr builder models exactly one risky asset")
        if self.n < 1:
            raise MarketError("need at least one step")
        if self.rho is None:
            self.rho = np.eye(k)
        self.rho = as_matrix(self.rho, cols=k)
        if not np.allclose(self.rho, self.rho.T, atol=1e-12):
            raise MarketError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(self.rho), 1.0, atol=1e-12):
            raise MarketError("correlation matrix needs unit diagonal")
        if self.lam is None:
            self.lam = np.zeros(k + 1)
        self.lam = as_vector(self.lam)
        if self.lam.size == k:
            self.lam = np.concatenate([[0.0], self.lam])
        if self.lam.size != k + 1:
            raise MarketError("lambda must list the bond then each risky asset")
        if np.any(self.lam < 0):
            raise MarketError("proportional costs cannot be negative")

    @property
    def d(self):
        return self.S0.size + 1

    @property
    def dt(self):
        return self.maturity / self.n

    def covariance(self):
        return np.outer(self.sigma, self.sigma) * self.rho

    def cholesky(self):
        try:
            return np.linalg.cholesky(self.covariance())
        except np.linalg.LinAlgError as exc:
            raise MarketError("correlation matrix is not positive definite") from exc

    def drift(self):
        G = self.cholesky()
        return np.linalg.solve(G, self.r - 0.5 * self.sigma ** 2)

    def bond_price(self, t):
        if self.rate_convention == "nominal":
            return (1.0 + self.r * self.dt) ** (t - self.n)
        if self.rate_convention == "effective":
            return (1.0 + self.r) ** (t * self.dt - self.maturity)
        raise MarketError(f"unknown rate convention {self.rate_convention!r}")


def _node_from_prices(nid, t, parents, prob, bond, bid, ask, bond_lam):
    """Assemble bid-ask matrix and solvency cone from quoted prices.

    Risky-risky exchange goes through the numeraire: the composite rates
    satisfy the triangle condition by construction.
    """
    d = len(bid) + 1
    bond_b = bond * (1.0 - bond_lam)
    bond_a = bond * (1.0 + bond_lam)
    pi = np.ones((d, d))
    for i in range(1, d):
        pi[0, i] = ask[i - 1] / bond_b
        pi[i, 0] = bond_a / bid[i - 1]
    for i in range(1, d):
        for j in range(1, d):
            if i != j:
                pi[i, j] = ask[j - 1] / bid[i - 1]
    bidask = BidAskMatrix(pi)
    if bond_lam == 0.0:
        cone = _standard_cone(d, np.asarray(bid) / bond, np.asarray(ask) / bond)
    else:
        cone = solvency_cone(bidask)
    spreads = (np.asarray(ask) - np.asarray(bid)) / bond_b
    return MarketNode(id=nid, t=t, parents=parents, prob=prob,
                      bidask=bidask, cone=cone, spreads=spreads,
                      bid=np.asarray(bid, dtype=float),
                      ask=np.asarray(ask, dtype=float))


def crr_node_id(t, j):
    return f"t{t}j{j}"


def corr_node_id(t, idx):
    return f"t{t}j" + "_".join(str(i) for i in idx)


def build_crr(spec: TreeSpec) -> MarketTree:
    """Recombining binomial lattice: level t has t+1 nodes, price moves
    multiply by exp(+-sigma*sqrt(dt))."""
    if spec.kind != "crr":
        raise MarketError("spec.kind must be 'crr'")
    sdt = spec.sigma[0] * math.sqrt(spec.dt)
    lam = spec.lam[1]
    nodes, levels, succ = {}, [], {}
    prices, bondmap = {}, {}
    for t in range(spec.n + 1):
        level = []
        bond = spec.bond_price(t)
        for j in range(1, t + 2):
            nid = crr_node_id(t, j)
            s = float(spec.S0[0] * math.exp((2 * j - t - 2) * sdt))
            parents = []
            if t > 0:
                parents = [crr_node_id(t - 1, pj) for pj in (j - 1, j)
                           if 1 <= pj <= t]
            prob = math.comb(t, j - 1) / 2.0 ** t
            nodes[nid] = _node_from_prices(
                nid, t, parents, prob, bond,
                bid=[s * (1 - lam)], ask=[s * (1 + lam)], bond_lam=spec.lam[0])
            prices[nid] = np.array([s])
            bondmap[nid] = bond
            level.append(nid)
            if t < spec.n:
                succ[nid] = [crr_node_id(t + 1, j), crr_node_id(t + 1, j + 1)]
        levels.append(level)
    return MarketTree(d=2, T=spec.n, nodes=nodes, levels=levels, succ=succ,
                      spec=spec, prices=prices, bond=bondmap)


def build_correlated(spec: TreeSpec) -> MarketTree:
    """Recombining lattice for correlated risky assets.

    Independent coordinates move by +-sqrt(dt) per step around a drift;
    prices are recovered through the Cholesky factor of the log-price
    covariance.  Level t holds (t+1)^(d-1) nodes with 2^(d-1) branches.
    """
    if spec.kind != "correlated":
        raise MarketError("spec.kind must be 'correlated'")
    k = spec.S0.size
    G = spec.cholesky()
    alpha = spec.drift()
    y0 = np.linalg.solve(G, np.log(spec.S0))
    sq = math.sqrt(spec.dt)
    nodes, levels, succ = {}, [], {}
    prices, bondmap = {}, {}
    for t in range(spec.n + 1):
        level = []
        bond = spec.bond_price(t)
        for idx in product(range(1, t + 2), repeat=k):
            nid = corr_node_id(t, idx)
            y = y0 + t * alpha * spec.dt + (2 * np.asarray(idx) - t - 2) * sq
            s = np.exp(G @ y)
            parents = []
            if t > 0:
                for delta in product((0, 1), repeat=k):
                    pj = tuple(i - dlt for i, dlt in zip(idx, delta))
                    if all(1 <= p <= t for p in pj):
                        parents.append(corr_node_id(t - 1, pj))
            prob = math.prod(math.comb(t, i - 1) for i in idx) / 2.0 ** (t * k)
            nodes[nid] = _node_from_prices(
                nid, t, parents, prob, bond,
                bid=s * (1 - spec.lam[1:]), ask=s * (1 + spec.lam[1:]),
                bond_lam=spec.lam[0])
            prices[nid] = s
            bondmap[nid] = bond
            level.append(nid)
            if t < spec.n:
                succ[nid] = [corr_node_id(t + 1, tuple(i + dlt for i, dlt in zip(idx, delta)))
                             for delta in product((0, 1), repeat=k)]
        levels.append(level)
    return MarketTree(d=k + 1, T=spec.n, nodes=nodes, levels=levels, succ=succ,
                      spec=spec, prices=prices, bond=bondmap)


def build_tree(spec: TreeSpec) -> MarketTree:
    return build_crr(spec) if spec.kind == "crr" else build_correlated(spec)


# ---------------------------------------------------------------------------
# No-arbitrage certificate
# ---------------------------------------------------------------------------

def check_no_arbitrage(tree: MarketTree, audit: bool = False) -> bool:
    """True iff a consistent price system exists.

    One sparse LP over per-node price values: every node's value sits in
    its dual cone, interior values equal the branch-weighted average of
    their successors, and the normalization sum(Z_T) >= 1 per terminal
    keeps the process away from zero at every node.  ``audit`` relaxes to
    one normalized terminal per solve and conjoins the answers.
    """
    import scipy.sparse as sp

    d = tree.d
    order = {nid: i for i, nid in enumerate(tree.nodes)}
    nvars = d * len(order)

    cone_rows, cone_cols, cone_vals = [], [], []
    r = 0
    for nid, node in tree.nodes.items():
        base = d * order[nid]
        gens = node.cone.generators  # Z in K+ iff gens^T Z >= 0
        for gi in range(gens.shape[1]):
            g = gens[:, gi]
            s = np.max(np.abs(g))
            for k in range(d):
                if abs(g[k]) > 1e-15:
                    cone_rows.append(r)
                    cone_cols.append(base + k)
                    cone_vals.append(g[k] / s)
            r += 1
    n_cone = r

    mart_rows, mart_cols, mart_vals = [], [], []
    r = 0
    for level in tree.levels[:-1]:
        for nid in level:
            children = tree.succ[nid]
            w = 1.0 / len(children)
            base = d * order[nid]
            for k in range(d):
                mart_rows.append(r)
                mart_cols.append(base + k)
                mart_vals.append(1.0)
                for c in children:
                    mart_rows.append(r)
                    mart_cols.append(d * order[c] + k)
                    mart_vals.append(-w)
                r += 1
    n_mart = r

    def build(norm_terminals):
        rows = list(cone_rows)
        cols = list(cone_cols)
        vals = list(cone_vals)
        rr = n_cone
        for nid in norm_terminals:
            base = d * order[nid]
            for k in range(d):
                rows.append(rr)
                cols.append(base + k)
                vals.append(1.0)
            rr += 1
        A = sp.csr_matrix((vals, (rows, cols)), shape=(rr, nvars))
        b = np.concatenate([np.zeros(n_cone), np.ones(rr - n_cone)])
        E = sp.csr_matrix((mart_vals, (mart_rows, mart_cols)),
                          shape=(n_mart, nvars))
        f = np.zeros(n_mart)
        return linprog.LpProblem(objective=np.zeros(nvars), ineq=(A, b),
                                 eq=(E, f), bounds=[(0.0, None)] * nvars)

    if not audit:
        res = linprog.solve(build(tree.terminals))
        return res.status == "optimal"
    for nid in tree.terminals:
        if linprog.solve(build([nid])).status != "optimal":
            return False
    return True
