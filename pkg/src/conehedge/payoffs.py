"""Terminal claims in physical units for the standard option families.

Every builder is nodewise-pure: the payoff at a terminal node depends
only on the prices quoted at that node.  Tie conventions follow the
displayed indicators: the digital and the two-asset payoffs fire on ">=",
the physical call on strict ">".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import as_vector
from .market import MarketError, MarketTree


@dataclass
class Claim:
    """Map terminal-node id -> payoff vector in R^d (physical units)."""

    payoffs: dict[str, np.ndarray]

    def __post_init__(self):
        self.payoffs = {nid: as_vector(v) for nid, v in self.payoffs.items()}

    def at(self, nid):
        return self.payoffs[nid]

    def negate(self):
        return Claim({nid: -v for nid, v in self.payoffs.items()})

    def validate(self, tree: MarketTree):
        terms = set(tree.terminals)
        if set(self.payoffs) != terms:
            raise MarketError("claim must cover exactly the terminal nodes")
        for v in self.payoffs.values():
            if v.size != tree.d:
                raise MarketError("payoff dimension must match asset count")
        return self


def _ask(tree, nid, asset):
    return float(tree.nodes[nid].ask[asset - 1])


def _mid(tree, nid, asset):
    node = tree.nodes[nid]
    return float(node.bid[asset - 1] + node.ask[asset - 1]) / 2.0


def digital_asset_or_nothing(tree: MarketTree, strike: float, asset: int = 1) -> Claim:
    """One unit of the asset when its terminal ask clears the strike."""
    if asset < 1 or asset >= tree.d:
        raise MarketError("digital payoff needs a risky asset index")
    out = {}
    for nid in tree.terminals:
        v = np.zeros(tree.d)
        if _ask(tree, nid, asset) >= strike:
            v[asset] = 1.0
        out[nid] = v
    return Claim(out)


def call_physical(tree: MarketTree, strike: float, asset: int = 1) -> Claim:
    """Physical-delivery call on the mid price: one unit of the asset
    against strike units of the riskless asset, when mid > strike."""
    if asset < 1 or asset >= tree.d:
        raise MarketError("call payoff needs a risky asset index")
    out = {}
    for nid in tree.terminals:
        v = np.zeros(tree.d)
        if _mid(tree, nid, asset) > strike:
            v[0] = -strike
            v[asset] = 1.0
        out[nid] = v
    return Claim(out)


def exchange_option(tree: MarketTree) -> Claim:
    """Receive one unit of asset 1 against one unit of asset 2 when
    asset 1's ask is at least asset 2's ask."""
    if tree.d != 3:
        raise MarketError("exchange option needs two risky assets")
    out = {}
    for nid in tree.terminals:
        v = np.zeros(3)
        if _ask(tree, nid, 1) >= _ask(tree, nid, 2):
            v[1], v[2] = 1.0, -1.0
        out[nid] = v
    return Claim(out)


def outperformance_option(tree: MarketTree, strike: float) -> Claim:
    """Deliver the better-performing of two assets against the strike when
    either ask reaches it; exactly one delivery branch can fire."""
    if tree.d != 3:
        raise MarketError("outperformance option needs two risky assets")
    out = {}
    for nid in tree.terminals:
        a1, a2 = _ask(tree, nid, 1), _ask(tree, nid, 2)
        v = np.zeros(3)
        if max(a1, a2) >= strike:
            v[0] = -strike
            if a1 >= a2 and a1 >= strike:
                v[1] = 1.0
            elif a2 > a1 and a2 >= strike:
                v[2] = 1.0
        out[nid] = v
    return Claim(out)
