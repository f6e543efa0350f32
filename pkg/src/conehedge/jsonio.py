"""Deterministic JSON serialization for all wire formats.

Outputs are byte-deterministic: keys sorted, floats rendered with %.12g,
no locale or platform dependence.  Loaders accept anything the standard
json module parses.
"""

from __future__ import annotations

import json

import numpy as np

from .geometry import Cone, Polyhedron
from .market import (
    BidAskMatrix,
    MarketError,
    MarketNode,
    MarketTree,
    TreeSpec,
    solvency_cone,
)
from .payoffs import Claim


class FormatError(ValueError):
    """Malformed input document; carries a JSON-pointer-ish path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# Deterministic writer
# ---------------------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("non-finite float in output")
    if x == 0.0:
        x = 0.0  # normalize -0.0
    out = "%.12g" % x
    return out


def dumps(obj) -> str:
    """Compact deterministic JSON text."""
    parts: list[str] = []
    _write(obj, parts)
    return "".join(parts)


def _write(obj, parts):
    if obj is None:
        parts.append("null")
    elif obj is True:
        parts.append("true")
    elif obj is False:
        parts.append("false")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj, ensure_ascii=False))
    elif isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_fmt_float(float(obj)))
    elif isinstance(obj, np.ndarray):
        _write(obj.tolist(), parts)
    elif isinstance(obj, dict):
        parts.append("{")
        for i, key in enumerate(sorted(obj)):
            if not isinstance(key, str):
                raise ValueError("object keys must be strings")
            if i:
                parts.append(",")
            parts.append(json.dumps(key, ensure_ascii=False))
            parts.append(":")
            _write(obj[key], parts)
        parts.append("}")
    elif isinstance(obj, (list, tuple)):
        parts.append("[")
        for i, item in enumerate(obj):
            if i:
                parts.append(",")
            _write(item, parts)
        parts.append("]")
    else:
        raise TypeError(f"cannot serialize {type(obj)!r}")


def dump_path(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
        fh.write("\n")


def load_path(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

def polyhedron_to_json(p: Polyhedron) -> dict:
    out = {"dim": p.dim}
    if p.B is not None:
        out["hrep"] = {"B": p.B, "b": p.b}
    if p.points is not None and not p.empty:
        out["vrep"] = {"points": list(p.points), "rays": list(p.rays)}
    if p.empty:
        out["empty"] = True
    return out


def polyhedron_from_json(doc, path="$") -> Polyhedron:
    try:
        dim = int(doc["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path + ".dim", "missing or invalid dimension") from exc
    if doc.get("empty"):
        return Polyhedron.make_empty(dim)
    B = b = points = rays = None
    if "hrep" in doc:
        try:
            B = np.asarray(doc["hrep"]["B"], dtype=float).reshape(-1, dim)
            b = np.asarray(doc["hrep"]["b"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path + ".hrep", "invalid inequality data") from exc
    if "vrep" in doc:
        try:
            points = [np.asarray(q, dtype=float) for q in doc["vrep"]["points"]]
            rays = [np.asarray(q, dtype=float) for q in doc["vrep"].get("rays", [])]
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(path + ".vrep", "invalid generator data") from exc
    if B is None and points is None:
        raise FormatError(path, "need hrep or vrep")
    return Polyhedron(dim=dim, B=B, b=b, points=points, rays=rays)


def cone_to_json(c: Cone) -> dict:
    return {"generators": c.generators.T}  # one generator per row


def cone_from_json(doc, path="$") -> Cone:
    try:
        gens = np.asarray(doc["generators"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path + ".generators", "invalid cone data") from exc
    return Cone(gens.T)


# ---------------------------------------------------------------------------
# Market trees and claims
# ---------------------------------------------------------------------------

def tree_to_json(tree: MarketTree) -> dict:
    nodes = []
    for nid, node in tree.nodes.items():
        parent = None
        if len(node.parents) == 1:
            parent = node.parents[0]
        elif node.parents:
            parent = sorted(node.parents)
        nodes.append({
            "id": nid,
            "t": node.t,
            "parent": parent,
            "prob": node.prob,
            "bidask": node.bidask.pi,
        })
    nodes.sort(key=lambda n: (n["t"], n["id"]))
    return {"d": tree.d, "T": tree.T, "nodes": nodes}


def tree_from_json(doc, path="$") -> MarketTree:
    from .geometry import dual_cone

    try:
        d = int(doc["d"])
        T = int(doc["T"])
        rows = doc["nodes"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, "market document needs d, T, nodes") from exc
    nodes: dict[str, MarketNode] = {}
    levels: dict[int, list[str]] = {}
    succ: dict[str, list[str]] = {}
    for i, row in enumerate(rows):
        p = f"{path}.nodes[{i}]"
        try:
            nid = str(row["id"])
            t = int(row["t"])
            prob = float(row["prob"])
            pi = np.asarray(row["bidask"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(p, "node needs id, t, prob, bidask") from exc
        raw_parent = row.get("parent")
        if raw_parent is None:
            parents = []
        elif isinstance(raw_parent, list):
            parents = [str(q) for q in raw_parent]
        else:
            parents = [str(raw_parent)]
        try:
            bidask = BidAskMatrix(pi)
            if bidask.d != d:
                raise MarketError("bid-ask size does not match asset count")
            cone = solvency_cone(bidask)
            node = MarketNode(id=nid, t=t, parents=parents, prob=prob,
                              bidask=bidask, cone=cone)
        except MarketError as exc:
            raise FormatError(p, str(exc)) from exc
        nodes[nid] = node
        levels.setdefault(t, []).append(nid)
        for q in parents:
            succ.setdefault(q, []).append(nid)
    if sorted(levels) != list(range(T + 1)):
        raise FormatError(path, "levels must cover 0..T without gaps")
    try:
        return MarketTree(d=d, T=T, nodes=nodes,
                          levels=[levels[t] for t in range(T + 1)], succ=succ)
    except MarketError as exc:
        raise FormatError(path, str(exc)) from exc


def treespec_to_json(spec: TreeSpec) -> dict:
    return {
        "kind": spec.kind,
        "S0": spec.S0,
        "sigma": spec.sigma,
        "rho": spec.rho,
        "r": spec.r,
        "lambda": spec.lam,
        "n": spec.n,
        "maturity": spec.maturity,
        "rate_convention": spec.rate_convention,
    }


def treespec_from_json(doc, path="$") -> TreeSpec:
    try:
        return TreeSpec(
            kind=str(doc["kind"]),
            S0=doc["S0"],
            sigma=doc["sigma"],
            n=int(doc["n"]),
            r=float(doc.get("r", 0.0)),
            rho=doc.get("rho"),
            lam=doc.get("lambda"),
            maturity=float(doc.get("maturity", 1.0)),
            rate_convention=str(doc.get("rate_convention", "nominal")),
        )
    except (KeyError, TypeError, ValueError, MarketError) as exc:
        raise FormatError(path, f"invalid tree spec: {exc}") from exc


def claim_to_json(claim: Claim) -> dict:
    return {"payoffs": dict(claim.payoffs)}


def claim_from_json(doc, path="$") -> Claim:
    try:
        payoffs = {str(k): np.asarray(v, dtype=float)
                   for k, v in doc["payoffs"].items()}
    except (KeyError, AttributeError, TypeError, ValueError) as exc:
        raise FormatError(path + ".payoffs", "invalid claim data") from exc
    return Claim(payoffs)


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

def shp_result_to_json(res) -> dict:
    out = {}
    for nid, nodeset in res.sets.items():
        out[nid] = polyhedron_to_json(nodeset.polyhedron)
        out[nid]["efficient_points"] = list(nodeset.efficient_points)
        out[nid]["efficient_directions"] = list(nodeset.efficient_directions)
    return {"root": res.root_id, "sets": out}


def vop_problem_from_json(doc, path="$"):
    from .vop import VopProblem

    try:
        return VopProblem(
            P=np.asarray(doc["P"], dtype=float),
            B=np.asarray(doc["B"], dtype=float),
            b=np.asarray(doc["b"], dtype=float),
            C=Cone(np.asarray(doc["C"], dtype=float).T),
            c=np.asarray(doc["c"], dtype=float) if "c" in doc else None,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(path, f"invalid vector problem: {exc}") from exc


def vop_solution_to_json(sol) -> dict:
    return {
        "primal_points": list(sol.primal_points),
        "primal_directions": list(sol.primal_directions),
        "dual_points": [{"u": u, "w": w} for u, w in sol.dual_points],
        "upper_image": polyhedron_to_json(sol.upper_image),
        "lower_image": polyhedron_to_json(sol.lower_image),
        "c": sol.c,
    }


def frontier_to_json(points) -> list:
    return [{"alpha": p.alpha, "trade_cost": p.trade_cost,
             "v": p.v, "z": p.z, "index": p.index} for p in points]


def state_to_json(state) -> dict:
    return {
        "node": state.node_id,
        "t": state.t,
        "portfolio": state.V,
        "withdrawals": state.withdrawals,
        "version": state.version,
        "done": state.done,
        "history": [{
            "node": rec.node_id,
            "t": rec.t,
            "alpha": rec.alpha,
            "withdrawal": rec.withdrawal,
            "trade": rec.trade,
            "portfolio_after": rec.v_after,
        } for rec in state.history],
    }
