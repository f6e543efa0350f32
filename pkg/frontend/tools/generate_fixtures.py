"""Record service transcripts for the cockpit replay tests.

Runs the outperformance-option session through the real service handlers
(three documented step sequences) and freezes every payload the cockpit
would see, so the frontend tests replay byte-identical server responses.

Usage: python3 tools/generate_fixtures.py  (from frontend/)
"""

import json
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[2] / "src"))

from conehedge import jsonio
from conehedge.geometry import canonicalize
from conehedge.market import TreeSpec, build_correlated
from conehedge.payoffs import outperformance_option
from conehedge.service import SessionStore, handle
from conehedge.shp import shp_backward

SPEC = {
    "kind": "correlated", "S0": [50.0, 45.0], "sigma": [0.15, 0.2],
    "rho": [[1.0, 0.2], [0.2, 1.0]], "r": 0.0, "lambda": [0.0, 0.2, 0.1],
    "n": 4, "maturity": 1.0, "rate_convention": "nominal",
}
PATH = ["t1j2_1", "t2j3_2", "t3j3_3", "t4j4_4"]
OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "fixtures"


def as_plain(payload):
    return json.loads(jsonio.dumps(payload))


def first_vertex():
    spec = jsonio.treespec_from_json(SPEC)
    tree = build_correlated(spec)
    claim = outperformance_option(tree, 47.0)
    res = shp_backward(tree, claim, check_na=False)
    pts, _ = canonicalize(res.root).vrep()
    return next(p for p in pts if abs(p[0] + 27.404) < 0.01)


def pick_index(frontier, kind, session=None):
    pts = frontier["frontier"]
    if kind == "max-cash":
        best = max(pts, key=lambda p: (p["alpha"], -p["trade_cost"]))
    elif kind == "min-trade-vertex":
        best = min(pts, key=lambda p: (p["trade_cost"], -p["alpha"]))
    elif kind == "min-trade-lp":
        v, z = session.strategy.min_trading()
        node = session.tree.nodes[session.strategy.state.node_id]
        from conehedge.strategy import default_gamma
        cost = float(default_gamma(node) @ z)
        best = min(pts, key=lambda p: (abs(p["alpha"]), abs(p["trade_cost"] - cost)))
        if abs(best["alpha"]) > 1e-6 or abs(best["trade_cost"] - cost) > 1e-6:
            return None  # not a vertex: caller records a custom choice
    elif isinstance(kind, float):
        best = min(pts, key=lambda p: abs(p["alpha"] - kind))
    else:
        raise ValueError(kind)
    return best["index"]


def run_replay(name, selectors, x0):
    store = SessionStore()
    status, created = handle(store, "POST", "/sessions", {
        "spec": SPEC,
        "payoff": {"kind": "outperformance", "strike": 47.0},
        "x0": list(map(float, x0)),
    })
    assert status == 201, created
    created = as_plain(created)
    sid = created["session_id"]
    session = store.get(sid)
    steps = []
    for k, selector in enumerate(selectors):
        _, pre = handle(store, "GET", f"/sessions/{sid}/state", None)
        fstatus, frontier = handle(store, "GET", f"/sessions/{sid}/frontier", None)
        assert fstatus == 200
        frontier = as_plain(frontier)
        idx = pick_index(frontier, selector, session)
        body = {"version": frontier["version"]}
        if idx is not None:
            body["frontier_index"] = idx
        else:
            v, z = session.strategy.min_trading()
            body["custom"] = {"alpha": 0.0, "z": list(map(float, z))}
        if k < len(PATH):
            body["next_node"] = PATH[k]
        cstatus, response = handle(store, "POST", f"/sessions/{sid}/choose",
                                   as_plain(body))
        assert cstatus == 200, response
        steps.append({
            "pre_state": as_plain(pre)["state"],
            "frontier": frontier,
            "choose": as_plain(body),
            "response": as_plain(response),
        })
    _, final = handle(store, "GET", f"/sessions/{sid}/state", None)
    final = as_plain(final)["state"]
    doc = {
        "name": name,
        "session_id": sid,
        "create_response": created,
        "steps": steps,
        "final_state": final,
    }
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / f"{name}.json").write_text(jsonio.dumps(doc) + "\n")
    total = final["withdrawals"][0]
    print(f"{name}: total withdrawn {total:.4f}, "
          f"{len(steps)} steps -> src/fixtures/{name}.json")
    return total


def main():
    x0 = first_vertex()
    t1 = run_replay("replay_max_cash",
                    ["max-cash"] * 5, x0)
    t2 = run_replay("replay_min_trade",
                    ["min-trade-lp"] * 4 + ["max-cash"], x0)
    t3 = run_replay("replay_mixed",
                    ["max-cash", "max-cash", 1.222,
                     "min-trade-vertex", "min-trade-vertex"], x0)
    assert abs(t1 - 2.882) <= 1e-3, t1
    assert abs(t2 - 6.143) <= 1e-3, t2
    assert abs(t3 - 3.006) <= 1e-3, t3
    print("all replay totals match the expected totals")


if __name__ == "__main__":
    main()
