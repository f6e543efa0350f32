"""JSON-over-HTTP session API for interactive strategy stepping.

Each session holds a precomputed backward recursion and a single
forward-pass state.  Mutation happens only through ``choose``, guarded by
a per-session lock plus a monotone version counter: a stale version gets
409 and exactly one of two concurrent choices wins.  Every monetary
invariant is re-asserted server side on each request.

Sessions are in-memory; an optional append-only JSON-lines log records
creations and choices for replay.
"""

from __future__ import annotations

import json
import re
import threading
import time
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import jsonio
from .jsonio import FormatError
from .market import MarketError, build_tree
from .payoffs import (
    call_physical,
    digital_asset_or_nothing,
    exchange_option,
    outperformance_option,
)
from .shp import NoArbitrageViolation, shp_backward
from .strategy import StaleFrontierError, StrategyError, StrategySession


class ApiError(Exception):
    def __init__(self, status, code, message):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class Session:
    def __init__(self, sid, tree, claim, shp, strategy):
        self.id = sid
        self.tree = tree
        self.claim = claim
        self.shp = shp
        self.strategy = strategy
        self.lock = threading.Lock()
        self.created = time.time()
        self.updated = self.created
        self.frontier_cache: tuple[int, list] | None = None
        self.rng = np.random.default_rng(abs(hash(sid)) % (2 ** 32))

    def frontier(self):
        version = self.strategy.state.version
        if self.frontier_cache and self.frontier_cache[0] == version:
            return self.frontier_cache[1]
        pts = self.strategy.frontier()
        self.frontier_cache = (version, pts)
        return pts


class SessionStore:
    def __init__(self, persist=None):
        self.sessions: dict[str, Session] = {}
        self.lock = threading.Lock()
        self.persist = persist
        self._plock = threading.Lock()

    def log(self, action, sid, payload):
        if not self.persist:
            return
        with self._plock, open(self.persist, "a", encoding="utf-8") as fh:
            fh.write(jsonio.dumps({"ts": time.time(), "action": action,
                                   "session": sid, "payload": payload}) + "\n")

    def create(self, body) -> Session:
        tree, claim = _tree_and_claim(body)
        x0 = _vector(body, "x0", tree.d)
        asset = int(body.get("asset", 0))
        try:
            shp = shp_backward(tree, claim, numeraire=asset)
        except NoArbitrageViolation as exc:
            raise ApiError(422, "no_arbitrage_violation", str(exc))
        root = shp.root
        if not root.contains(x0, tol=1e-7):
            B, b = root.hrep()
            scale = np.max(np.abs(B), axis=1)
            gap = float(np.max((b - B @ x0) / scale))
            raise ApiError(409, "not_superhedging",
                           f"x0 misses the superhedging set by {gap:.6g} "
                           "(largest normalized facet violation)")
        y = None
        if "y" in body:
            y = _vector(body, "y", tree.d)
        gamma = None
        if "gamma" in body:
            gamma = np.asarray(body["gamma"], dtype=float)
        try:
            strategy = StrategySession(tree, claim, shp, x0, y=y, gamma=gamma)
        except StrategyError as exc:
            raise ApiError(400, "bad_request", str(exc))
        sid = uuid.uuid4().hex[:12]
        session = Session(sid, tree, claim, shp, strategy)
        with self.lock:
            self.sessions[sid] = session
        self.log("create", sid, {"request": body})
        return session

    def get(self, sid) -> Session:
        with self.lock:
            session = self.sessions.get(sid)
        if session is None:
            raise ApiError(404, "not_found", f"no session {sid}")
        return session


def _tree_and_claim(body):
    try:
        if "spec" in body:
            tree = build_tree(jsonio.treespec_from_json(body["spec"], path="$.spec"))
        elif "market" in body:
            tree = jsonio.tree_from_json(body["market"], path="$.market")
        else:
            raise ApiError(400, "bad_request", "need spec or market")
        if "claim" in body:
            claim = jsonio.claim_from_json(body["claim"], path="$.claim")
            claim.validate(tree)
        elif "payoff" in body:
            p = body["payoff"]
            kind = p.get("kind")
            if kind == "digital":
                claim = digital_asset_or_nothing(tree, float(p["strike"]),
                                                 int(p.get("asset", 1)))
            elif kind == "call":
                claim = call_physical(tree, float(p["strike"]),
                                      int(p.get("asset", 1)))
            elif kind == "exchange":
                claim = exchange_option(tree)
            elif kind == "outperformance":
                claim = outperformance_option(tree, float(p["strike"]))
            else:
                raise ApiError(400, "bad_request", f"unknown payoff kind {kind!r}")
        else:
            raise ApiError(400, "bad_request", "need claim or payoff")
    except (FormatError, MarketError, KeyError, TypeError, ValueError) as exc:
        raise ApiError(400, "bad_request", str(exc))
    return tree, claim


def _vector(body, key, size):
    try:
        v = np.asarray(body[key], dtype=float)
    except (KeyError, TypeError, ValueError):
        raise ApiError(400, "bad_request", f"missing or invalid {key}")
    if v.shape != (size,):
        raise ApiError(400, "bad_request", f"{key} must have length {size}")
    return v


def _state_payload(session: Session):
    st = session.strategy.state
    doc = jsonio.state_to_json(st)
    doc["session_id"] = session.id
    doc["T"] = session.tree.T
    doc["d"] = session.tree.d
    if not st.done:
        doc["successors"] = sorted(session.tree.succ.get(st.node_id, []))
        here = session.shp.at(st.node_id)
        pts, rays = here.vrep()
        doc["shp_here"] = {"points": list(pts), "rays": list(rays)}
    return doc


def handle(store: SessionStore, method: str, path: str, body) -> tuple[int, dict]:
    """Route one request; returns (status, payload)."""
    if method == "POST" and path == "/sessions":
        session = store.create(body or {})
        payload = {"session_id": session.id, "state": _state_payload(session)}
        try:
            payload["root_frontier"] = jsonio.frontier_to_json(session.frontier())
        except StrategyError:
            pass
        return 201, payload

    m = re.fullmatch(r"/sessions/([0-9a-f]+)/frontier", path)
    if method == "GET" and m:
        session = store.get(m.group(1))
        with session.lock:
            if session.strategy.state.done:
                raise ApiError(410, "gone", "session is complete")
            pts = session.frontier()
            return 200, {"version": session.strategy.state.version,
                         "frontier": jsonio.frontier_to_json(pts)}

    m = re.fullmatch(r"/sessions/([0-9a-f]+)/choose", path)
    if method == "POST" and m:
        session = store.get(m.group(1))
        body = body or {}
        with session.lock:
            strategy = session.strategy
            st = strategy.state
            if st.done:
                raise ApiError(410, "gone", "session is complete")
            version = body.get("version")
            if version is None or int(version) != st.version:
                raise ApiError(409, "stale_version",
                               f"state version is {st.version}")
            if "frontier_index" in body:
                pts = session.frontier()
                idx = int(body["frontier_index"])
                if not 0 <= idx < len(pts):
                    raise ApiError(400, "bad_request",
                                   f"frontier index out of range 0..{len(pts) - 1}")
                point = pts[idx]
            elif "custom" in body:
                c = body["custom"]
                try:
                    point = strategy.custom_point(float(c["alpha"]), c["z"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ApiError(400, "bad_request", f"invalid custom choice: {exc}")
                except StrategyError as exc:
                    raise ApiError(400, "infeasible_choice", str(exc))
            else:
                raise ApiError(400, "bad_request", "need frontier_index or custom")
            next_node = body.get("next_node")
            if st.t < session.tree.T:
                if body.get("simulate"):
                    succ = session.tree.succ[st.node_id]
                    next_node = succ[int(session.rng.integers(len(succ)))]
                if next_node is None:
                    raise ApiError(400, "bad_request", "need next_node or simulate")
            try:
                strategy.advance(point, next_node if st.t < session.tree.T else None)
            except StaleFrontierError as exc:
                raise ApiError(409, "stale_version", str(exc))
            except StrategyError as exc:
                raise ApiError(400, "infeasible_choice", str(exc))
            session.updated = time.time()
            replay_body = {k: v for k, v in body.items() if k != "simulate"}
            if next_node is not None:
                replay_body["next_node"] = next_node  # resolved, not sampled
            store.log("choose", session.id, {"request": replay_body})
            return 200, {"state": _state_payload(session),
                         "chosen_next": next_node}

    m = re.fullmatch(r"/sessions/([0-9a-f]+)/state", path)
    if method == "GET" and m:
        session = store.get(m.group(1))
        with session.lock:
            return 200, {"state": _state_payload(session)}

    raise ApiError(404, "not_found", f"no route {method} {path}")


class Handler(BaseHTTPRequestHandler):
    store: SessionStore = None
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")

    def _reply(self, status, payload):
        data = jsonio.dumps(payload).encode("utf-8")
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _dispatch(self, method):
        body = None
        length = int(self.headers.get("Content-Length") or 0)
        if length:
            try:
                body = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError):
                self._reply(400, {"error": {"code": "bad_json",
                                            "message": "body is not valid JSON"}})
                return
        try:
            status, payload = handle(self.store, method, self.path, body)
            self._reply(status, payload)
        except ApiError as exc:
            self._reply(exc.status, {"error": {"code": exc.code,
                                               "message": exc.message}})
        except Exception as exc:  # pragma: no cover - defensive
            self._reply(500, {"error": {"code": "internal",
                                        "message": str(exc)}})

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()


def replay_log(path, store: SessionStore | None = None):
    """Rebuild sessions by replaying an append-only event log.

    Returns ``(store, id_map)`` where id_map sends logged session ids to
    the freshly created ones.
    """
    store = store or SessionStore()
    id_map: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            ev = json.loads(line)
            request = ev["payload"]["request"]
            if ev["action"] == "create":
                _, payload = handle(store, "POST", "/sessions", request)
                id_map[ev["session"]] = payload["session_id"]
            elif ev["action"] == "choose":
                sid = id_map.get(ev["session"], ev["session"])
                handle(store, "POST", f"/sessions/{sid}/choose", request)
    return store, id_map


def make_server(port=0, persist=None) -> ThreadingHTTPServer:
    store = SessionStore(persist=persist)
    handler = type("BoundHandler", (Handler,), {"store": store})
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve(port=8787, persist=None):  # pragma: no cover - manual entry point
    server = make_server(port=port, persist=persist)
    try:
        server.serve_forever()
    finally:
        server.server_close()
