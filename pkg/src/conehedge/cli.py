"""Batch command-line driver.

Subcommands build market trees, run the backward recursion, extract
price bounds, replay forward strategies, solve standalone vector
problems, render SVG plots, and serve the interactive session API.
Outputs are byte-deterministic JSON (sorted keys, fixed float format).

Exit codes: 0 success, 1 malformed input, 2 no-arbitrage violation.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import jsonio
from .jsonio import FormatError
from .market import MarketError, build_tree, check_no_arbitrage
from .payoffs import (
    call_physical,
    digital_asset_or_nothing,
    exchange_option,
    outperformance_option,
)
from .shp import NoArbitrageViolation, scalar_price, shp_backward
from .strategy import run_policy
from .svgplot import plot_frontier, plot_polyhedron
from .vop import benson_solve

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_NO_ARBITRAGE = 2


def _load_tree(args):
    if args.spec:
        spec = jsonio.treespec_from_json(jsonio.load_path(args.spec))
        return build_tree(spec), spec
    if args.market:
        return jsonio.tree_from_json(jsonio.load_path(args.market)), None
    raise FormatError("$", "need --spec or --market")


def _load_claim(args, tree):
    if args.claim:
        claim = jsonio.claim_from_json(jsonio.load_path(args.claim))
        claim.validate(tree)
        return claim
    kind = args.payoff
    if kind == "digital":
        return digital_asset_or_nothing(tree, args.strike, args.payoff_asset)
    if kind == "call":
        return call_physical(tree, args.strike, args.payoff_asset)
    if kind == "exchange":
        return exchange_option(tree)
    if kind == "outperformance":
        return outperformance_option(tree, args.strike)
    raise FormatError("$", "need --claim or --payoff")


def _threads(args):
    if args.threads is not None:
        return args.threads
    return int(os.environ.get("CONEHEDGE_THREADS", "1"))


def _emit(doc, out):
    text = jsonio.dumps(doc)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.write("\n")
    else:
        print(text)


def cmd_compute(args):
    tree, _ = _load_tree(args)
    claim = _load_claim(args, tree)
    res = shp_backward(tree, claim, numeraire=args.asset,
                       check_na=not args.skip_na_check, threads=_threads(args))
    _emit(jsonio.shp_result_to_json(res), args.output)
    return EXIT_OK


def cmd_price(args):
    tree, spec = _load_tree(args)
    claim = _load_claim(args, tree)
    rows = []
    for side in args.side:
        target = claim if side == "a" else claim.negate()
        res = shp_backward(tree, target, numeraire=args.asset,
                           check_na=not args.skip_na_check, threads=_threads(args))
        units = scalar_price(res.root, args.asset)
        if side == "b":
            units = -units
        row = {"asset": args.asset, "side": side, "price_units": units}
        if spec is not None and args.asset == 0:
            row["price_cash"] = units * spec.bond_price(0)
        rows.append(row)
    if args.format == "csv":
        cols = ["asset", "side", "price_units", "price_cash"]
        lines = [",".join(cols)]
        for row in rows:
            lines.append(",".join(
                "" if c not in row else
                ("%.12g" % row[c] if isinstance(row[c], float) else str(row[c]))
                for c in cols))
        text = "\n".join(lines)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        _emit({"prices": rows}, args.output)
    return EXIT_OK


def cmd_strategy(args):
    tree, _ = _load_tree(args)
    claim = _load_claim(args, tree)
    res = shp_backward(tree, claim, numeraire=args.asset,
                       check_na=not args.skip_na_check, threads=_threads(args))
    x0 = np.asarray([float(v) for v in args.x0.split(",")])
    path = [p for p in args.path.split(",") if p]
    script = None
    if args.mode == "script":
        if not args.script:
            raise FormatError("$", "--mode script needs --script")
        script = jsonio.load_path(args.script)
    y = None
    if args.withdraw_portfolio:
        y = np.asarray([float(v) for v in args.withdraw_portfolio.split(",")])
    session = run_policy(tree, claim, res, x0, path, mode=args.mode, y=y,
                         script=script)
    doc = jsonio.state_to_json(session.state)
    doc["total_withdrawn"] = session.state.withdrawals
    _emit(doc, args.output)
    return EXIT_OK


def cmd_vop(args):
    prob = jsonio.vop_problem_from_json(jsonio.load_path(args.problem))
    sol = benson_solve(prob)
    _emit(jsonio.vop_solution_to_json(sol), args.output)
    return EXIT_OK


def cmd_plot(args):
    if args.shp:
        doc = jsonio.load_path(args.shp)
        key = args.node or doc["root"]
        poly = jsonio.polyhedron_from_json(doc["sets"][key],
                                           path=f"$.sets.{key}")
        axes = tuple(int(a) for a in args.axes.split(","))
        svg = plot_polyhedron(poly, axes=axes, title=f"superhedging set @ {key}")
    elif args.frontier:
        doc = jsonio.load_path(args.frontier)
        svg = plot_frontier(doc, title="withdrawal / trading frontier")
    else:
        raise FormatError("$", "need --shp or --frontier")
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(svg + "\n")
    return EXIT_OK


def cmd_check(args):
    tree, _ = _load_tree(args)
    ok = check_no_arbitrage(tree, audit=args.audit)
    _emit({"no_arbitrage": ok}, args.output)
    return EXIT_OK if ok else EXIT_NO_ARBITRAGE


def cmd_serve(args):
    from .service import serve

    serve(port=args.port, persist=args.persist)
    return EXIT_OK


def _add_market_args(sp, claim=True):
    sp.add_argument("--spec", help="tree-spec JSON (builder inputs)")
    sp.add_argument("--market", help="explicit market JSON")
    sp.add_argument("--asset", type=int, default=0,
                    help="numeraire asset index (default 0)")
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--skip-na-check", action="store_true")
    sp.add_argument("-o", "--output", default=None)
    if claim:
        sp.add_argument("--claim", help="claim JSON")
        sp.add_argument("--payoff",
                        choices=["digital", "call", "exchange", "outperformance"])
        sp.add_argument("--strike", type=float, default=0.0)
        sp.add_argument("--payoff-asset", type=int, default=1)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="conehedge",
        description="superhedging sets, price bounds and strategies on "
                    "finite trees with proportional transaction costs")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("compute", help="per-node superhedging sets")
    _add_market_args(sp)
    sp.set_defaults(func=cmd_compute)

    sp = sub.add_parser("price", help="scalar price bounds")
    _add_market_args(sp)
    sp.add_argument("--side", choices=["a", "b"], nargs="+", default=["a"])
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("strategy", help="forward strategy along a path")
    _add_market_args(sp)
    sp.add_argument("--x0", required=True, help="initial portfolio, comma separated")
    sp.add_argument("--path", required=True, help="node ids after the root, comma separated")
    sp.add_argument("--mode", default="max-cash",
                    choices=["max-cash", "min-trade", "min-trade-vertex", "script"])
    sp.add_argument("--script", help="script JSON for --mode script")
    sp.add_argument("--withdraw-portfolio", help="withdrawal portfolio y, comma separated")
    sp.set_defaults(func=cmd_strategy)

    sp = sub.add_parser("vop", help="solve a standalone vector optimization problem")
    sp.add_argument("--problem", required=True)
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_vop)

    sp = sub.add_parser("plot", help="render SVG plots")
    sp.add_argument("--shp", help="shp result JSON")
    sp.add_argument("--node", help="node id (default root)")
    sp.add_argument("--axes", default="0,1")
    sp.add_argument("--frontier", help="frontier JSON")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_plot)

    sp = sub.add_parser("check", help="no-arbitrage certificate")
    _add_market_args(sp, claim=False)
    sp.add_argument("--audit", action="store_true",
                    help="per-terminal normalization instead of the joint one")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("serve", help="run the session HTTP service")
    sp.add_argument("--port", type=int, default=8787)
    sp.add_argument("--persist", help="append-only JSONL event log")
    sp.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (MarketError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except NoArbitrageViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ARBITRAGE


if __name__ == "__main__":
    sys.exit(main())
