"""Command-line front end.

Subcommands: ``price``, ``hedge``, ``dual``, ``check``, ``sweep`` and
``approx``. Exit codes: 0 success, 2 I/O, 3 validation, 4 solver,
5 verification (including a premium inside the recession cone).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from . import diagnostics, duality, hedging, io
from .errors import SolverError, ValidationError, VerificationError
from .lp import DEFAULT_TOLERANCES, Tolerances, to_lp_format, use_tolerances
from .market import MarketModel, scale_depth

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

EXIT_IO, EXIT_VALIDATION, EXIT_SOLVER, EXIT_VERIFICATION = 2, 3, 4, 5


class _MinusInfinity(Exception):
    pass


def _fmt(v: float) -> str:
    """Full precision plus a rounded column."""
    if not np.isfinite(v):
        return f"{v}"
    return f"{v!r}\t{v:.6g}"


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def tolerances_from(config: dict, args: argparse.Namespace) -> Tolerances:
    tol = DEFAULT_TOLERANCES
    known = {f.name for f in fields(Tolerances)}
    section = config.get("tolerances", {})
    bad = set(section) - known
    if bad:
        raise ValidationError(f"unknown tolerance keys {sorted(bad)}")
    tol = replace(tol, **section)
    for name in ("feasibility", "pivot", "duality_gap"):
        val = getattr(args, name, None)
        if val is not None:
            tol = replace(tol, **{name: val})
    return tol


def _claim(model: MarketModel, path: str | None, default: str = "zero") -> np.ndarray:
    tree = model.tree
    if path is None:
        p = np.zeros(len(tree))
        if default == "root":
            p[0] = 1.0
        return p
    return io.process_from_dict(tree, io.read_json(path))


# --------------------------------------------------------------------------
# subcommands

def cmd_price(args, out) -> int:
    model = io.load_model(args.model)
    c = _claim(model, args.claim)
    p = _claim(model, args.premium, "root")
    if args.emit_lp:
        asm, _ = hedging.price_lp(model, c, p)
        Path(args.emit_lp).write_text(to_lp_format(asm.build()))
    res = hedging.superhedge_cost(model, c, p)
    print(f"status\t{res.status.value}", file=out)
    print(f"price\t{_fmt(res.value)}", file=out)
    report = {"status": res.status.value, "value": res.value, "diagnosis": res.diagnosis}
    if res.finite:
        report["portfolio"] = io.process_to_dict(model.tree, res.portfolio)
        report["residual"] = res.residual
    else:
        print(f"diagnosis\t{res.diagnosis}", file=out)
    if args.out:
        io.write_json(args.out, report)
    if res.status is hedging.PriceStatus.MINUS_INFINITY:
        raise _MinusInfinity(res.diagnosis)
    return 0


def cmd_hedge(args, out) -> int:
    model = io.load_model(args.model)
    c = _claim(model, args.claim)
    if args.emit_lp:
        asm = hedging.HedgingLP.for_model(model)
        for k in range(len(model.tree)):
            asm.add_budget(k, rhs=-c[k])
        Path(args.emit_lp).write_text(to_lp_format(asm.build()))
    res = hedging.membership(model, c)
    print(f"membership\t{res.status.value}", file=out)
    report = {"status": res.status.value}
    if res.member:
        print(f"residual\t{res.residual:.3e}", file=out)
        report["portfolio"] = io.process_to_dict(model.tree, res.portfolio)
        report["residual"] = res.residual
    else:
        sep = duality.bipolar_separation(model, c)
        print(f"separating deflator: E sum c y = {sep.pairing:.12g}, sigma(y) = {sep.sigma:.12g}", file=out)
        report["separating_deflator"] = io.process_to_dict(model.tree, sep.y)
        report["pairing"] = sep.pairing
        report["sigma"] = sep.sigma
    if args.out:
        io.write_json(args.out, report)
    return 0


def cmd_dual(args, out) -> int:
    model = io.load_model(args.model)
    c = _claim(model, args.claim)
    p = _claim(model, args.premium, "root")
    if args.certificate:
        stored = io.read_json(args.certificate)
        y = io.process_from_dict(model.tree, stored["y"])
        ok = duality.verify_certificate(model, c, p, y, stored["price"])
        print(f"certificate\t{'verified' if ok else 'FAILED'}", file=out)
        if not ok:
            raise VerificationError("stored certificate does not verify")
        return 0
    res = hedging.superhedge_cost(model, c, p)
    if res.status is hedging.PriceStatus.MINUS_INFINITY:
        raise _MinusInfinity(res.diagnosis)
    cert = duality.extract_deflator(model, c, p, verify_dual=args.verify_dual, result=res)
    print(duality.verification_report(cert), file=out)
    if args.out:
        io.write_json(args.out, cert.to_dict(model.tree))
    return 0


def cmd_check(args, out) -> int:
    model = io.load_model(args.model)
    tree = model.tree
    p = _claim(model, args.premium, "root")
    adm = hedging.premium_admissibility(model, p)
    arb = hedging.arbitrage_check(model)
    clo = diagnostics.closedness_condition(model)
    pos = diagnostics.positive_price_exists(model)
    print(f"premium: {'admissible' if adm.admissible else 'NOT admissible'} "
          f"(-p in rc C: {adm.minus_p_in_rc}, p in rc C: {adm.p_in_rc}, p in pos C: {adm.p_in_pos})", file=out)
    print(f"arbitrage: {'FOUND' if arb.found else 'none'}", file=out)
    if clo.satisfied:
        print("closedness condition: satisfied", file=out)
    else:
        where = ", ".join(f"t={tree.time[tree.index[v.node]]} (node {v.node}, direction "
                          f"{np.round(v.direction, 6).tolist()})" for v in clo.violations)
        print(f"closedness condition: VIOLATED at {where}", file=out)
    print(f"strictly positive market prices: {'yes' if pos.exists else 'no'}; "
          f"recession cones in the nonnegative orthant: {'yes' if pos.recession_nonnegative else 'no'}", file=out)
    if args.out:
        report = {"premium": {"admissible": adm.admissible, "minus_p_in_rc": adm.minus_p_in_rc,
                              "p_in_rc": adm.p_in_rc, "p_in_pos": adm.p_in_pos, "note": adm.note},
                  "arbitrage": {"found": arb.found, "value": arb.value,
                                "claim": None if arb.claim is None else io.process_to_dict(tree, arb.claim),
                                "portfolio": None if arb.portfolio is None
                                else io.process_to_dict(tree, arb.portfolio)},
                  "closedness": clo.to_dict(),
                  "positive_prices": pos.to_dict(tree)}
        io.write_json(args.out, report)
    return 0


def _parse_grid(text: str) -> np.ndarray:
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    return np.array([float(v) for v in text.split(",")])


def _sweep_point(job):
    model, c, p, param, value, tol = job
    with use_tolerances(tol):
        if param == "scale":
            res = hedging.superhedge_cost(model, value * c, p)
        else:
            res = hedging.superhedge_cost(scale_depth(model, value), c, p)
    return value, res.value, res.status.value


def cmd_sweep(args, out) -> int:
    model = io.load_model(args.model)
    c = _claim(model, args.claim)
    p = _claim(model, args.premium, "root")
    grid = _parse_grid(args.grid)
    jobs = [(model, c, p, args.param, float(v), args.tolerances) for v in grid]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    target = open(args.out, "w", newline="") if args.out else out
    try:
        w = csv.writer(target)
        w.writerow([args.param, "price", "price_rounded", "status"])
        for v, val, st in rows:
            w.writerow([repr(v), repr(val), f"{val:.6g}", st])
    finally:
        if args.out:
            target.close()
    return 0


_SAFE = {name: getattr(np, name) for name in
         ("exp", "log", "sqrt", "abs", "maximum", "minimum", "sum", "dot", "pi", "e", "log1p", "expm1")}


def _compile(expr: str):
    code = compile(expr, "<expr>", "eval")

    def f(x):
        return float(eval(code, {"__builtins__": {}}, {**_SAFE, "x": np.asarray(x, dtype=float)}))
    return f


def _gradient(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h * max(1.0, abs(x[j]))
        g[j] = (f(x + e) - f(x - e)) / (2 * e[j])
    return g


def tangent_approximation(f, points, kind: str = "cost", grad=None) -> dict:
    """Polyhedral outer approximation of a smooth convex function from tangents.

    ``cost``: pieces of ``max_k f(x_k) + grad f(x_k) (x - x_k)`` (the origin is
    always sampled, so the result vanishes at 0 when ``f(0) = 0``).
    ``constraint``: rows of the halfspaces containing ``{f <= 0}``.
    """
    points = [np.atleast_1d(np.asarray(x, dtype=float)) for x in points]
    dim = points[0].size
    zero = np.zeros(dim)
    grad = grad or (lambda x: _gradient(f, x))
    if kind == "cost":
        if abs(f(zero)) > 1e-12:
            raise ValidationError("a cost must vanish at the origin")
        pts = [zero] + [x for x in points if np.any(x != 0)]
        pieces = []
        for x in pts:
            g = grad(x)
            b = min(f(x) - g @ x, 0.0) if np.any(x) else 0.0
            pieces.append({"a": g.tolist(), "b": b})
        return {"pieces": pieces}
    if kind == "constraint":
        if f(zero) > 0:
            raise ValidationError("the constraint set must contain the origin")
        rows = []
        for x in points:
            g = grad(x)
            # f(x) + g (z - x) <= 0  <=>  g z <= g x - f(x)
            rows.append({"g": g.tolist(), "h": max(float(g @ x - f(x)), 0.0)})
        return {"rows": rows}
    raise ValidationError(f"unknown approximation kind {kind!r}")


def cmd_approx(args, out) -> int:
    f = _compile(args.expr)
    grad = None
    if args.grad:
        parts = [_compile(g) for g in args.grad]
        grad = lambda x: np.array([gj(x) for gj in parts])
    if args.points:
        pts = json.loads(Path(args.points).read_text()) if Path(args.points).exists() else json.loads(args.points)
    else:
        pts = [[float(v)] for v in _parse_grid(args.grid)]
    spec = tangent_approximation(f, pts, args.kind, grad)
    text = json.dumps(spec, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text, file=out)
    return 0


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superhedge", description="Superhedging on scenario trees.")
    ap.add_argument("--config", help="TOML file with a [tolerances] table")
    ap.add_argument("--feasibility", type=float, help="LP feasibility tolerance")
    ap.add_argument("--pivot", type=float, help="LP pivot tolerance")
    ap.add_argument("--duality-gap", dest="duality_gap", type=float, help="LP duality gap tolerance")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, claim=True, premium=True):
        p.add_argument("--model", required=True)
        if claim:
            p.add_argument("--claim", help="claim process JSON (default: zero claim)")
        if premium:
            p.add_argument("--premium", help="premium process JSON (default: one unit at the root)")
        p.add_argument("--out", help="report file")

    p = sub.add_parser("price", help="superhedging cost of a claim")
    common(p)
    p.add_argument("--emit-lp", help="write the pricing LP in LP file format")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("hedge", help="zero-cost hedgeability with a certificate")
    common(p, premium=False)
    p.add_argument("--emit-lp", help="write the membership LP in LP file format")
    p.set_defaults(func=cmd_hedge)

    p = sub.add_parser("dual", help="deflator certificate and its verification")
    common(p)
    p.add_argument("--verify-dual", action="store_true", help="also solve the dual LP from scratch")
    p.add_argument("--certificate", help="verify a stored certificate instead of extracting one")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("check", help="premium admissibility, arbitrage and closedness conditions")
    common(p, claim=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="CSV of prices over a parameter grid")
    common(p)
    p.add_argument("--param", choices=["scale", "depth"], default="scale",
                   help="scale the claim, or multiply all order-book depths")
    p.add_argument("--grid", required=True, help="lo:hi:n or comma separated values")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("approx", help="tangent approximation of a smooth convex function")
    p.add_argument("--expr", required=True, help="numpy expression in the vector x, e.g. 'exp(x[0]) - 1'")
    p.add_argument("--grad", nargs="*", help="optional expressions for the partial derivatives")
    p.add_argument("--kind", choices=["cost", "constraint"], default="cost")
    p.add_argument("--points", help="JSON list of sample points (inline or a file)")
    p.add_argument("--grid", default="-1:1:9", help="1-D sample grid lo:hi:n when --points is absent")
    p.add_argument("--out")
    p.set_defaults(func=cmd_approx)
    return ap


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = tolerances_from(load_config(args.config), args)
        args.tolerances = tol
        with use_tolerances(tol):
            return args.func(args, out)
    except (OSError, json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except _MinusInfinity as exc:
        print(f"verification: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except VerificationError as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
