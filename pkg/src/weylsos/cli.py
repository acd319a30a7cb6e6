"""Command-line interface: ``weylsos <command> ...``.

Exit codes: 0 success, 2 usage or parse error, 3 solver failure, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path

from . import fock, moments, polyparse, sdp
from .weyl import degree

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_INVARIANT = 0, 2, 3, 4
THREADS_ENV = "WEYLSOS_THREADS"
SOLVER_KEYS = {
    "tol": float,
    "max_iter": int,
    "initial_scale": float,
    "infeas_tol": float,
    "max_step": float,
    "stall_iters": int,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def fmt_num(v: float) -> str:
    """12 significant digits; the CSV number format."""
    return f"{v:.12g}"


def load_config(path: str | None, tol: float | None = None) -> sdp.SdpConfig:
    """Solver settings from an optional ``[solver]`` key-value file, then ``--tol``."""
    values = {}
    if path:
        parser = configparser.ConfigParser()
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if parser.has_section("solver"):
            for key, raw in parser.items("solver"):
                if key not in SOLVER_KEYS:
                    raise UsageError(f"unknown solver key {key!r} in {path}")
                try:
                    values[key] = SOLVER_KEYS[key](raw)
                except ValueError as exc:
                    raise UsageError(f"bad value for {key}: {raw!r}") from exc
    if tol is not None:
        values["tol"] = tol
    return sdp.SdpConfig(**values)


def parse_grid(text: str) -> list[Fraction]:
    """``start:stop:step`` (inclusive) or a comma list; decimals stay exact."""
    try:
        if ":" in text:
            start, stop, step = (Decimal(p) for p in text.split(":"))
            if step <= 0:
                raise UsageError("grid step must be positive")
            count = int((stop - start) / step + Decimal("1e-9")) + 1
            if count < 1:
                raise UsageError(f"empty grid {text!r}")
            return [Fraction(start + i * step) for i in range(count)]
        return [Fraction(Decimal(p)) for p in text.split(",") if p.strip()]
    except (InvalidOperation, ValueError) as exc:
        raise UsageError(f"bad grid {text!r}") from exc


def parse_log_grid(text: str, per_decade: int) -> list[float]:
    """``lo:hi`` log-spaced with ``per_decade`` points per decade, or a comma list."""
    try:
        if ":" in text:
            lo, hi = (float(p) for p in text.split(":"))
            if lo <= 0 or hi < lo:
                raise UsageError("lambdaStar grid needs 0 < lo <= hi")
            a, b = math.log10(lo), math.log10(hi)
            steps = max(0, round((b - a) * per_decade))
            return [10 ** (a + (b - a) * i / steps) if steps else lo for i in range(steps + 1)]
        out = [float(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"bad lambdaStar grid {text!r}") from exc
    if not out:
        raise UsageError("empty lambdaStar grid")
    return out


def parse_orders(text: str) -> list[int]:
    try:
        if ".." in text:
            lo, hi = (int(p) for p in text.split(".."))
            out = list(range(lo, hi + 1))
        else:
            out = [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"bad order list {text!r}") from exc
    if not out or min(out) < 1:
        raise UsageError("orders must be positive integers")
    return out


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    return obj


def _poly_from_args(args, m=None):
    m = args.m if m is None else m
    if args.poly:
        return polyparse.parse_poly(args.poly, args.modes, {"m": m} if m is not None else None)
    if m is None:
        raise UsageError("give --poly or --m")
    return polyparse.builtin_quartic(m)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _ordered_map(fn, items):
    """Map in grid order; worker processes when the thread env var asks for them."""
    items = list(items)
    n = min(_threads(), len(items))
    if n <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _write_csv(path: str, header: list[str], rows: list[list[str]]) -> None:
    text = ",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    try:
        Path(path).write_text(text, newline="\n")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_normal_form(args) -> int:
    if not args.poly:
        raise UsageError("normal-form needs --poly")
    p = _poly_from_args(args)
    print(p.to_text())
    return EXIT_OK


def cmd_lower_bound(args) -> int:
    cfg = load_config(args.config, args.tol)
    p = _poly_from_args(args)
    res = moments.lower_bound(p, args.order, lambda_star=args.lambda_star, cfg=cfg)
    if args.dump_sdp:
        sdp.dump_problem(res.problem, args.dump_sdp)
    rec = res.to_record()
    if args.json:
        print(json.dumps(_json_safe(rec), sort_keys=True))
    else:
        print(f"bound      {fmt_num(res.lower_bound)}")
        print(f"sos_bound  {fmt_num(res.sos_bound)}")
        print(f"gap        {fmt_num(res.gap) if math.isfinite(res.gap) else 'nan'}")
        print(f"status     {res.status}")
        print(f"iterations {res.solver_report.iterations}")
        print(f"wall_time  {res.wall_time:.3f}s")
    if res.status in ("optimal",):
        return EXIT_OK
    if res.status in ("primal_infeasible", "dual_infeasible"):
        return EXIT_OK
    return EXIT_SOLVER


def _sweep_point(job):
    src, modes, m, orders, cutoff, cfg = job
    p = polyparse.parse_poly(src, modes, {"m": m}) if src else polyparse.builtin_quartic(m)
    cells = [fmt_num(float(m))]
    try:
        cells.append(fmt_num(fock.variational_upper_bound(p, cutoff)))
    except fock.DimensionError:
        cells.append("dimension_cap")
    for k in orders:
        try:
            r = moments.lower_bound(p, k, cfg=cfg)
        except moments.RelaxationError:
            cells.append("order_too_small")
            continue
        cells.append(fmt_num(r.lower_bound) if math.isfinite(r.lower_bound) else r.status)
    return cells


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.tol)
    grid = parse_grid(args.m_grid)
    orders = parse_orders(args.orders)
    if not grid:
        raise UsageError("empty m grid")
    # validate 2k >= deg before running anything
    for m in grid:
        p = polyparse.parse_poly(args.poly, args.modes, {"m": m}) if args.poly else polyparse.builtin_quartic(m)
        if p and 2 * min(orders) < degree(p):
            raise UsageError(f"order {min(orders)} too small for degree {degree(p)} at m={float(m)}")
    jobs = [(args.poly, args.modes, m, orders, args.cutoff, cfg) for m in grid]
    rows = _ordered_map(_sweep_point, jobs)
    _write_csv(args.out, ["m", "variational"] + [f"lambda{k}" for k in orders], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _lambdastar_point(job):
    p, ls, orders, cfg = job
    base = moments.lower_bound(p, 2, lambda_star=ls, cfg=cfg)
    cells = [fmt_num(ls)]
    for k in orders:
        r = moments.lower_bound(p, k, lambda_star=ls, cfg=cfg)
        d = r.lower_bound - base.lower_bound
        if math.isfinite(d):
            cells.append(fmt_num(d))
        else:
            cells.append(r.status if not math.isfinite(r.lower_bound) else base.status)
    return cells


def cmd_lambdastar_sweep(args) -> int:
    cfg = load_config(args.config, args.tol)
    grid = parse_log_grid(args.grid, args.per_decade)
    orders = parse_orders(args.orders)
    p = _poly_from_args(args)
    if p and 4 < degree(p):
        raise UsageError("the reference order 2 needs deg(p) <= 4")
    rows = _ordered_map(_lambdastar_point, [(p, ls, orders, cfg) for ls in grid])
    _write_csv(args.out, ["lambdaStar"] + [f"d{k}" for k in orders], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_perturb(args) -> int:
    cfg = load_config(args.config, args.tol)
    p = _poly_from_args(args)
    records = []
    status = EXIT_OK
    for r in parse_orders(args.r):
        try:
            res = moments.min_perturbation(p, r, Fraction(Decimal(args.c)), k=args.order, cfg=cfg)
            rec = res.to_record()
        except moments.SosInfeasibleError as exc:
            rec = {"r": r, "status": "infeasible", "message": str(exc)}
            status = EXIT_SOLVER
        except moments.SolverFailure as exc:
            rec = {"r": r, "status": "solver_failure", "message": str(exc)}
            status = EXIT_SOLVER
        records.append(rec)
    if args.json:
        print(json.dumps([_json_safe(r) for r in records], sort_keys=True))
    else:
        print("r,order,epsilon,l1_perturbation,l1_bound,residual,status")
        for rec in records:
            if "epsilon" in rec:
                print(
                    ",".join(
                        [str(rec["r"]), str(rec["order"])]
                        + [fmt_num(rec[k]) for k in ("epsilon", "l1_perturbation", "l1_bound", "residual")]
                        + [rec["status"]]
                    )
                )
            else:
                print(f"{rec['r']},,,,,,{rec['status']}")
    return status


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    ok = run_selftest(inject=args.inject_fault, out=sys.stdout)
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_poly_args(sp):
    sp.add_argument("--poly", help="expression in a, ad, x, p (indices a[k]); may use the parameter m")
    sp.add_argument("--m", type=lambda s: Fraction(Decimal(s)), default=None, help="quartic parameter m (builtin p^2/2 + m x^2 + x^4)")
    sp.add_argument("--modes", type=int, default=1, help="number of modes (default 1)")


def _add_solver_args(sp):
    sp.add_argument("--tol", type=float, default=None, help="solver tolerance (default 1e-8)")
    sp.add_argument("--config", help="key-value file with a [solver] section")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="weylsos", description="SOS/moment bounds for bosonic Hamiltonians")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("normal-form", help="print the canonical normal form")
    _add_poly_args(sp)
    sp.set_defaults(func=cmd_normal_form)

    sp = sub.add_parser("lower-bound", help="one relaxation solve")
    _add_poly_args(sp)
    _add_solver_args(sp)
    sp.add_argument("--order", "-k", type=int, required=True)
    sp.add_argument("--lambda-star", type=float, default=None, help="add lambdaStar*I - M_k(y) >= 0")
    sp.add_argument("--json", action="store_true")
    sp.add_argument("--dump-sdp", metavar="PATH", help="write the SDP in the plain-text dump format")
    sp.set_defaults(func=cmd_lower_bound)

    sp = sub.add_parser("sweep", help="bounds over an m grid (CSV)")
    sp.add_argument("--poly", help="family with parameter m (default: builtin quartic)")
    sp.add_argument("--modes", type=int, default=1)
    sp.add_argument("--m-grid", default="-4:1:0.25", help="start:stop:step inclusive, or a comma list; write --m-grid=-4:1:0.25 when it starts negative")
    sp.add_argument("--orders", default="2..6", help="e.g. 2..6 or 2,4")
    sp.add_argument("--cutoff", type=int, default=40, help="Fock cutoff for the variational column")
    sp.add_argument("--out", required=True)
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("lambdastar-sweep", help="lambda^k - lambda^2 over a lambdaStar grid (CSV)")
    _add_poly_args(sp)
    sp.add_argument("--orders", default="3..6")
    sp.add_argument("--grid", default="1e2:1e12", help="lo:hi (log-spaced) or a comma list")
    sp.add_argument("--per-decade", type=int, default=1)
    sp.add_argument("--out", required=True)
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_lambdastar_sweep)

    sp = sub.add_parser("perturb", help="minimal eps with p + eps*g^r_c SOS")
    _add_poly_args(sp)
    sp.add_argument("--r", default="1", help="r values, e.g. 1..3")
    sp.add_argument("--c", default="3", help="c > 2")
    sp.add_argument("--order", "-k", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    _add_solver_args(sp)
    sp.set_defaults(func=cmd_perturb)

    sp = sub.add_parser("selftest", help="run the invariant suite")
    sp.add_argument("--inject-fault", metavar="CHECK", default=None, help="corrupt the named check (test mode)")
    sp.set_defaults(func=cmd_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except polyparse.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, moments.RelaxationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except moments.SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
