"""gbkp command-line front end.

    gbkp solve|eval|residual|limit|soliton|info --config job.json [--out DIR]
         [--trunc-m M] [--tail-tol TOL] [--n N]

Exit status: 0 success, 1 configuration, 2 numerical/conditioning,
3 divisor/singularity, 4 I/O.
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from .asymptotics import limit_n1, limit_n2, limit_n3
from .config import (
    MODES,
    dump_json,
    fmt,
    parse_config,
    read_solution,
    solution_record,
    validate,
)
from .errors import GbkpError
from .residual import residual_analytic, residual_fd
from .solitons import SolitonParams, soliton_u
from .solver import build_solution, evaluate_u, parameter_count, unknown_labels
from .theta import Truncation, choose_truncation

EXIT_IO = 4


def _truncation(cfg, tau):
    t = cfg.truncation
    tol = t.get("tail_tol", 1e-14)
    if "radius" in t:
        return Truncation(int(t["radius"]), tol)
    return choose_truncation(tau, tol)


def _solution(cfg, base):
    if cfg.solution:
        path = cfg.solution if os.path.isabs(cfg.solution) else os.path.join(base, cfg.solution)
        return read_solution(path)
    return build_solution(cfg.n, cfg.params, cfg.tau, _truncation(cfg, cfg.tau))


def write_grid_csv(path, pts, values):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "z", "t", "u"])
        for p, v in zip(pts, np.ravel(values)):
            w.writerow([fmt(c) for c in p] + [fmt(v)])


def write_limit_csv(path, report):
    cols = ["lambda", "unknown", "value", "fitted_coeff", "target", "rel_err"]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in report.rows:
            w.writerow([row["unknown"] if c == "unknown" else fmt(row[c]) for c in cols])


def _checks_record(report):
    return {
        "ladder": [fmt(v) for v in report.ladder],
        "ok": report.ok,
        "checks": [
            {"name": c.name, "value": fmt(c.value), "target": fmt(c.target), "error": fmt(c.error),
             "tol": fmt(c.tol), "mode": c.mode, "ok": c.ok}
            for c in report.checks.values()
        ],
        "notes": list(report.notes),
    }


def run(cfg, out_dir=".", base_dir=".", stream=None):
    """Execute one job; returns the list of files written."""
    stream = stream or sys.stdout
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name):
        p = os.path.join(out_dir, name)
        written.append(p)
        return p

    mode = cfg.mode
    if mode == "info":
        count = parameter_count(cfg.n)
        print(f"gbkp {__version__}", file=stream)
        print(f"N={cfg.n}: {count}  (period matrix + wave coefficients + scalars)", file=stream)
        print(f"unknowns: {', '.join(unknown_labels(cfg.n))}", file=stream)
        return written
    if mode == "solve":
        sol = build_solution(cfg.n, cfg.params, cfg.tau, _truncation(cfg, cfg.tau))
        dump_json(solution_record(sol, cfg.digest), path("solution.json"))
    elif mode == "eval":
        sol = _solution(cfg, base_dir)
        pts = cfg.grid.nodes_c_order()
        write_grid_csv(path("u_grid.csv"), pts, evaluate_u(sol, pts))
    elif mode == "residual":
        sol = _solution(cfg, base_dir)
        rec = {"tool": "gbkp", "version": __version__, "config_sha256": cfg.digest}
        if cfg.residual_method in ("analytic", "both"):
            rec["analytic"] = {k: _jsonable(v) for k, v in residual_analytic(sol, cfg.grid).as_dict().items()}
        if cfg.residual_method in ("fd", "both"):
            rep = residual_fd(lambda p: evaluate_u(sol, p), cfg.grid)
            rec["finite_difference"] = {k: _jsonable(v) for k, v in rep.as_dict().items()}
        dump_json(rec, path("residual.json"))
    elif mode == "limit":
        report = _limit(cfg)
        write_limit_csv(path("limit_report.csv"), report)
        dump_json(_checks_record(report), path("limit_checks.json"))
    elif mode == "soliton":
        s = cfg.soliton
        p = SolitonParams(s["mu"], s["nu"], s["kappa"], s.get("gamma"))
        pts = cfg.grid.nodes_c_order()
        write_grid_csv(path("soliton_grid.csv"), pts, soliton_u(p, s["order"], pts))
    for p in written:
        print(p, file=stream)
    return written


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [fmt(x) for x in v]
    if isinstance(v, str):
        return v
    return fmt(v)


def _limit(cfg):
    kw = {"ladder": cfg.ladder} if cfg.ladder else {}
    if cfg.n == 1:
        p = cfg.params
        return limit_n1(p["alpha"][0], p["rho"][0], p["k"][0], p.get("u0", 0.0), **kw)
    s = cfg.soliton
    params = SolitonParams(s["mu"], s["nu"], s["kappa"], s.get("gamma"))
    return limit_n2(params, **kw) if cfg.n == 2 else limit_n3(params, **kw)


def build_parser():
    ap = argparse.ArgumentParser(prog="gbkp", description="Periodic waves of the (3+1)-dimensional generalized BKP equation.")
    ap.add_argument("--version", action="version", version=f"gbkp {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        sp = sub.add_parser(mode)
        sp.add_argument("--config", required=mode != "info")
        sp.add_argument("--out", default=".")
        sp.add_argument("--trunc-m", type=int, dest="trunc_m")
        sp.add_argument("--tail-tol", type=float, dest="tail_tol")
        sp.add_argument("--n", type=int)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {"truncation.radius": args.trunc_m, "truncation.tail_tol": args.tail_tol, "n": args.n}
    try:
        if args.config:
            cfg = parse_config(args.config, args.mode, overrides)
            base = os.path.dirname(os.path.abspath(args.config))
        else:
            cfg = validate({"mode": args.mode, **({"n": args.n} if args.n else {})}, args.mode)
            base = "."
        run(cfg, args.out, base)
    except GbkpError as exc:
        print(f"gbkp: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"gbkp: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
