"""``degob`` command-line front end.

Exit codes: 0 success, 2 tolerance failure, 3 configuration error,
4 solver non-convergence.
"""

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import blowup, catalog, claims, epicheck, freeboundary, solver, svg, weiss
from .config import ConfigError, GridConfig, RunConfig, check_writable
from .grid import GridSpec, read_field, write_field

logger = logging.getLogger("degob")

EXIT_OK = 0
EXIT_TOLERANCE = 2
EXIT_CONFIG = 3
EXIT_NONCONVERGENCE = 4


def _plain(v):
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def write_rows(path, rows):
    """CSV with the keys of the first row as header; floats at full precision."""
    check_writable(path)
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        writer = csv.writer(fh, lineterminator="\n")
        keys = list(rows[0])
        writer.writerow(keys)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in map(_plain, (row[k] for k in keys))])


def write_json(path, obj):
    check_writable(path)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_plain)
        fh.write("\n")


def _load_field(path):
    try:
        return read_field(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read field {path}: {exc}") from exc


def _point(text):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from None
    return x, y


# -- commands ----------------------------------------------------------------


def cmd_solve(args):
    if args.config:
        cfg = RunConfig.load(args.config, "solve")
    else:
        cfg = RunConfig(command="solve")
    if args.n is not None:
        cfg.grid.n = args.n
        cfg.validate()
    check_writable(args.out)
    spec = GridSpec(cfg.grid.n)
    try:
        trace = solver.trace_from_dict(cfg.boundary)
        problem = solver.DirichletProblem(spec, trace, cfg.grid.variant)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad boundary descriptor: {exc}") from exc
    rep = solver.solve(problem, tol=cfg.grid.tol, max_iter=cfg.grid.max_iter, omega=cfg.grid.omega)
    out = args.out or "field.csv"
    write_field(out, rep.field)
    print(f"{rep.status}: {rep.iterations} sweeps, residual {rep.residual:.3e}, omega {rep.omega:.6f}")
    if args.report:
        write_json(args.report, {"status": rep.status, "iterations": rep.iterations, "residual": rep.residual,
                                 "omega": rep.omega, "energy": rep.energy, "n": spec.n})
    if args.svg:
        svg.emit_svg(rep.field, args.svg)
    return EXIT_OK if rep.converged else EXIT_NONCONVERGENCE


def cmd_catalog(args):
    kw = {"family": args.family}
    for key in ("theta1", "sigma", "a", "b"):
        val = getattr(args, key)
        if val is not None:
            kw[key] = val
    try:
        sol = catalog.CatalogSolution.from_dict(kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    x, y = np.array([args.x]), np.array([args.y])
    gx, gy = catalog.gradient(sol, x, y)
    result = {"profile": sol.to_dict(), "x": args.x, "y": args.y, "value": float(catalog.evaluate(sol, x, y)[0]),
              "gradient": [float(gx[0]), float(gy[0])]}
    print(json.dumps(result, sort_keys=True))
    if args.out:
        write_json(args.out, result)
    return EXIT_OK


def _radii(text, spec):
    if text == "auto":
        return weiss.radius_ladder(spec)
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise ConfigError(f"radii must be 'auto' or a comma-separated list, got {text!r}") from None


def cmd_weiss(args):
    fld = _load_field(args.field)
    out = args.out or "weiss.csv"
    check_writable(out)
    try:
        rep = weiss.weiss_report(fld, _radii(args.radii, fld.spec), slack=args.slack)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rep.write_csv(out)
    print(f"phi(0+) ~ {rep.phi0:.8f}; monotone within {rep.slack:g}: {rep.monotone}; decay fit: {rep.fit.label}")
    return EXIT_OK if rep.monotone else EXIT_TOLERANCE


def cmd_blowup(args):
    if args.x0 != (0.0, 0.0):
        raise ConfigError("blow-ups are computed at the origin only")
    fld = _load_field(args.field)
    out = args.out or "blowup.json"
    check_writable(out)
    try:
        res = blowup.classify(fld, _radii(args.radii, fld.spec))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_json(out, res.to_dict())
    print(f"class {res.energy_class}, phi(0+) ~ {res.phi0:.8f}, profile "
          f"{None if res.best is None else res.best.to_dict()}, flags {res.flags}")
    return EXIT_TOLERANCE if res.flags else EXIT_OK


def cmd_fb(args):
    fld = _load_field(args.field)
    for p in (args.out, args.graph, args.svg):
        check_writable(p)
    try:
        curve = freeboundary.extract(fld)
    except freeboundary.ExtractionError as exc:
        print(f"extraction failed: {exc}", file=sys.stderr)
        if args.svg:
            svg.emit_svg(fld, args.svg)
        return EXIT_TOLERANCE
    curve.write_csv(args.out or "curve.csv")
    status = EXIT_OK
    if args.graph:
        fit = freeboundary.graph_fit(curve)
        fit.write_csv(args.graph)
        print(f"rho {fit.rho:g}, slices unique: {fit.unique}, opening angle {fit.opening_angle:.6f}")
        if not fit.unique:
            status = EXIT_TOLERANCE
    if args.svg:
        svg.emit_svg(curve, args.svg)
    print(f"{len(curve)} free-boundary points")
    return status


def _load_traces(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read traces {path}: {exc}") from exc
    items = data["traces"] if isinstance(data, dict) else data
    traces, labels = [], []
    for k, d in enumerate(items):
        try:
            traces.append(solver.trace_from_dict(d))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"trace {k}: {exc}") from exc
        labels.append(d.get("label"))
    return traces, labels


def cmd_epi(args):
    cfg = RunConfig(command="epi", grid=GridConfig(n=args.n))
    traces, labels = _load_traces(args.traces)
    out = args.out or "epi.csv"
    check_writable(out)
    table = epicheck.kappa_sweep(traces, GridSpec(cfg.grid.n), labels=labels)
    table.write_csv(out)
    for row in table.rows:
        if row.rejected:
            print(f"{row.index}: rejected ({row.error})")
        else:
            r = row.report
            k = "n/a" if r.kappa is None else f"{r.kappa:.4g}"
            print(f"{row.index}: {r.case}, M_c={r.M_c:.10f}, M_v={r.M_v:.10f}, kappa={k}")
    bad = [r.report for r in table.rows if r.report is not None and r.report.M_v > r.report.M_c + 10 * solver.DEFAULT_TOL]
    return EXIT_TOLERANCE if bad else EXIT_OK


def _write_claim(res, folder, svg_path=None):
    os.makedirs(folder, exist_ok=True)
    write_json(os.path.join(folder, f"{res.claim_id}.json"), res.to_dict())
    for name, rows in res.tables.items():
        write_rows(os.path.join(folder, f"{res.claim_id}_{name}.csv"), rows)
    curve = res.artifacts.get("curve")
    if curve is not None:
        svg.emit_svg(curve, svg_path or os.path.join(folder, f"{res.claim_id}.svg"))


def cmd_reproduce(args):
    ids = list(claims.CLAIMS) if args.claim == "all" else [args.claim]
    for cid in ids:
        if cid not in claims.CLAIMS:
            print(f"unknown claim id {cid!r}; known: {', '.join(claims.CLAIMS)}", file=sys.stderr)
            return EXIT_CONFIG
    folder = args.out or "reports"
    status = EXIT_OK
    for cid in ids:
        try:
            res = claims.run(cid, seed=args.seed)
        except solver.SolverError as exc:
            print(f"{cid}: {exc}", file=sys.stderr)
            return EXIT_NONCONVERGENCE
        _write_claim(res, folder, args.svg if len(ids) == 1 else None)
        print(res.summary())
        if not res.passed:
            status = EXIT_TOLERANCE
    return status


# -- parser ------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output path")
    common.add_argument("--svg", help="also write an SVG figure here")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="degob", description="Obstacle problem with degenerate forcing |x| on the unit disk.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve a Dirichlet problem and dump the field")
    s.add_argument("--n", type=int, help="override the grid size from the config")
    s.add_argument("--report", help="JSON solve summary")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("catalog", help="closed-form global solutions")
    csub = c.add_subparsers(dest="action", required=True)
    ce = csub.add_parser("eval", parents=[common], help="value and gradient at a point")
    ce.add_argument("--family", required=True, choices=catalog.FAMILIES)
    ce.add_argument("--theta1", type=float)
    ce.add_argument("--sigma", type=float)
    ce.add_argument("--a", type=float)
    ce.add_argument("--b", type=float)
    ce.add_argument("--x", type=float, required=True)
    ce.add_argument("--y", type=float, required=True)
    ce.set_defaults(func=cmd_catalog)

    w = sub.add_parser("weiss", parents=[common], help="Weiss energy on a radius ladder")
    w.add_argument("--field", required=True)
    w.add_argument("--radii", default="auto")
    w.add_argument("--slack", type=float, default=weiss.DEFAULT_SLACK)
    w.set_defaults(func=cmd_weiss)

    b = sub.add_parser("blowup", parents=[common], help="classify the blow-up at the origin")
    b.add_argument("--field", required=True)
    b.add_argument("--x0", type=_point, default=(0.0, 0.0))
    b.add_argument("--radii", default="auto")
    b.set_defaults(func=cmd_blowup)

    f = sub.add_parser("fb", parents=[common], help="extract the free boundary")
    f.add_argument("--field", required=True)
    f.add_argument("--graph", help="graph-fit CSV")
    f.set_defaults(func=cmd_fb)

    e = sub.add_parser("epi", parents=[common], help="energy comparison for boundary traces")
    e.add_argument("--traces", required=True)
    e.add_argument("--n", type=int, default=256)
    e.set_defaults(func=cmd_epi)

    r = sub.add_parser("reproduce", parents=[common], help="run an acceptance claim")
    r.add_argument("claim", help=f"one of: {', '.join(claims.CLAIMS)}, or 'all'")
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solver.SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
