"""End-to-end reproduction runs, one per claim id.

Each run returns a :class:`ClaimResult` holding named checks (measured value,
bound, pass flag) plus tables that the command-line front end writes as CSV.
Runs are deterministic for a given seed.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import blowup, catalog, epicheck, freeboundary, solver, weiss
from .catalog import CatalogSolution
from .grid import GridSpec, ScalarField

logger = logging.getLogger(__name__)

PI81 = np.pi / 81.0


@dataclass
class Check:
    name: str
    value: object
    bound: str
    passed: bool

    def to_dict(self):
        v = self.value
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        return {"name": self.name, "value": v, "bound": self.bound, "passed": bool(self.passed)}


@dataclass
class ClaimResult:
    claim_id: str
    criterion: int
    title: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    seconds: float = 0.0
    time_limit: float = np.inf
    artifacts: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self):
        return all(c.passed for c in self.checks) and self.seconds <= self.time_limit

    def check(self, name, value, bound, passed):
        self.checks.append(Check(name, value, bound, bool(passed)))

    def failures(self):
        out = [c.name for c in self.checks if not c.passed]
        if self.seconds > self.time_limit:
            out.append(f"runtime {self.seconds:.1f}s > {self.time_limit:g}s")
        return out

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        line = f"[{status}] criterion {self.criterion:2d} {self.claim_id}: {self.title} ({self.seconds:.1f}s)"
        bad = self.failures()
        if bad:
            line += " -- failed: " + "; ".join(bad)
        return line

    def to_dict(self, timing=False):
        d = {
            "claim": self.claim_id,
            "criterion": self.criterion,
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "time_limit_s": self.time_limit,
        }
        if timing:
            d["seconds"] = self.seconds
        return d

    def to_json(self, timing=False):
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True, default=float)


# -- shared inputs -----------------------------------------------------------


@lru_cache(maxsize=8)
def ustar_solve(n):
    """Obstacle solve with ``u*`` Dirichlet data (cached per ``n``)."""
    spec = GridSpec(n)
    rep = solver.solve_obstacle(solver.DirichletProblem(spec, solver.catalog_trace(catalog.u_star())))
    if not rep.converged:
        raise solver.SolverError(f"u* solve at n={n} did not converge ({rep.status})")
    return rep


def catalog_examples():
    return [
        catalog.u_star(),
        CatalogSolution("double_cone", 0.4, 1.7),
        CatalogSolution("triple_cone", 0.25),
        CatalogSolution("full_support", a=0.04, b=-0.03),
    ]


def analytic_nonhomogeneous(spec):
    """``|x|^3/9 + 0.01 Re((x1 + i x2)^4)``: a positive solution of
    ``Δu = |x|`` on the disk that is not homogeneous."""
    return ScalarField.from_function(
        spec, lambda X, Y: np.hypot(X, Y) ** 3 / 9.0 + 0.01 * (X**4 - 6 * X**2 * Y**2 + Y**4), "analytic")


def _timed(fn):
    def run(*args, **kw):
        t0 = time.perf_counter()
        res = fn(*args, **kw)
        res.seconds = time.perf_counter() - t0
        return res

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def _order(hs, errs):
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])


def _angle_gap(a, b, period):
    d = np.mod(a - b, period)
    return float(min(d, period - d))


# -- claims ------------------------------------------------------------------


@_timed
def claim_energies(n=512, ntheta=4096, seed=0):
    res = ClaimResult("thm1.2-energies", 1, "catalog Weiss energies", time_limit=10.0)
    spec = GridSpec(n)
    r = 1.0 - 4.0 * spec.h
    rows = []
    for sol in catalog_examples():
        fld = catalog.sample_field(sol, spec)
        val = weiss.phi(fld, r, ntheta=ntheta)
        exact = catalog.weiss_energy_exact(sol)
        err = abs(val - exact)
        rows.append({"profile": json.dumps(sol.to_dict(), sort_keys=True), "phi": val, "exact": exact, "error": err})
        res.check(f"{sol.family} |phi - exact|", err, "<= 2e-3", err <= 2e-3)
    res.tables["energies"] = rows
    return res


@_timed
def claim_catalog_residual(n_points=10_000, step=1e-4, seed=0):
    res = ClaimResult("catalog-residual", 2, "catalog PDE residual", time_limit=5.0)
    rng = np.random.default_rng(seed)
    rows = []
    for sol in catalog_examples():
        xs, ys = [], []
        count = 0
        while count < n_points:
            p = rng.uniform(-1.0, 1.0, size=(4 * n_points, 2))
            x, y = p[:, 0], p[:, 1]
            r = np.hypot(x, y)
            d = np.minimum(catalog.distance_to_free_boundary(sol, x, y), r)
            ok = (r < 1.0) & (r >= 0.1) & (d >= 0.05) & (catalog.evaluate(sol, x, y) > 0)
            xs.append(x[ok])
            ys.append(y[ok])
            count += int(ok.sum())
        x = np.concatenate(xs)[:n_points]
        y = np.concatenate(ys)[:n_points]
        lap = catalog.fd_laplacian(sol, x, y, step)
        rel = float(np.max(np.abs(lap - np.hypot(x, y)) / np.hypot(x, y)))
        rows.append({"family": sol.family, "points": int(x.size), "max_relative_error": rel})
        res.check(f"{sol.family} max relative error", rel, "<= 1e-5", rel <= 1e-5)
    res.tables["residual"] = rows
    return res


@_timed
def claim_solver_recovery(ns=(64, 128, 256, 512), seed=0):
    res = ClaimResult("solver-recovery", 3, "solver recovery of u*", time_limit=180.0)
    us = catalog.u_star()
    rows, hs, errs = [], [], []
    for n in ns:
        rep = ustar_solve(n)
        spec = rep.field.spec
        X, Y = spec.coords
        ins = spec.inside
        err = float(np.max(np.abs(rep.field.values[ins] - catalog.evaluate(us, X[ins], Y[ins]))))
        hs.append(spec.h)
        errs.append(err)
        rows.append({"n": n, "h": spec.h, "max_error": err, "residual": rep.residual,
                     "iterations": rep.iterations, "omega": rep.omega})
        res.check(f"n={n} complementarity residual", rep.residual, "<= 1e-8", rep.residual <= 1e-8)
    order = _order(hs, errs)
    res.check("least-squares convergence order", order, ">= 1.5", order >= 1.5)
    res.tables["convergence"] = rows
    return res


@_timed
def claim_corner(n=512, seed=0):
    res = ClaimResult("thm1.4-corner", 4, "free-boundary corner geometry", time_limit=60.0)
    fld = ustar_solve(n).field
    h = fld.spec.h
    curve = freeboundary.extract(fld)
    haus = freeboundary.hausdorff_to_rays(curve, [np.pi / 6, 5 * np.pi / 6])
    res.check("Hausdorff distance to rays / h", haus / h, "<= 5", haus <= 5 * h)
    fit = freeboundary.graph_fit(curve)
    gap = abs(fit.opening_angle - 2 * np.pi / 3)
    res.check("opening angle error (rad)", gap, "<= 0.05", gap <= 0.05)
    right, left = fit.slope_errors(0.02, 0.1)
    res.check("right-branch max slope error", float(right.max()), "<= 0.05", right.size and right.max() <= 0.05)
    res.check("left-branch max slope error", float(left.max()), "<= 0.05", left.size and left.max() <= 0.05)
    res.check("slice uniqueness", f"rho={fit.rho:g}, {fit.x1.size} slices", "one crossing per slice", fit.unique)
    res.tables["graph"] = [
        {"x1": x, "g": g, "gprime": gp, "slope_err": abs(gp - freeboundary.SLOPE) if x > 0 else abs(gp + freeboundary.SLOPE)}
        for x, g, gp in zip(fit.x1, fit.g, fit.gprime)
    ]
    res.artifacts["curve"] = curve
    res.artifacts["graph"] = fit
    return res


@_timed
def claim_weiss(n=512, seed=0):
    res = ClaimResult("weiss-monotonicity", 5, "Weiss monotonicity and derivative identity", time_limit=30.0)
    fld = ustar_solve(n).field
    radii = weiss.radius_ladder(fld.spec)
    phis = np.array([weiss.phi(fld, r) for r in radii])
    rise = float(np.max(np.diff(phis))) if phis.size > 1 else 0.0
    res.check("max increase of phi toward r=0", rise, "<= 1e-4", rise <= 1e-4)
    res.tables["ladder"] = [{"r": r, "phi": p} for r, p in zip(radii, phis)]
    ana = analytic_nonhomogeneous(GridSpec(n))
    rows = []
    for r in (0.6, 0.8):
        lhs, rhs = weiss.phi_derivative_check(ana, r, 0.02)
        ratio = lhs / rhs
        rows.append({"r": r, "lhs": lhs, "rhs": rhs, "ratio": ratio})
        res.check(f"derivative identity lhs/rhs at r={r}", ratio, "in [0.9, 1.1]", 0.9 <= ratio <= 1.1)
    res.tables["derivative"] = rows
    return res


def random_catalog(rng, count):
    """``count`` random profiles cycling through the four families."""
    out = []
    for k in range(count):
        fam = catalog.FAMILIES[k % 4]
        if fam == "single_cone":
            out.append(CatalogSolution(fam, rng.uniform(0, 2 * np.pi)))
        elif fam == "double_cone":
            out.append(CatalogSolution(fam, rng.uniform(0, 2 * np.pi), rng.uniform(0.3, 2 * np.pi / 3)))
        elif fam == "triple_cone":
            out.append(CatalogSolution(fam, rng.uniform(0, 2 * np.pi / 3)))
        else:
            rad, ang = rng.uniform(0.0, 0.09), rng.uniform(0, 2 * np.pi)
            out.append(CatalogSolution(fam, a=rad * np.cos(ang), b=rad * np.sin(ang)))
    return out


def _theta_error(true, fit):
    """Parameter error up to relabelling: the largest base-angle gap under the
    best cyclic matching of the cones (a double cone with bases ``β0, β1``
    is the same profile whatever cone is listed first)."""
    if true.family == "full_support":
        return float(np.hypot(true.a - fit.a, true.b - fit.b))
    a, b = list(true.bases), list(fit.bases)
    return min(max(_angle_gap(x, y, 2 * np.pi) for x, y in zip(a, b[k:] + b[:k])) for k in range(len(b)))


@_timed
def claim_classification(n=512, count=20, seed=0):
    res = ClaimResult("classification", 6, "blow-up classification", time_limit=120.0)
    spec = GridSpec(n)
    rng = np.random.default_rng(seed)
    rows = []
    ok = 0
    worst = 0.0
    for sol in random_catalog(rng, count):
        out = blowup.classify(catalog.sample_field(sol, spec))
        fam = out.best.family if out.best is not None else "none"
        err = _theta_error(sol, out.best) if fam == sol.family else np.inf
        good = fam == sol.family and err <= 2e-2
        ok += good
        worst = max(worst, err)
        rows.append({"true": json.dumps(sol.to_dict(), sort_keys=True), "class": out.energy_class,
                     "fit": fam, "phi0": out.phi0, "parameter_error": err, "ok": good})
    res.check("catalog fields classified correctly", f"{ok}/{count}", "all", ok == count)
    res.check("max parameter error", worst, "<= 2e-2", worst <= 2e-2)
    out = blowup.classify(ustar_solve(n).field)
    res.check("solved u* class", out.energy_class, "regular", out.energy_class == "regular")
    gap = abs(out.phi0 - PI81)
    res.check("solved u* |phi(0+) - pi/81|", gap, "<= 5e-3", gap <= 5e-3)
    rows.append({"true": "solved u*", "class": out.energy_class, "fit": out.best.family if out.best else "none",
                 "phi0": out.phi0, "parameter_error": abs(out.best_theta1 - np.pi / 6) if out.best else np.inf,
                 "ok": out.energy_class == "regular" and gap <= 5e-3})
    res.tables["classification"] = rows
    return res


def blend_alphas(count=8):
    """Blend offsets whose boundary distance to ``h0`` spans about ``[0.01, 0.1]``."""
    return np.linspace(0.02, 0.17, count)


@_timed
def claim_epiperimetric(n=256, seed=0):
    res = ClaimResult("epiperimetric", 7, "epiperimetric energy comparison", time_limit=300.0)
    h0 = catalog.h0()
    rng = np.random.default_rng(seed)
    fv = [abs(epicheck.first_variation(h0, epicheck.cone_direction(rng.normal(size=(4, 2)))))
          for _ in range(5)]
    res.check("max |first variation at h0|", max(fv), "<= 1e-3", max(fv) <= 1e-3)
    m = epicheck.homogeneous_M(solver.catalog_trace(h0, 1.2))
    err = abs(m - PI81 * 0.96)
    res.check("|M(1.2 h0) - 0.96 pi/81|", err, "<= 1e-6", err <= 1e-6)
    traces = [solver.catalog_trace(h0), solver.catalog_trace(h0, 1.2)] + epicheck.blend_family(blend_alphas())
    table = epicheck.kappa_sweep(traces, GridSpec(n))
    rows = []
    worst = -np.inf
    kappas = []
    for row in table.rows:
        rep = row.report
        worst = max(worst, rep.M_v - rep.M_c)
        if rep.kappa is not None:
            kappas.append(rep.kappa)
        rows.append(dict(index=row.index, **rep.row()))
    res.check("max M_v - M_c", worst, "<= 1e-7", worst <= 1e-7)
    blends = [r.report for r in table.rows[2:]]
    n_above = sum(r.M_c > PI81 for r in blends)
    kmin = min((r.kappa for r in blends if r.kappa is not None), default=np.nan)
    res.check("blends with M_c > pi/81", f"{n_above}/{len(blends)}", "all", n_above == len(blends))
    res.check("min kappa over blends", kmin, "> 0", kmin > 0)
    res.tables["sweep"] = rows
    return res


DECAY_DELTA = 0.5
DECAY_MODE = ("sin", 3)
SIGNAL_TO_NOISE = 10.0


@_timed
def claim_decay(n=512, seed=0):
    res = ClaimResult("decay-rates", 8, "energy decay and uniqueness rates", time_limit=180.0)
    spec = GridSpec(n)
    us = catalog.u_star()
    data = solver.perturbed_trace(us, DECAY_DELTA, DECAY_MODE[0], DECAY_MODE[1])
    centred = blowup.centre_free_boundary(spec, data, bracket=(1.0, 2.0))
    fld = centred.report.field
    radii = weiss.radius_ladder(spec)
    out = blowup.classify(fld, radii)
    res.check("perturbed field class", out.energy_class, "regular", out.energy_class == "regular")
    e = out.phi - PI81
    # the unperturbed solve at the same n measures the discretisation floor
    base = blowup.classify(ustar_solve(n).field, radii)
    e_noise = np.abs(base.phi - PI81)
    l1_noise = np.array([blowup.l1_distance(t, us) for t in base.traces])
    keep = (e > SIGNAL_TO_NOISE * e_noise) & (out.l1_distance > SIGNAL_TO_NOISE * l1_noise)
    dec, _, used = weiss.power_fit(radii[keep], e[keep], 0.0)
    uni = blowup.uniqueness_rate(out, floor=0.0, mask=keep)
    res.check("radii above noise floor", int(keep.sum()), ">= 4", keep.sum() >= 4)
    res.check("decay rate", dec, "> 0", dec is not None and dec > 0)
    res.check("uniqueness rate", uni.rate, "> 0", uni.rate is not None and uni.rate > 0)
    ratio = uni.rate / dec if dec and uni.rate else np.nan
    res.check("uniqueness / decay", ratio, "in [0.35, 0.65]", 0.35 <= ratio <= 0.65)
    res.tables["decay"] = [
        {"r": r, "e": a, "e_noise": b, "l1": c, "l1_noise": d, "used": bool(k)}
        for r, a, b, c, d, k in zip(radii, e, e_noise, out.l1_distance, l1_noise, keep)
    ]
    res.artifacts["scale"] = centred.scale
    return res


RHO_PI_3 = 8.0 * np.sqrt(3.0) / 81.0


@_timed
def claim_nondegeneracy(n=512, n_points=10_000, seed=0):
    res = ClaimResult("nondegeneracy", 9, "nondegeneracy and growth", time_limit=30.0)
    val = float(catalog.rho(np.pi / 3))
    res.check("rho(pi/3) vs 8 sqrt(3)/81", val, f"within 1e-12 of {RHO_PI_3:.15f}", abs(val - RHO_PI_3) <= 1e-12)
    c_star, arg = catalog.nondegeneracy_constant()
    res.check("C* = min rho", c_star, "in (0, rho(pi/3)]", 0 < c_star <= val)
    res.check("argmin of rho", arg, "inside (0, 2pi/3)", 0 < arg < 2 * np.pi / 3)
    rng = np.random.default_rng(seed)
    rad = np.sqrt(rng.uniform(0, 1, n_points))
    ang = rng.uniform(0, 2 * np.pi, n_points)
    lb = catalog.lower_bound_check(catalog.u_star(), rad * np.cos(ang), rad * np.sin(ang), c_star)
    res.check("lower bound on random points (min ratio)", lb.min_ratio, ">= 1 - 1e-12", lb.holds)
    fld = ustar_solve(n).field
    curve = freeboundary.extract(fld)
    pts = curve.branch("right")
    r = np.hypot(pts[:, 0], pts[:, 1])
    base_pts = np.vstack([[0.0, 0.0]] + [pts[np.argmin(np.abs(r - a))] for a in (0.05, 0.1, 0.2, 0.3)])
    radii = 0.4 / 2.0 ** np.arange(5)
    grow = freeboundary.growth_constants(fld, base_pts, radii)
    res.check("min measured growth constant", float(grow.lower.min()), "> 0", grow.positive)
    res.tables["growth"] = [{"r": r_, "lower": lo, "upper": up} for r_, lo, up in zip(radii, grow.lower, grow.upper)]
    return res


@_timed
def claim_directional(n=512, seed=0):
    res = ClaimResult("directional-monotonicity", 10, "directional monotonicity and cone inclusion", time_limit=30.0)
    wedge = freeboundary.directional_monotonicity_check(catalog.u_star())
    res.check("min (1/20) d_e u* - u* on the wedge", wedge.min_value, ">= -1e-6", wedge.min_value >= -1e-6)
    full = freeboundary.directional_monotonicity_check(catalog.u_star(), theta=(np.pi / 6, 5 * np.pi / 6))
    fld = ustar_solve(n).field
    curve = freeboundary.extract(fld)
    pts = curve.branch("right")
    r = np.hypot(pts[:, 0], pts[:, 1])
    rows = []
    held = 0
    for a in np.geomspace(0.06, 0.5, 10):
        x0 = pts[np.argmin(np.abs(r - a))]
        rep = freeboundary.cone_inclusion_check(fld, x0, curve=curve)
        held += rep.holds
        rows.append({"x1": x0[0], "x2": x0[1], "backward_max": rep.backward_max, "threshold": rep.threshold,
                     "forward_min": rep.forward_min, "holds": rep.holds})
    res.check("cone inclusion at free-boundary points", f"{held}/10", "all", held == 10)
    res.tables["cones"] = rows
    res.tables["full_cone"] = [{"min_value": full.min_value, "violations": int(full.violations.shape[0])}]
    return res


CLAIMS = {
    "thm1.2-energies": claim_energies,
    "catalog-residual": claim_catalog_residual,
    "solver-recovery": claim_solver_recovery,
    "thm1.4-corner": claim_corner,
    "weiss-monotonicity": claim_weiss,
    "classification": claim_classification,
    "epiperimetric": claim_epiperimetric,
    "decay-rates": claim_decay,
    "nondegeneracy": claim_nondegeneracy,
    "directional-monotonicity": claim_directional,
}


class UnknownClaim(KeyError):
    pass


def run(claim_id, seed=0):
    try:
        fn = CLAIMS[claim_id]
    except KeyError:
        raise UnknownClaim(claim_id) from None
    return fn(seed=seed)
