"""Blow-up rescalings ``u_{x0,r}(x) = u(x0 + r x)/r^3``, classification of the
blow-up against the catalog, and the decay rate of ``∮|u_r − u0|``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from . import catalog, solver, weiss
from .catalog import CONE_WIDTH, TWO_PI, CatalogSolution
from .grid import GridSpec, PolarTrace, ScalarField

logger = logging.getLogger(__name__)

ENERGY_BAND = np.pi / 243.0
CLASS_LEVELS = (
    ("regular", np.pi / 81.0),
    ("double_cone", 2.0 * np.pi / 81.0),
    ("triple_or_full", np.pi / 27.0),
)
FIT_NTHETA = 1024
FIT_GRID = 720
MISMATCH_REL = 0.05
# three touching cones tile the circle with trace (1 - cos 3(θ-θ1))/9, the
# |(a, b)| = 1/9 edge of the full-support family; fits this close to the edge
# are read as triple cones
TRIPLE_RADIUS = (1.0 / 9.0) * (1.0 - 5e-3)


def rescale(fld, x0=(0.0, 0.0), r=0.5, n=None, label=None):
    """Field on a fresh unit-disk grid with values ``u(x0 + r x)/r^3``."""
    x0 = np.asarray(x0, dtype=float)
    reach = np.hypot(*x0) + r
    if r <= 0 or reach > fld.spec.admissible_radius() + 1e-12:
        raise ValueError(
            f"B_r(x0) with |x0| + r = {reach:.4g} leaves the interpolation range "
            f"{fld.spec.admissible_radius():.4g}"
        )
    spec = GridSpec(n or fld.spec.n)
    X, Y = spec.coords
    vals = np.zeros(X.shape)
    ins = spec.inside
    vals[ins] = fld.interp(x0[0] + r * X[ins], x0[1] + r * Y[ins]) / r**3
    return ScalarField(spec, vals, label or f"{fld.label}@({x0[0]:g},{x0[1]:g})/{r:g}")


def scaled_trace(fld, r, ntheta=FIT_NTHETA):
    """Trace of ``u_r`` on the unit circle."""
    theta = TWO_PI * np.arange(ntheta) / ntheta
    vals = fld.interp(r * np.cos(theta), r * np.sin(theta)) / r**3
    return PolarTrace(1.0, vals)


def energy_class(phi0, band=ENERGY_BAND):
    for name, level in CLASS_LEVELS:
        if abs(phi0 - level) <= band:
            return name
    return "unclassified"


# -- parameter fits ----------------------------------------------------------


def _l2(trace, values):
    d = trace.values - values
    return float(np.sum(d * d) * TWO_PI / trace.ntheta)


@dataclass
class ProfileFit:
    solution: CatalogSolution
    residual: float
    relative: float
    coefficient_radius: Optional[float] = None


def _relative(trace, resid):
    norm = float(np.sum(trace.values**2) * TWO_PI / trace.ntheta)
    return float(np.sqrt(resid / norm)) if norm > 0 else np.inf


def _cone_scores(trace, ngrid):
    """``a_k = ||C_k||^2 − 2<g, C_k>`` for cone traces with bases on a grid.
    Disjoint cones are orthogonal, so a multi-cone distance is ``||g||^2 + Σ a_k``."""
    bases = TWO_PI * np.arange(ngrid) / ngrid
    theta = trace.theta
    phi = np.mod(theta[None, :] - bases[:, None], TWO_PI)
    cones = np.where(phi < CONE_WIDTH, (1.0 - np.cos(3 * phi)) / 9.0, 0.0)
    w = TWO_PI / trace.ntheta
    return bases, w * (np.sum(cones * cones, axis=1) - 2.0 * cones @ trace.values)


def fit_single_cone(trace, ngrid=FIT_GRID):
    bases, a = _cone_scores(trace, ngrid)
    k = int(np.argmin(a))
    step = TWO_PI / ngrid

    def obj(t):
        return _l2(trace, catalog.single_cone(t).trace(trace.theta))

    res = minimize_scalar(obj, bounds=(bases[k] - step, bases[k] + step), method="bounded",
                          options={"xatol": 1e-9})
    sol = catalog.single_cone(res.x)
    return ProfileFit(sol, float(res.fun), _relative(trace, float(res.fun)))


def fit_triple_cone(trace, ngrid=FIT_GRID):
    ngrid -= ngrid % 3
    _, a = _cone_scores(trace, ngrid)
    third = ngrid // 3
    total = a[:third] + a[third:2 * third] + a[2 * third:]
    k = int(np.argmin(total))
    step = TWO_PI / ngrid
    t0 = TWO_PI * k / ngrid

    def obj(t):
        return _l2(trace, CatalogSolution("triple_cone", t).trace(trace.theta))

    res = minimize_scalar(obj, bounds=(t0 - step, t0 + step), method="bounded", options={"xatol": 1e-9})
    sol = CatalogSolution("triple_cone", res.x)
    return ProfileFit(sol, float(res.fun), _relative(trace, float(res.fun)))


def fit_double_cone(trace, ngrid=FIT_GRID):
    ngrid -= ngrid % 3
    _, a = _cone_scores(trace, ngrid)
    third = ngrid // 3
    best = (np.inf, 0, 1)
    # second base sits at theta1 + 2π/3 + σ with σ in (0, 2π/3]
    for s in range(1, third + 1):
        total = a + np.roll(a, -(third + s))
        k = int(np.argmin(total))
        if total[k] < best[0]:
            best = (float(total[k]), k, s)
    step = TWO_PI / ngrid
    t0, s0 = best[1] * step, best[2] * step

    def obj(p):
        t, s = p
        s = float(np.clip(s, 1e-9, CONE_WIDTH))
        return _l2(trace, CatalogSolution("double_cone", t, s).trace(trace.theta))

    res = minimize(obj, x0=[t0, s0], method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": 1e-16, "maxiter": 2000})
    t, s = res.x
    s = float(np.clip(s, 1e-9, CONE_WIDTH))
    sol = CatalogSolution("double_cone", t, s)
    resid = _l2(trace, sol.trace(trace.theta))
    return ProfileFit(sol, resid, _relative(trace, resid))


def fit_full_support(trace):
    """Linear least squares of ``g − 1/9`` on ``cos 3θ, sin 3θ``; the
    coefficients are shrunk onto the admissible disk if needed."""
    th = trace.theta
    A = np.column_stack([np.cos(3 * th), np.sin(3 * th)])
    (ca, cb), *_ = np.linalg.lstsq(A, trace.values - 1.0 / 9.0, rcond=None)
    rho = np.hypot(ca, cb)
    limit = 1.0 / 9.0 - 1e-12
    if rho >= limit:
        ca, cb = ca * limit / rho, cb * limit / rho
    sol = CatalogSolution("full_support", a=float(ca), b=float(cb))
    resid = _l2(trace, sol.trace(th))
    return ProfileFit(sol, resid, _relative(trace, resid), float(rho))


def fit_profile(trace, cls):
    if cls == "regular":
        return fit_single_cone(trace)
    if cls == "double_cone":
        return fit_double_cone(trace)
    if cls == "triple_or_full":
        full = fit_full_support(trace)
        if full.coefficient_radius < TRIPLE_RADIUS:
            return full
        return fit_triple_cone(trace)
    raise ValueError(f"no catalog family for class {cls!r}")


# -- classification ----------------------------------------------------------


@dataclass
class BlowupResult:
    radii: np.ndarray
    phi: np.ndarray
    phi0: float
    energy_class: str
    best: Optional[CatalogSolution]
    fit_relative: float
    l1_distance: np.ndarray
    homogeneity_defect: np.ndarray
    traces: list = field(repr=False, default_factory=list)
    flags: list = field(default_factory=list)
    noise_floor: Optional[np.ndarray] = None

    @property
    def best_theta1(self):
        if self.best is None or self.best.family == "full_support":
            return None
        return self.best.theta1

    def to_dict(self):
        rate = uniqueness_rate(self)
        return {
            "class": self.energy_class,
            "phi0": self.phi0,
            "profile": None if self.best is None else self.best.to_dict(),
            "fit_relative_l2": self.fit_relative,
            "flags": list(self.flags),
            "uniqueness_rate": rate.label,
            "radii": [
                {"r": float(r), "phi": float(p), "l1": float(d), "defect": float(q)}
                for r, p, d, q in zip(self.radii, self.phi, self.l1_distance, self.homogeneity_defect)
            ],
        }


def origin_threshold(spec):
    return 0.1 * spec.h**3


def check_origin(fld):
    """The origin must be a free boundary point: ``u(0)`` below the positivity
    threshold with positive values within ``4h``."""
    spec = fld.spec
    c = spec.n // 2
    if spec.n % 2 or abs(fld.values[c, c]) > origin_threshold(spec):
        return False
    tau = 0.1 * spec.h**2 * (spec.h + spec.radius)
    near = spec.radius <= 4.0 * spec.h + 1e-12
    return bool(np.any(fld.values[near] > tau[near]))


def l1_distance(trace, sol):
    return float(np.sum(np.abs(trace.values - sol.trace(trace.theta))) * TWO_PI / trace.ntheta)


def classify(fld, radii=None, fit_radius=None, ntheta=FIT_NTHETA, require_origin=True,
             phi_ntheta=weiss.DEFAULT_NTHETA):
    """Energy class from ``Φ(0+)``, best catalog profile, and per-radius distances."""
    if require_origin and not check_origin(fld):
        raise ValueError("the origin is not a free boundary point of this field")
    spec = fld.spec
    if radii is None:
        radii = weiss.radius_ladder(spec)
    radii = np.sort(np.asarray(radii, dtype=float))[::-1]
    phis = np.array([weiss.phi(fld, r, phi_ntheta) for r in radii])
    est = weiss.phi0_estimate(radii, phis)
    cls = energy_class(est.value)
    flags = [] if est.monotone else ["non-monotone phi"]
    traces = [scaled_trace(fld, r, ntheta) for r in radii]
    defects = np.array([weiss.homogeneity_defect(fld, r, ntheta) for r in radii])
    best = None
    rel = np.nan
    l1 = np.full(radii.size, np.nan)
    if cls == "unclassified":
        flags.append("unclassified energy")
    else:
        ref = traces[-1] if fit_radius is None else scaled_trace(fld, fit_radius, ntheta)
        fit = fit_profile(ref, cls)
        best, rel = fit.solution, fit.relative
        if rel > MISMATCH_REL:
            flags.append("profile mismatch")
        l1 = np.array([l1_distance(t, best) for t in traces])
    return BlowupResult(radii, phis, est.value, cls, best, rel, l1, defects, traces, flags)


@dataclass
class RateFit:
    rate: Optional[float]
    constant: Optional[float]
    used: int

    @property
    def saturated(self):
        return self.rate is None

    @property
    def label(self):
        return "saturated" if self.rate is None else f"{self.rate:.6g}"


def uniqueness_rate(result, floor=1e-6, mask=None):
    """Log-log slope of the per-radius ``∮|u_r − u0|`` above ``floor``
    (optionally restricted to ``mask``)."""
    radii = np.asarray(result.radii)
    vals = np.asarray(result.l1_distance, dtype=float)
    if mask is not None:
        vals = np.where(mask, vals, -np.inf)
    floor_arr = floor if result.noise_floor is None else np.maximum(floor, result.noise_floor)
    keep = vals > floor_arr
    rate, const, used = weiss.power_fit(radii[keep], vals[keep], 0.0)
    return RateFit(rate, const, used)


# -- data with a free boundary point at the origin ---------------------------


def axis_crossing(fld, angle=np.pi / 2, window=8):
    """Where the free boundary crosses the line through 0 in direction ``angle``.

    Walks outward along the line from ``-1/2`` and fits ``u^{1/3}`` linearly over
    ``window`` samples starting at the first positive one (``u`` grows
    cubically along the axis of a degenerate corner).
    """
    spec = fld.spec
    h = spec.h
    e = np.array([np.cos(angle), np.sin(angle)])
    s = np.arange(-0.5, 0.5, h)
    pts = s[:, None] * e[None, :]
    u = fld.interp(pts[:, 0], pts[:, 1])
    tau = 0.1 * h * h * (h + np.abs(s))
    pos = np.nonzero(u > tau)[0]
    if pos.size == 0:
        raise ValueError("no positive values along the axis")
    j = int(pos[0])
    sel = np.arange(j, min(j + window, s.size))
    k, c = np.polyfit(s[sel], np.cbrt(u[sel]), 1)
    return float(-c / k)


@dataclass
class CentredSolve:
    scale: float
    report: solver.SolveReport
    crossing: float
    solves: int


def centre_free_boundary(spec, trace, bracket=(0.5, 1.5), angle=np.pi / 2, tol=solver.DEFAULT_TOL,
                         xtol=1e-10, max_iter=solver.DEFAULT_MAX_ITER):
    """Scale Dirichlet data ``λ g`` so the free boundary passes through 0.

    By comparison the positive set grows with ``λ``, so the axis crossing is
    monotone and ``λ`` is found with Brent's method; each solve starts from the
    previous solution.
    """
    state = {"u": "extension", "rep": None, "count": 0}

    def crossing(lam):
        p = solver.DirichletProblem(spec, trace.scaled(lam))
        rep = solver.solve_obstacle(p, tol=tol, max_iter=max_iter, initial=state["u"])
        if not rep.converged:
            raise solver.SolverError(f"solve at scale {lam} did not converge ({rep.status})")
        state["u"] = rep.field.values
        state["rep"] = rep
        state["count"] += 1
        try:
            return axis_crossing(rep.field, angle)
        except ValueError:
            # no positive set on the sampled segment: the crossing lies beyond it
            return 0.5

    lam = brentq(crossing, *bracket, xtol=xtol)
    y = crossing(lam)
    return CentredSolve(lam, state["rep"], y, state["count"])
