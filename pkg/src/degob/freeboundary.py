"""Free boundary extraction and geometry checks.

A node counts as positive when ``u > τ(x) = c_thr h^2 (h + |x|)``.  Crossings
are placed on grid edges between positive and non-positive nodes by
extrapolating ``sqrt(u)`` linearly from the positive side (the solution
vanishes quadratically across a regular free boundary).
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import catalog
from .catalog import CatalogSolution
from .grid import ScalarField

logger = logging.getLogger(__name__)

C_THR = 0.1
SLOPE = np.sqrt(3.0) / 3.0
E_STAR = np.array([-0.5, np.sqrt(3.0) / 2.0])


class ExtractionError(ValueError):
    pass


def threshold(spec, x=None, y=None, c_thr=C_THR):
    """Positivity threshold ``c_thr h^2 (h + |x|)`` at nodes or at points."""
    h = spec.h
    r = spec.radius if x is None else np.hypot(x, y)
    return c_thr * h * h * (h + r)


@dataclass
class FreeBoundaryCurve:
    points: np.ndarray
    side: np.ndarray
    normals: np.ndarray
    field: ScalarField = field(repr=False)
    c_thr: float = C_THR

    def __len__(self):
        return self.points.shape[0]

    def branch(self, name):
        return self.points[self.side == name]

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x1,x2,nx,ny,side\n")
            for (x, y), (nx, ny), s in zip(self.points, self.normals, self.side):
                fh.write(f"{x!r},{y!r},{nx!r},{ny!r},{s}\n")


def _edge_root(u_in, u_out, u_far):
    """Distance, in units of the edge length, from the positive node toward
    the non-positive one at which ``sqrt(u)`` extrapolates to zero.

    The non-positive node may still carry ``0 < u <= τ``, so the root may lie
    past it; it is capped at two edge lengths.
    """
    s0 = np.sqrt(u_in)
    if u_far is not None and u_far > u_in:
        t = s0 / (np.sqrt(u_far) - s0)
    elif 0.0 < u_out < u_in:
        t = s0 / (s0 - np.sqrt(u_out))
    else:
        t = 0.5
    return float(np.clip(t, 0.0, 2.0))


def extract(fld, c_thr=C_THR, near_origin=None):
    """Sub-grid points of ``∂{u > τ}`` with side tags and unit normals."""
    spec = fld.spec
    u = fld.values
    ins = spec.inside
    tau = threshold(spec, c_thr=c_thr)
    pos = ins & (u > tau)
    if not pos.any():
        raise ExtractionError("empty positive set")
    h = spec.h
    X, Y = spec.coords
    n1 = spec.n + 1
    pts = []
    for axis in (0, 1):
        for step in (1, -1):
            # positive node p, non-positive neighbour q = p + step*e_axis
            p_idx = np.argwhere(pos)
            q_idx = p_idx.copy()
            q_idx[:, axis] += step
            far = p_idx.copy()
            far[:, axis] -= step
            ok = (q_idx[:, axis] >= 0) & (q_idx[:, axis] < n1)
            p_idx, q_idx, far = p_idx[ok], q_idx[ok], far[ok]
            qi, qj = q_idx[:, 0], q_idx[:, 1]
            cross = ins[qi, qj] & ~pos[qi, qj]
            for (pi, pj), (qi_, qj_), (fi, fj) in zip(p_idx[cross], q_idx[cross], far[cross]):
                u_far = None
                if 0 <= fi < n1 and 0 <= fj < n1 and ins[fi, fj]:
                    u_far = u[fi, fj]
                t = _edge_root(u[pi, pj], u[qi_, qj_], u_far)
                pts.append((X[pi, pj] + t * (X[qi_, qj_] - X[pi, pj]),
                            Y[pi, pj] + t * (Y[qi_, qj_] - Y[pi, pj])))
    if not pts:
        raise ExtractionError("positive set has no interior free boundary")
    pts = np.unique(np.round(np.array(pts), 14), axis=0)
    order = np.lexsort((np.hypot(pts[:, 0], pts[:, 1]), np.arctan2(pts[:, 1], pts[:, 0])))
    pts = pts[order]
    if near_origin is None:
        near_origin = 2.0 * h
    r = np.hypot(pts[:, 0], pts[:, 1])
    side = np.where(r < near_origin, "near-origin", np.where(pts[:, 0] > 0, "right", "left"))
    normals = _normals(fld, pts)
    return FreeBoundaryCurve(pts, side, normals, fld, c_thr)


def _normals(fld, pts, k=5):
    """Unit normals from a least-squares line through the ``k`` nearest curve
    points, oriented toward larger ``u``."""
    spec = fld.spec
    out = np.zeros_like(pts)
    if pts.shape[0] < 2:
        return out
    k = min(k, pts.shape[0])
    rmax = spec.admissible_radius()
    eps = spec.h
    for idx, p in enumerate(pts):
        d = np.hypot(pts[:, 0] - p[0], pts[:, 1] - p[1])
        nb = pts[np.argsort(d)[:k]]
        c = nb - nb.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        tangent = vt[0]
        nrm = np.array([-tangent[1], tangent[0]])
        a, b = p + eps * nrm, p - eps * nrm
        if np.hypot(*a) <= rmax and np.hypot(*b) <= rmax:
            if fld.interp(a[0], a[1]) < fld.interp(b[0], b[1]):
                nrm = -nrm
        out[idx] = nrm
    return out


def hausdorff_to_rays(curve, angles, rmin=0.0, rmax=None, samples=2000):
    """Two-sided Hausdorff distance between curve points with ``rmin <= |x| <= rmax``
    and the ray segments at ``angles`` over the same radial range."""
    pts = curve.points
    r = np.hypot(pts[:, 0], pts[:, 1])
    if rmax is None:
        rmax = curve.field.spec.admissible_radius()
    use = (r >= rmin) & (r <= rmax)
    pts = pts[use]
    if pts.shape[0] == 0:
        return np.inf
    d_curve = np.full(pts.shape[0], np.inf)
    ray_pts = []
    for a in angles:
        e = np.array([np.cos(a), np.sin(a)])
        t = np.clip(pts @ e, rmin, rmax)
        d = np.hypot(pts[:, 0] - t * e[0], pts[:, 1] - t * e[1])
        d_curve = np.minimum(d_curve, d)
        s = np.linspace(rmin, rmax, samples)
        ray_pts.append(s[:, None] * e[None, :])
    ray_pts = np.vstack(ray_pts)
    d_ray = np.array([np.min(np.hypot(pts[:, 0] - q[0], pts[:, 1] - q[1])) for q in ray_pts])
    return float(max(d_curve.max(), d_ray.max()))


# -- graph fit ---------------------------------------------------------------


@dataclass
class GraphFit:
    x1: np.ndarray
    g: np.ndarray
    gprime: np.ndarray
    slope_error_right: np.ndarray
    slope_error_left: np.ndarray
    opening_angle: float
    rho: float
    unique: bool
    crossings: np.ndarray
    ray_slopes: tuple
    lipschitz: float

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x1,g,gprime,slope_err\n")
            for x, g, gp in zip(self.x1, self.g, self.gprime):
                err = abs(gp - SLOPE) if x > 0 else abs(gp + SLOPE)
                fh.write(f"{x!r},{g!r},{gp!r},{err!r}\n")

    def slope_errors(self, lo, hi):
        """Per-side slope errors for ``lo < |x1| < hi``."""
        right = (self.x1 > lo) & (self.x1 < hi)
        left = (self.x1 < -lo) & (self.x1 > -hi)
        return self.slope_error_right[right], self.slope_error_left[left]


def slice_crossings(fld, x1, lo, hi, c_thr=C_THR):
    """Positions along ``x = x1`` where ``u`` becomes positive going upward.

    ``u`` is sampled at the grid rows ``lo <= x2 <= hi``; each upward crossing
    is refined by fitting ``sqrt(u)`` through the first three positive samples
    and extrapolating to zero (at most ``2h`` below the first positive sample).
    """
    spec = fld.spec
    h = spec.h
    ys = spec.axis[(spec.axis >= lo - 1e-12) & (spec.axis <= hi + 1e-12)]
    xs = np.full_like(ys, x1)
    rmax = spec.admissible_radius()
    keep = xs * xs + ys * ys <= rmax * rmax
    xs, ys = xs[keep], ys[keep]
    u = fld.interp(xs, ys)
    pos = u > threshold(spec, xs, ys, c_thr)
    starts = np.nonzero(pos[1:] & ~pos[:-1])[0] + 1
    roots = []
    for k in starts:
        sel = np.arange(k, min(k + 3, ys.size))
        sel = sel[pos[sel]]
        if sel.size >= 2:
            slope, icpt = np.polyfit(ys[sel], np.sqrt(u[sel]), 1)
            y0 = -icpt / slope if slope > 0 else ys[k]
            roots.append(float(np.clip(y0, ys[k] - 2 * h, ys[k])))
        else:
            roots.append(float(ys[k]))
    n_down = int(np.count_nonzero(pos[:-1] & ~pos[1:]))
    return np.array(roots), n_down


def graph_fit(curve, rho=None, x1_step=None, c_thr=None):
    """Free boundary as a graph ``x2 = g(x1)`` over ``0 < |x1| < rho/4``.

    Slices sit on grid columns.  Every slice must cross exactly once from
    zero (below) to positive (above).  With ``rho=None`` the largest dyadic
    ``rho <= 1/2`` passing that test is used.
    """
    fld = curve.field
    c_thr = curve.c_thr if c_thr is None else c_thr
    h = fld.spec.h
    x1_step = x1_step or h
    candidates = [rho] if rho is not None else [0.5 / 2**k for k in range(8) if 0.5 / 2**k >= 8 * h]
    last = None
    for rr in candidates:
        half = rr / 4.0
        xs = np.arange(x1_step, half, x1_step)
        xs = np.concatenate([-xs[::-1], xs])
        gs = np.empty_like(xs)
        counts = np.empty(xs.size, dtype=int)
        for k, x in enumerate(xs):
            roots, n_down = slice_crossings(fld, x, -rr, rr, c_thr)
            counts[k] = roots.size + n_down
            gs[k] = roots[0] if roots.size == 1 else np.nan
        unique = bool(np.all(counts == 1))
        last = (rr, xs, gs, counts, unique)
        if unique:
            break
    rr, xs, gs, counts, unique = last
    if not unique:
        logger.warning("slice uniqueness failed for every candidate rho; last rho=%g", rr)
    gp = _piecewise_gradient(xs, gs)
    err_r = np.where(xs > 0, np.abs(gp - SLOPE), np.nan)
    err_l = np.where(xs < 0, np.abs(gp + SLOPE), np.nan)
    right, left = xs > 0, xs < 0
    m_r = _slope_through_origin(xs[right], gs[right])
    m_l = _slope_through_origin(xs[left], gs[left])
    ang_r = np.arctan2(m_r, 1.0)
    ang_l = np.arctan2(-m_l, -1.0)
    opening = float(np.mod(ang_l - ang_r, 2 * np.pi))
    good = np.isfinite(gs)
    lip = float(np.nanmax(np.abs(np.diff(gs[good]) / np.diff(xs[good])))) if good.sum() > 1 else np.nan
    return GraphFit(xs, gs, gp, err_r, err_l, opening, rr, unique, counts, (m_r, m_l), lip)


def _piecewise_gradient(xs, gs):
    """Centred differences within each sign of ``x1`` (one-sided at ends)."""
    out = np.full_like(gs, np.nan)
    for sel in (xs < 0, xs > 0):
        if sel.sum() >= 2:
            out[sel] = np.gradient(gs[sel], xs[sel])
    return out


def _slope_through_origin(x, g):
    ok = np.isfinite(g)
    x, g = x[ok], g[ok]
    if x.size == 0:
        return np.nan
    return float(np.dot(x, g) / np.dot(x, x))


# -- proximity and cone checks -----------------------------------------------


def sup_distance(fld, r, profile, nr=64, ntheta=256):
    """``sup_{B1} |u(r y)/r^3 − u0(y)|`` on a polar sample of the unit disk."""
    rad = np.linspace(0.0, 1.0, nr)
    th = 2 * np.pi * np.arange(ntheta) / ntheta
    R, T = np.meshgrid(rad, th, indexing="ij")
    x, y = R * np.cos(T), R * np.sin(T)
    ur = fld.interp(r * x, r * y) / r**3
    return float(np.max(np.abs(ur - catalog.evaluate(profile, x, y))))


@dataclass
class ProximityReport:
    points: np.ndarray
    distance: np.ndarray
    norm: np.ndarray
    ratio: np.ndarray
    max_distance: float
    max_ratio: float


def proximity_check(fld, curve, profile=None, rmin=None, rmax=None):
    """``d(x0, Γ_{u0}) / (|x0| ‖u_{4|x0|} − u0‖^{1/3})`` over curve points with
    ``rmin <= |x0| <= rmax`` (default ``4h`` to a quarter of the interpolation range)."""
    spec = fld.spec
    profile = profile or catalog.u_star()
    rmin = 4 * spec.h if rmin is None else rmin
    rmax = spec.admissible_radius() / 4.0 if rmax is None else rmax
    pts = curve.points
    r = np.hypot(pts[:, 0], pts[:, 1])
    sel = (r >= rmin) & (r <= rmax)
    pts, r = pts[sel], r[sel]
    d = catalog.distance_to_free_boundary(profile, pts[:, 0], pts[:, 1])
    norms = np.array([sup_distance(fld, 4 * rr, profile) for rr in r])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(norms > 0, d / (r * np.cbrt(norms)), np.where(d > 0, np.inf, 0.0))
    return ProximityReport(
        pts, d, norms, ratio,
        float(d.max()) if d.size else 0.0,
        float(ratio.max()) if ratio.size else 0.0,
    )


@dataclass
class MonotonicityReport:
    min_value: float
    n_points: int
    violations: np.ndarray

    @property
    def holds(self):
        return self.violations.shape[0] == 0


def directional_monotonicity_check(source, e=E_STAR, c0=1.0 / 20.0, theta=(np.pi / 6, np.pi / 6 + 0.05),
                                   radius=(0.1, 1.0), tol=1e-6, n=None, nr=200, ntheta=200):
    """Evaluate ``c0 ∂_e u − u`` over the polar region ``theta × radius``.

    ``source`` is a :class:`CatalogSolution` (exact gradient on an
    ``nr × ntheta`` polar sample of the open region) or a :class:`ScalarField`
    (centred differences at the grid nodes inside the region).
    """
    e = np.asarray(e, dtype=float)
    e = e / np.hypot(*e)
    if isinstance(source, CatalogSolution):
        rr = np.linspace(radius[0], radius[1], nr + 2)[1:-1]
        tt = np.linspace(theta[0], theta[1], ntheta + 2)[1:-1]
        R, T = np.meshgrid(rr, tt, indexing="ij")
        x, y = (R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()
        val = c0 * catalog.directional_derivative(source, x, y, e) - catalog.evaluate(source, x, y)
    else:
        spec = source.spec
        X, Y = spec.coords
        r = spec.radius
        phi = np.mod(np.arctan2(Y, X) - theta[0], 2 * np.pi)
        sel = (r > radius[0]) & (r < min(radius[1], spec.admissible_radius())) & (phi > 0) \
            & (phi < theta[1] - theta[0]) & spec.interior
        gx, gy = source.gradient()
        x, y = X[sel], Y[sel]
        val = c0 * (e[0] * gx[sel] + e[1] * gy[sel]) - source.values[sel]
    bad = val < -tol
    return MonotonicityReport(
        float(val.min()) if val.size else 0.0,
        int(val.size),
        np.column_stack([x[bad], y[bad], val[bad]]),
    )


@dataclass
class ConeReport:
    x0: np.ndarray
    backward_max: float
    forward_min: float
    threshold: float

    @property
    def holds(self):
        return self.backward_max <= self.threshold and self.forward_min > 0.0


def cone_inclusion_check(fld, x0, delta=0.5, r=None, e=E_STAR, nt=24, nang=15, t_min=None,
                         curve=None, c_thr=C_THR):
    """Sample ``x0 ∓ t d`` for directions ``d`` strictly inside
    ``C_δ = {d·e > δ|d|}`` and ``t_min <= t <= r``.

    The backward cone should lie in the zero set (``u <= τ``), the forward
    cone in the positive set.  With ``curve`` given, ``x0`` must be within
    ``h`` of one of its points.
    """
    spec = fld.spec
    x0 = np.asarray(x0, dtype=float)
    if curve is not None:
        d = np.min(np.hypot(curve.points[:, 0] - x0[0], curve.points[:, 1] - x0[1]))
        if d > spec.h:
            raise ValueError("x0 is not on the extracted free boundary")
    e = np.asarray(e, dtype=float)
    e = e / np.hypot(*e)
    r = 0.5 * np.hypot(*x0) if r is None else r
    t_min = 3 * spec.h if t_min is None else t_min
    if t_min >= r:
        raise ValueError(f"cone radius {r:.4g} must exceed t_min {t_min:.4g}")
    half = np.arccos(delta)
    base = np.arctan2(e[1], e[0])
    angles = base + np.linspace(-half, half, nang + 2)[1:-1]
    ts = np.linspace(t_min, r, nt)
    T, A = np.meshgrid(ts, angles, indexing="ij")
    dx, dy = (T * np.cos(A)).ravel(), (T * np.sin(A)).ravel()
    fwd = fld.interp(x0[0] + dx, x0[1] + dy)
    bx, by = x0[0] - dx, x0[1] - dy
    bwd = fld.interp(bx, by)
    tau = threshold(spec, bx, by, c_thr)
    excess = bwd - tau
    worst = int(np.argmax(excess))
    return ConeReport(x0, float(bwd[worst]), float(fwd.min()), float(tau[worst]))


# -- growth away from the free boundary --------------------------------------


@dataclass
class GrowthReport:
    radii: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    n_points: int

    @property
    def positive(self):
        return bool(np.all(self.lower > 0.0))


def growth_constants(fld, points, radii, ntheta=256, nr=16):
    """Per radius, the smallest ``(sup_{∂B_r(x0)} u − u(x0)) / (r^2 (r + |x0|))``
    and the largest ``sup_{B_{r/2}(x0)} u / (u(x0) + r^2 (r + |x0|))`` over the
    base points ``x0``.  Discs must stay inside the interpolation range."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    radii = np.asarray(radii, dtype=float)
    rmax = fld.spec.admissible_radius()
    th = 2 * np.pi * np.arange(ntheta) / ntheta
    c, s = np.cos(th), np.sin(th)
    rho = np.linspace(0.0, 0.5, nr)
    lower = np.full(radii.size, np.inf)
    upper = np.zeros(radii.size)
    for k, r in enumerate(radii):
        for x0 in pts:
            a = np.hypot(*x0)
            if a + r > rmax:
                continue
            u0 = float(fld.interp(np.array([x0[0]]), np.array([x0[1]]))[0])
            scale = r * r * (r + a)
            ring = fld.interp(x0[0] + r * c, x0[1] + r * s)
            lower[k] = min(lower[k], (ring.max() - u0) / scale)
            disc = fld.interp(x0[0] + r * np.outer(rho, c), x0[1] + r * np.outer(rho, s))
            upper[k] = max(upper[k], disc.max() / (max(u0, 0.0) + scale))
    return GrowthReport(radii, lower, upper, pts.shape[0])
