"""Complementarity solvers on the disk grid.

``obstacle``  minimises ``∫ ½|∇v|² + |x| v`` over ``v >= 0`` (the obstacle problem
``Δu = |x| χ{u>0}``) by projected SOR.

``signed``    minimises ``∫ |∇v|² + 2|x| v⁺`` with no sign constraint by a
sign-aware relaxation: each node moves to the exact one-dimensional minimiser
of the nonsmooth objective, over-relaxed only while it stays on one side of 0.

Dirichlet values live on the boundary band.  They are the degree-3 homogeneous
extension ``|x|^3 g(θ)`` of the trace ``g``, which coincides with the boundary
data on the unit circle and is exact for every catalog profile.
"""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import catalog, kernels
from .grid import GridSpec, PolarTrace, ScalarField, boundary_integral, bulk_integral, laplacian_array

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200_000
CHECK_EVERY = 10
BESSEL_J0_ZERO = 2.404825557695773

VARIANTS = ("obstacle", "signed")


class SolverError(RuntimeError):
    pass


# -- boundary data -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trace:
    """Boundary data ``g(θ)`` on the unit circle."""

    fn: Callable
    label: str = ""

    def __call__(self, theta):
        return np.asarray(self.fn(np.asarray(theta, dtype=float)), dtype=float)

    def sample(self, ntheta=4096):
        theta = 2.0 * np.pi * np.arange(ntheta) / ntheta
        return PolarTrace(1.0, self(theta))

    def scaled(self, s):
        return Trace(lambda t: s * self.fn(t), f"{s:g}*({self.label})")


def catalog_trace(sol, scale=1.0):
    label = json.dumps(sol.to_dict(), sort_keys=True)
    if scale != 1.0:
        label = f"{scale:g}*{label}"
    return Trace(lambda t: scale * sol.trace(t), label)


def zero_trace():
    return Trace(lambda t: np.zeros_like(t), "zero")


def polar_trace_data(trace):
    """Boundary data from tabulated samples (periodic linear interpolation)."""
    return Trace(trace, f"tabulated[{trace.ntheta}]")


def perturbed_trace(sol, delta, mode="sin", k=1):
    """``g(θ) (1 + δ·mode(kθ))`` for a catalog trace ``g``."""
    wave = {"sin": np.sin, "cos": np.cos}[mode]
    return Trace(
        lambda t: sol.trace(t) * (1.0 + delta * wave(k * t)),
        f"{json.dumps(sol.to_dict(), sort_keys=True)}*(1+{delta:g}*{mode}({k}θ))",
    )


def blended_trace(first, second):
    """Pointwise maximum of two catalog traces."""
    return Trace(
        lambda t: np.maximum(first.trace(t), second.trace(t)),
        f"max({json.dumps(first.to_dict())},{json.dumps(second.to_dict())})",
    )


def read_trace_file(path):
    """CSV with columns ``theta,value`` on a uniform periodic grid (header optional)."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line[0].isalpha():
                continue
            rows.append([float(t) for t in line.split(",")])
    arr = np.array(rows)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns theta,value")
    return PolarTrace(1.0, arr[:, 1])


def trace_from_dict(d):
    """Boundary descriptor from config JSON."""
    kind = d.get("type")
    if kind == "catalog":
        return catalog_trace(catalog.CatalogSolution.from_dict(d["catalog"]))
    if kind == "scaled_catalog":
        return catalog_trace(catalog.CatalogSolution.from_dict(d["catalog"]), float(d["scale"]))
    if kind == "perturbed":
        return perturbed_trace(
            catalog.CatalogSolution.from_dict(d["catalog"]),
            float(d["delta"]),
            d.get("mode", "sin"),
            int(d.get("k", 1)),
        )
    if kind == "blend":
        return blended_trace(
            catalog.CatalogSolution.from_dict(d["first"]),
            catalog.CatalogSolution.from_dict(d["second"]),
        )
    if kind == "tabulated":
        return polar_trace_data(PolarTrace(1.0, np.asarray(d["values"], dtype=float)))
    if kind == "trace_file":
        return polar_trace_data(read_trace_file(d["path"]))
    if kind == "zero":
        return zero_trace()
    raise ValueError(f"unknown boundary type {kind!r}")


# -- problem and report ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DirichletProblem:
    spec: GridSpec
    boundary: Trace
    variant: str = "obstacle"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.variant == "obstacle":
            g = self.boundary.sample(4096).values
            if g.min() < -1e-14:
                raise ValueError("obstacle variant needs nonnegative boundary data")

    @property
    def forcing(self):
        return np.array(self.spec.radius)

    def extension(self):
        """Degree-3 homogeneous extension ``|x|^3 g(θ)`` at all nodes inside the disk."""
        X, Y = self.spec.coords
        r = self.spec.radius
        vals = np.zeros(r.shape)
        ins = self.spec.inside
        vals[ins] = r[ins] ** 3 * self.boundary(np.arctan2(Y[ins], X[ins]))
        return vals

    def boundary_term(self, ntheta=4096):
        """``-3 ∮ g^2`` over the unit circle (constant for fixed data)."""
        return -3.0 * boundary_integral(self.boundary.sample(ntheta), lambda t, v: v * v)


@dataclass(frozen=True, eq=False)
class SolveReport:
    field: ScalarField
    iterations: int
    residual: float
    converged: bool
    energy: float
    objective: float
    status: str
    variant: str
    omega: float
    tol: float
    seconds: float = 0.0
    history: Optional[np.ndarray] = None
    _f: np.ndarray = field(default=None, repr=False)


def optimal_omega(n):
    """SOR factor for the 5-point Laplacian on the unit disk,
    ``2/(1 + sqrt(1 - ρ_J^2))`` with ``ρ_J = 1 - h^2 j_{0,1}^2 / 4``."""
    h = 2.0 / n
    rho = 1.0 - h * h * BESSEL_J0_ZERO**2 / 4.0
    return 2.0 / (1.0 + np.sqrt(max(1.0 - rho * rho, 0.0)))


def discrete_objective(spec, values, variant, f=None):
    """Discrete energy minimised by the sweeps.

    Edge term: sum of squared differences over grid edges with at least one
    interior endpoint.  ``signed``: edges + ``Σ 2h^2|x|v⁺``; ``obstacle``:
    ``½`` edges + ``Σ h^2|x|v``, both over interior nodes.
    """
    if f is None:
        f = spec.radius
    u = values
    inter = spec.interior
    h2 = spec.h**2
    edges = 0.0
    for axis in (0, 1):
        a = [slice(None)] * 2
        b = [slice(None)] * 2
        a[axis] = slice(1, None)
        b[axis] = slice(None, -1)
        a, b = tuple(a), tuple(b)
        use = inter[a] | inter[b]
        edges += float(np.sum(((u[a] - u[b]) ** 2)[use]))
    if variant == "signed":
        return edges + 2.0 * h2 * float(np.sum((f * np.maximum(u, 0.0))[inter]))
    return 0.5 * edges + h2 * float(np.sum((f * u)[inter]))


def field_energy(fld, variant="signed", boundary_term=None):
    """Quadrature energy of a grid field.

    ``signed``: ``M(v) = ∫ |∇v|² + 2|x|v⁺ − 3∮v²`` (boundary term from the
    field unless given); ``obstacle``: ``∫ ½|∇v|² + |x| v``.
    """
    spec = fld.spec
    gx, gy = fld.gradient()
    g2 = gx * gx + gy * gy
    u = fld.values
    r = spec.radius
    if variant == "obstacle":
        return bulk_integral(spec, 0.5 * g2 + r * u)
    bulk = bulk_integral(spec, g2 + 2.0 * r * np.maximum(u, 0.0))
    if boundary_term is None:
        theta = 2.0 * np.pi * np.arange(4096) / 4096
        rr = spec.admissible_radius()
        vals = fld.interp(rr * np.cos(theta), rr * np.sin(theta)) / rr**3
        boundary_term = -3.0 * boundary_integral(PolarTrace(1.0, vals), lambda t, v: v * v)
    return bulk + boundary_term


def _initial(problem, initial):
    ext = problem.extension()
    if isinstance(initial, np.ndarray):
        u = np.array(initial, dtype=float)
        u[problem.spec.band] = ext[problem.spec.band]
    elif initial == "extension":
        u = ext
    elif initial == "zero":
        u = np.where(problem.spec.band, ext, 0.0)
    else:
        raise ValueError(f"unknown initial guess {initial!r}")
    u[~problem.spec.inside] = 0.0
    if problem.variant == "obstacle":
        u = np.maximum(u, 0.0)
    return np.ascontiguousarray(u)


def solve(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, omega="auto",
          initial="extension", record_energy=False, check_every=CHECK_EVERY):
    """Relax until the max-norm residual is ``<= tol`` or ``max_iter`` sweeps."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    spec = problem.spec
    if omega == "auto" or omega is None:
        omega = optimal_omega(spec.n)
    omega = float(omega)
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")
    variant_code = kernels.OBSTACLE if problem.variant == "obstacle" else kernels.SIGNED
    u = _initial(problem, initial)
    f = np.ascontiguousarray(problem.forcing)
    h2 = spec.h**2
    plan = kernels.Plan(spec.interior)
    history = [discrete_objective(spec, u, problem.variant, f)] if record_energy else None

    t0 = time.perf_counter()
    res = kernels.residual(u, plan, f, h2, variant_code)
    it = 0
    flips = []
    active = u > 0.0
    while res > tol and it < max_iter:
        steps = min(check_every, max_iter - it)
        for _ in range(steps):
            kernels.sweep(u, plan, f, h2, omega, variant_code)
            if record_energy:
                history.append(discrete_objective(spec, u, problem.variant, f))
        it += steps
        res = kernels.residual(u, plan, f, h2, variant_code)
        now = u > 0.0
        flips.append(int(np.count_nonzero(now != active)))
        active = now
    seconds = time.perf_counter() - t0

    converged = bool(res <= tol)
    if converged:
        status = "converged"
    elif len(flips) >= 4 and min(flips[-4:]) > 0:
        status = "active-set oscillation"
    else:
        status = "max_iter"
    if not converged:
        logger.warning("%s solve stopped after %d sweeps: %s, residual %.3e", problem.variant, it, status, res)
    fld = ScalarField(spec, u, label=f"{problem.variant}:{problem.boundary.label}")
    if problem.variant == "signed":
        energy = field_energy(fld, "signed", problem.boundary_term())
    else:
        energy = field_energy(fld, "obstacle")
    return SolveReport(
        field=fld,
        iterations=it,
        residual=float(res),
        converged=converged,
        energy=float(energy),
        objective=discrete_objective(spec, u, problem.variant, f),
        status=status,
        variant=problem.variant,
        omega=omega,
        tol=tol,
        seconds=seconds,
        history=None if history is None else np.array(history),
        _f=f,
    )


def solve_obstacle(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, omega="auto", **kw):
    if problem.variant != "obstacle":
        raise ValueError("solve_obstacle needs an obstacle-variant problem")
    return solve(problem, tol, max_iter, omega, **kw)


def solve_signed_mplus(problem, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, omega="auto", **kw):
    if problem.variant != "signed":
        raise ValueError("solve_signed_mplus needs a signed-variant problem")
    return solve(problem, tol, max_iter, omega, **kw)


def residual_array(spec, values, variant="obstacle"):
    """Per-node complementarity residual at interior nodes.

    ``obstacle``: ``min(u, |x| - Δ_h u)``.  ``signed``: ``Δ_h u - |x|`` where
    ``u > 0``, ``Δ_h u`` where ``u < 0`` and the distance of ``Δ_h u`` from
    ``[0, |x|]`` where ``u = 0``.
    """
    lap = laplacian_array(spec, values)
    f = spec.radius
    u = values
    if variant == "obstacle":
        out = np.minimum(u, f - lap)
    else:
        out = np.where(
            u > 0.0, lap - f,
            np.where(u < 0.0, lap, np.maximum(0.0, np.maximum(-lap, lap - f))),
        )
    out = np.where(spec.interior, out, 0.0)
    return out


def residual_map(report):
    vals = residual_array(report.field.spec, report.field.values, report.variant)
    return ScalarField(report.field.spec, vals, label=f"residual:{report.field.label}")
