"""Closed-form cubic homogeneous global solutions of ``Δu = |x| χ{u>0}``.

Four families:

* ``single_cone``  -- ``(r^3/9)(1 - cos 3(θ-θ1))`` on the sector ``θ1 < θ < θ1 + 2π/3``
* ``double_cone``  -- two such sectors with bases ``θ1`` and ``θ1 + 2π/3 + σ``
* ``triple_cone``  -- three sectors with bases ``θ1 + 2πk/3``
* ``full_support`` -- ``|x|^3/9 + a(x1^3 - 3 x1 x2^2) + b(3 x1^2 x2 - x2^3)``,
  ``sqrt(a^2+b^2) < 1/9``

Every evaluator is vectorised over point arrays.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .grid import ScalarField

TWO_PI = 2.0 * np.pi
CONE_WIDTH = TWO_PI / 3.0
ANGLE_TOL = 1e-12

FAMILIES = ("single_cone", "double_cone", "triple_cone", "full_support")

ENERGY_LEVELS = {
    "single_cone": np.pi / 81.0,
    "double_cone": 2.0 * np.pi / 81.0,
    "triple_cone": np.pi / 27.0,
    "full_support": np.pi / 27.0,
}


def canonical_angle(theta):
    t = float(np.mod(theta, TWO_PI))
    if TWO_PI - t < ANGLE_TOL:
        t = 0.0
    return t


@dataclass(frozen=True)
class CatalogSolution:
    family: str
    theta1: float = 0.0
    sigma: float = CONE_WIDTH
    a: float = 0.0
    b: float = 0.0
    allow_touching: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "theta1", canonical_angle(self.theta1))
        if self.family == "double_cone":
            lo_ok = self.sigma > 0.0 or (self.allow_touching and self.sigma >= 0.0)
            if not (lo_ok and self.sigma <= CONE_WIDTH + ANGLE_TOL):
                raise ValueError(
                    f"double_cone needs 0 < sigma <= 2pi/3 (sigma = 0 only with "
                    f"allow_touching), got {self.sigma}"
                )
        if self.family == "full_support" and np.hypot(self.a, self.b) >= 1.0 / 9.0:
            raise ValueError("full_support needs sqrt(a^2 + b^2) < 1/9")

    # -- construction helpers ------------------------------------------------

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        fam = d.pop("family")
        known = {"theta1", "sigma", "a", "b", "allow_touching"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown catalog keys: {sorted(extra)}")
        return cls(fam, **d)

    def to_dict(self):
        d = {"family": self.family}
        if self.family == "full_support":
            d.update(a=self.a, b=self.b)
        else:
            d["theta1"] = self.theta1
            if self.family == "double_cone":
                d["sigma"] = self.sigma
        return d

    def rotated(self, alpha):
        """The same profile rotated counter-clockwise by ``alpha``."""
        if self.family == "full_support":
            # (a - ib) e^{3iθ} rotates to (a - ib) e^{3i(θ-α)}
            z = complex(self.a, -self.b) * np.exp(-3j * alpha)
            return CatalogSolution("full_support", a=z.real, b=-z.imag)
        return CatalogSolution(
            self.family, self.theta1 + alpha, self.sigma, allow_touching=self.allow_touching
        )

    # -- geometry ------------------------------------------------------------

    @property
    def bases(self):
        """Base angles of the positivity sectors (empty for full support)."""
        t = self.theta1
        if self.family == "single_cone":
            return (t,)
        if self.family == "double_cone":
            return (t, canonical_angle(t + CONE_WIDTH + self.sigma))
        if self.family == "triple_cone":
            return tuple(canonical_angle(t + k * CONE_WIDTH) for k in range(3))
        return ()

    def in_cone(self, theta):
        """Boolean mask of angles inside the open positivity set."""
        theta = np.asarray(theta, dtype=float)
        if self.family == "full_support":
            return np.ones(theta.shape, dtype=bool)
        out = np.zeros(theta.shape, dtype=bool)
        for beta in self.bases:
            phi = np.mod(theta - beta, TWO_PI)
            out |= (phi > 0.0) & (phi < CONE_WIDTH)
        return out

    # -- evaluation ----------------------------------------------------------

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def trace(self, theta):
        """Values on the unit circle."""
        theta = np.asarray(theta, dtype=float)
        if self.family == "full_support":
            return 1.0 / 9.0 + self.a * np.cos(3 * theta) + self.b * np.sin(3 * theta)
        out = np.zeros(theta.shape)
        for beta in self.bases:
            phi = np.mod(theta - beta, TWO_PI)
            inside = (phi > 0.0) & (phi < CONE_WIDTH)
            out = out + np.where(inside, (1.0 - np.cos(3 * phi)) / 9.0, 0.0)
        return out

    def trace_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.family == "full_support":
            return -3 * self.a * np.sin(3 * theta) + 3 * self.b * np.cos(3 * theta)
        out = np.zeros(theta.shape)
        for beta in self.bases:
            phi = np.mod(theta - beta, TWO_PI)
            inside = (phi > 0.0) & (phi < CONE_WIDTH)
            out = out + np.where(inside, np.sin(3 * phi) / 3.0, 0.0)
        return out


def single_cone(theta1):
    return CatalogSolution("single_cone", theta1)


def u_star():
    """The reference regular profile ``(r^3/9)(1 - sin 3θ)`` on ``π/6 < θ < 5π/6``."""
    return CatalogSolution("single_cone", np.pi / 6.0)


def h0():
    return CatalogSolution("single_cone", 0.0)


def _cubic_harmonics(x, y):
    return x**3 - 3 * x * y**2, 3 * x**2 * y - y**3


def evaluate(sol, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    p, q = _cubic_harmonics(x, y)
    if sol.family == "full_support":
        return r**3 / 9.0 + sol.a * p + sol.b * q
    theta = np.arctan2(y, x)
    out = np.zeros(np.broadcast(x, y).shape)
    for beta in sol.bases:
        phi = np.mod(theta - beta, TWO_PI)
        inside = (phi > 0.0) & (phi < CONE_WIDTH)
        piece = (r**3 - np.cos(3 * beta) * p - np.sin(3 * beta) * q) / 9.0
        out = out + np.where(inside, piece, 0.0)
    return out


def evaluate_polar(sol, x, y):
    """Polar form ``(r^3/9)(1 - cos 3(θ-θ_i))`` summed over sectors; used to
    cross-check :func:`evaluate`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    return r**3 * sol.trace(np.arctan2(y, x))


def gradient(sol, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = np.hypot(x, y)
    if sol.family == "full_support":
        gx = r * x / 3.0 + sol.a * (3 * x**2 - 3 * y**2) + 6 * sol.b * x * y
        gy = r * y / 3.0 - 6 * sol.a * x * y + sol.b * (3 * x**2 - 3 * y**2)
        return gx, gy
    theta = np.arctan2(y, x)
    gx = np.zeros(np.broadcast(x, y).shape)
    gy = np.zeros_like(gx)
    for beta in sol.bases:
        phi = np.mod(theta - beta, TWO_PI)
        inside = (phi > 0.0) & (phi < CONE_WIDTH)
        c3, s3 = np.cos(3 * beta), np.sin(3 * beta)
        px = (3 * r * x - c3 * (3 * x**2 - 3 * y**2) - s3 * 6 * x * y) / 9.0
        py = (3 * r * y + c3 * 6 * x * y - s3 * (3 * x**2 - 3 * y**2)) / 9.0
        gx = gx + np.where(inside, px, 0.0)
        gy = gy + np.where(inside, py, 0.0)
    return gx, gy


def directional_derivative(sol, x, y, e):
    gx, gy = gradient(sol, x, y)
    return e[0] * gx + e[1] * gy


def weiss_energy_exact(sol):
    return ENERGY_LEVELS[sol.family]


# -- the trace function ϖ(θ) = u(e^{iθ}) - (i/3) ∂_θ u(e^{iθ}) -------------------


@dataclass(frozen=True)
class TraceFn:
    """``ϖ(θ) = coef * e^{3iθ} + 1/9`` (on the sector ``[theta1, theta1 + 2π/3]``
    when ``theta1`` is set, zero outside it)."""

    coef: complex
    theta1: float = None

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        val = self.coef * np.exp(3j * theta) + 1.0 / 9.0
        if self.theta1 is None:
            return val
        phi = np.mod(theta - self.theta1, TWO_PI)
        closed = (phi <= CONE_WIDTH + ANGLE_TOL) | (phi >= TWO_PI - ANGLE_TOL)
        return np.where(closed, val, 0.0 + 0.0j)


def trace_fn(sol):
    if sol.family == "single_cone":
        return TraceFn(-np.exp(-3j * sol.theta1) / 9.0, sol.theta1)
    if sol.family == "full_support":
        return TraceFn(complex(sol.a, -sol.b))
    raise ValueError(f"trace function is only defined for single_cone and full_support, not {sol.family}")


# -- distances and the nondegeneracy constant ---------------------------------


def _ray_distance(px, py, angle):
    ex, ey = np.cos(angle), np.sin(angle)
    t = px * ex + py * ey
    perp = np.abs(px * ey - py * ex)
    return np.where(t > 0.0, perp, np.hypot(px, py))


def _sector_distance(px, py, start, width):
    theta = np.arctan2(py, px)
    phi = np.mod(theta - start, TWO_PI)
    inside = (phi <= width + ANGLE_TOL) | (phi >= TWO_PI - ANGLE_TOL) | (np.hypot(px, py) == 0.0)
    d = np.minimum(_ray_distance(px, py, start), _ray_distance(px, py, start + width))
    return np.where(inside, 0.0, d)


def _zero_sectors(sol):
    """Closed sectors ``(start, width)`` making up ``{u = 0}``."""
    ends = sorted((b, b + CONE_WIDTH) for b in sol.bases)
    sectors = []
    for k, (_, stop) in enumerate(ends):
        nxt = ends[(k + 1) % len(ends)][0]
        gap = np.mod(nxt - stop, TWO_PI)
        if gap > TWO_PI - ANGLE_TOL:
            gap = 0.0
        sectors.append((stop, gap))
    return sectors


def _require_cone(sol, allow_full_support):
    if sol.family == "full_support":
        if not allow_full_support:
            raise ValueError("full_support has zero set {0}; pass allow_full_support=True for |x|")
        return False
    return True


def distance_to_zero_set(sol, x, y, allow_full_support=False):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not _require_cone(sol, allow_full_support):
        return np.hypot(x, y)
    d = np.full(np.broadcast(x, y).shape, np.inf)
    for start, width in _zero_sectors(sol):
        d = np.minimum(d, _sector_distance(x, y, start, width))
    return d


def distance_to_positivity_set(sol, x, y, allow_full_support=False):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not _require_cone(sol, allow_full_support):
        return np.zeros(np.broadcast(x, y).shape)
    d = np.full(np.broadcast(x, y).shape, np.inf)
    for beta in sol.bases:
        d = np.minimum(d, _sector_distance(x, y, beta, CONE_WIDTH))
    return d


def distance_to_free_boundary(sol, x, y):
    """Distance to the union of the boundary rays of the positivity sectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = np.full(np.broadcast(x, y).shape, np.inf)
    for beta in sol.bases:
        d = np.minimum(d, _ray_distance(x, y, beta))
        d = np.minimum(d, _ray_distance(x, y, beta + CONE_WIDTH))
    return d


def rho(theta_rel):
    """``(1 - cos 3t) / (9 d^2 (d + 1))`` with ``d = min(|sin t|, |sin(t - 2π/3)|)``."""
    t = np.asarray(theta_rel, dtype=float)
    d = np.minimum(np.abs(np.sin(t)), np.abs(np.sin(t - CONE_WIDTH)))
    return (1.0 - np.cos(3 * t)) / (9.0 * d**2 * (d + 1.0))


def nondegeneracy_constant(samples=200_001):
    """Minimum of :func:`rho` over ``(0, 2π/3)``: dense scan, then a bounded
    scalar refinement around the best grid point.  Returns ``(C, argmin)``."""
    t = np.linspace(0.0, CONE_WIDTH, samples + 2)[1:-1]
    vals = rho(t)
    k = int(np.argmin(vals))
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, t.size - 1)]
    res = minimize_scalar(rho, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    if res.fun < vals[k]:
        return float(res.fun), float(res.x)
    return float(vals[k]), float(t[k])


@dataclass
class LowerBoundReport:
    constant: float
    min_ratio: float
    n_points: int
    n_on_zero_set: int
    holds: bool


def lower_bound_check(sol, x, y, constant=None):
    """Check ``u >= C d^2 (|x| + d)`` with ``d`` the distance to ``{u = 0}``."""
    if sol.family != "single_cone":
        raise ValueError("the lower bound is stated for single_cone profiles")
    if constant is None:
        constant, _ = nondegeneracy_constant()
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    u = evaluate(sol, x, y)
    d = distance_to_zero_set(sol, x, y)
    bound = constant * d**2 * (np.hypot(x, y) + d)
    pos = bound > 0.0
    ratio = u[pos] / bound[pos]
    min_ratio = float(ratio.min()) if ratio.size else np.inf
    holds = bool(np.all(u >= bound * (1.0 - 1e-12)))
    return LowerBoundReport(constant, min_ratio, int(x.size), int((~pos).sum()), holds)


def fd_laplacian(sol, x, y, step=1e-4):
    """Centred 5-point Laplacian of the closed form with spacing ``step``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = (evaluate(sol, x + step, y) + evaluate(sol, x - step, y)
         + evaluate(sol, x, y + step) + evaluate(sol, x, y - step) - 4.0 * evaluate(sol, x, y))
    return s / (step * step)


def sample_field(sol, spec, label=None):
    """The closed form sampled on a grid."""
    return ScalarField.from_function(spec, lambda X, Y: evaluate(sol, X, Y), label or sol.family)
