"""Cartesian node grids on the unit disk.

Node ``(i, j)`` sits at ``x = (-1 + i*h, -1 + j*h)`` with ``h = 2/n``.  Nodes are
classified as interior (``|x| < 1 - h``), boundary band (``1 - h <= |x| <= 1``)
or exterior (``|x| > 1``).  Every 4-neighbour of an interior node is interior or
band, so the 5-point stencil never reaches outside the disk.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

EXTERIOR = 0
BAND = 1
INTERIOR = 2

FIELD_HEADER = "degob-field v1 n={n}"


def weight(x):
    """Forcing ``f(x) = |x|``; accepts a point or an ``(..., 2)`` array."""
    x = np.asarray(x, dtype=float)
    return np.hypot(x[..., 0], x[..., 1])


@dataclass(frozen=True)
class GridSpec:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValueError(f"n must be an integer >= 4, got {self.n!r}")

    @property
    def h(self):
        return 2.0 / self.n

    @cached_property
    def axis(self):
        return -1.0 + self.h * np.arange(self.n + 1)

    @cached_property
    def coords(self):
        """Arrays ``(X, Y)`` of node coordinates, indexed ``[i, j]``."""
        X, Y = np.meshgrid(self.axis, self.axis, indexing="ij")
        X.setflags(write=False)
        Y.setflags(write=False)
        return X, Y

    @cached_property
    def radius(self):
        X, Y = self.coords
        r = np.hypot(X, Y)
        r.setflags(write=False)
        return r

    @cached_property
    def mask(self):
        r = self.radius
        m = np.full(r.shape, EXTERIOR, dtype=np.int8)
        m[r <= 1.0] = BAND
        m[r < 1.0 - self.h] = INTERIOR
        m.setflags(write=False)
        return m

    @property
    def interior(self):
        return self.mask == INTERIOR

    @property
    def band(self):
        return self.mask == BAND

    @property
    def inside(self):
        """Interior or band nodes (the nodes carrying field values)."""
        return self.mask != EXTERIOR

    def node(self, i, j):
        return np.array([-1.0 + i * self.h, -1.0 + j * self.h])

    def nearest_node(self, x):
        i = int(round((x[0] + 1.0) / self.h))
        j = int(round((x[1] + 1.0) / self.h))
        return i, j

    @cached_property
    def weights(self):
        """Quadrature weight per node: ``h^2`` times the fraction of the dual
        cell inside the disk, with cut cells estimated by 4x4 subsampling."""
        h = self.h
        r = self.radius
        w = np.where(r < 1.0, 1.0, 0.0)
        cut = np.abs(r - 1.0) <= h / np.sqrt(2.0) + 1e-12
        X, Y = self.coords
        offs = (np.arange(4) + 0.5) / 4.0 - 0.5
        ox, oy = np.meshgrid(offs * h, offs * h, indexing="ij")
        px = X[cut][:, None] + ox.ravel()[None, :]
        py = Y[cut][:, None] + oy.ravel()[None, :]
        w[cut] = np.mean(px * px + py * py <= 1.0, axis=1)
        w = w * h * h
        w.setflags(write=False)
        return w

    def admissible_radius(self):
        """Largest radius at which bilinear interpolation is defined."""
        return 1.0 - 2.0 * self.h


@dataclass(frozen=True, eq=False)
class PolarTrace:
    """Samples of a function on the circle of given radius at
    ``theta_k = 2*pi*k/ntheta``."""

    radius: float
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size < 64:
            raise ValueError("a PolarTrace needs at least 64 angular samples")
        if not 0.0 < self.radius <= 1.0:
            raise ValueError(f"radius must lie in (0, 1], got {self.radius}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def ntheta(self):
        return self.values.size

    @property
    def theta(self):
        return 2.0 * np.pi * np.arange(self.ntheta) / self.ntheta

    def derivative(self):
        """Spectral d/dtheta of the periodic samples."""
        return spectral_derivative(self.values)

    def __call__(self, theta):
        """Periodic linear interpolation in theta."""
        t = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
        k = self.ntheta
        s = t * k / (2.0 * np.pi)
        i0 = np.floor(s).astype(int) % k
        frac = s - np.floor(s)
        return (1.0 - frac) * self.values[i0] + frac * self.values[(i0 + 1) % k]


def spectral_derivative(values):
    v = np.asarray(values, dtype=float)
    k = np.fft.fftfreq(v.size, d=1.0 / v.size)
    if v.size % 2 == 0:
        k[v.size // 2] = 0.0
    return np.real(np.fft.ifft(1j * k * np.fft.fft(v)))


@dataclass(frozen=True, eq=False)
class ScalarField:
    spec: GridSpec
    values: np.ndarray
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        shape = (self.spec.n + 1, self.spec.n + 1)
        if v.shape != shape:
            raise ValueError(f"values must have shape {shape}, got {v.shape}")
        v[~self.spec.inside] = 0.0
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, spec, fn, label=""):
        """Sample ``fn(X, Y)`` at interior and band nodes."""
        X, Y = spec.coords
        vals = np.zeros(X.shape)
        ins = spec.inside
        vals[ins] = fn(X[ins], Y[ins])
        return cls(spec, vals, label)

    @classmethod
    def zeros(cls, spec, label="zero"):
        return cls(spec, np.zeros((spec.n + 1, spec.n + 1)), label)

    def gradient(self):
        """Nodal gradient ``(gx, gy)``: centred differences where both
        neighbours carry values, second-order one-sided otherwise."""
        if "grad" not in self._cache:
            self._cache["grad"] = (_axis_derivative(self, 0), _axis_derivative(self, 1))
        return self._cache["grad"]

    def interp(self, x, y, check=True):
        """Bilinear interpolation at points ``(x, y)`` (arrays broadcast)."""
        return bilinear(self.spec, self.values, x, y, check=check)

    def interp_gradient(self, x, y, check=True):
        gx, gy = self.gradient()
        return (
            bilinear(self.spec, gx, x, y, check=check),
            bilinear(self.spec, gy, x, y, check=check),
        )

    def laplacian_5pt(self, i, j):
        return laplacian_5pt(self, (i, j))


def _axis_derivative(field_, axis):
    spec = field_.spec
    u = field_.values
    h = spec.h
    ins = spec.inside
    d = np.zeros_like(u)
    n1 = u.shape[0]

    def shifted(arr, k, fill):
        out = np.full_like(arr, fill)
        src = [slice(None)] * 2
        dst = [slice(None)] * 2
        if k > 0:
            src[axis] = slice(k, None)
            dst[axis] = slice(None, n1 - k)
        else:
            src[axis] = slice(None, n1 + k)
            dst[axis] = slice(-k, None)
        out[tuple(dst)] = arr[tuple(src)]
        return out

    up1, dn1 = shifted(u, 1, 0.0), shifted(u, -1, 0.0)
    up2, dn2 = shifted(u, 2, 0.0), shifted(u, -2, 0.0)
    iu1, id1 = shifted(ins, 1, False), shifted(ins, -1, False)
    iu2, id2 = shifted(ins, 2, False), shifted(ins, -2, False)

    centred = ins & iu1 & id1
    d[centred] = (up1 - dn1)[centred] / (2 * h)
    back = ins & ~centred & id1 & id2
    d[back] = (3 * u - 4 * dn1 + dn2)[back] / (2 * h)
    fwd = ins & ~centred & ~back & iu1 & iu2
    d[fwd] = (-3 * u + 4 * up1 - up2)[fwd] / (2 * h)
    d.setflags(write=False)
    return d


def bilinear(spec, values, x, y, check=True):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if check:
        rmax = spec.admissible_radius() + 1e-12
        if np.any(x * x + y * y > rmax * rmax):
            raise ValueError(
                f"interpolation point outside the admissible disk |x| <= {rmax:.6g}"
            )
    h = spec.h
    n = spec.n
    fx = (x + 1.0) / h
    fy = (y + 1.0) / h
    i0 = np.clip(np.floor(fx).astype(int), 0, n - 1)
    j0 = np.clip(np.floor(fy).astype(int), 0, n - 1)
    tx = fx - i0
    ty = fy - j0
    v = values
    return (
        (1 - tx) * (1 - ty) * v[i0, j0]
        + tx * (1 - ty) * v[i0 + 1, j0]
        + (1 - tx) * ty * v[i0, j0 + 1]
        + tx * ty * v[i0 + 1, j0 + 1]
    )


def laplacian_5pt(field_, node):
    i, j = node
    spec = field_.spec
    if not (0 < i < spec.n and 0 < j < spec.n) or spec.mask[i, j] != INTERIOR:
        raise ValueError(f"node {node} is not an interior node")
    u = field_.values
    return (u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1] - 4 * u[i, j]) / spec.h**2


def laplacian_array(spec, values):
    """5-point Laplacian at every interior node (zero elsewhere)."""
    u = values
    lap = np.zeros_like(u)
    lap[1:-1, 1:-1] = (u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4 * u[1:-1, 1:-1])
    lap /= spec.h**2
    lap[~spec.interior] = 0.0
    return lap


def bulk_integral(spec, integrand):
    """Quadrature of ``integrand`` over the unit disk.

    ``integrand`` is either a callable ``f(X, Y)`` or an array of node values.
    Node arrays only need to be meaningful on interior and band nodes; the few
    exterior nodes whose dual cell overlaps the disk borrow the value of their
    nearest inward neighbour.
    """
    w = spec.weights
    if callable(integrand):
        X, Y = spec.coords
        vals = np.zeros(X.shape)
        use = w > 0
        vals[use] = integrand(X[use], Y[use])
    else:
        vals = _extend_outward(spec, np.asarray(integrand, dtype=float))
    return float(np.sum(w * vals))


def _extend_outward(spec, values):
    vals = values.copy()
    need = (spec.weights > 0) & ~spec.inside
    if not need.any():
        return vals
    r = spec.radius
    n = spec.n
    for i, j in zip(*np.nonzero(need)):
        best = None
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
            a, b = i + di, j + dj
            if 0 <= a <= n and 0 <= b <= n and spec.mask[a, b] != EXTERIOR:
                if best is None or r[a, b] < r[best]:
                    best = (a, b)
        if best is not None:
            vals[i, j] = values[best]
    return vals


def boundary_integral(trace, integrand=None):
    """Trapezoidal rule on the circle times the arc-length factor ``r``.

    ``integrand`` maps ``(theta, values)`` to per-sample values; by default the
    trace values themselves are integrated.
    """
    theta = trace.theta
    vals = trace.values if integrand is None else np.asarray(integrand(theta, trace.values))
    return float(trace.radius * np.sum(vals) * 2.0 * np.pi / trace.ntheta)


def resample_polar(field_, r, ntheta=256):
    if ntheta < 64:
        raise ValueError("ntheta must be at least 64")
    if r > field_.spec.admissible_radius() + 1e-12:
        raise ValueError(
            f"radius {r} exceeds the interpolation range {field_.spec.admissible_radius():.6g}"
        )
    theta = 2.0 * np.pi * np.arange(ntheta) / ntheta
    vals = field_.interp(r * np.cos(theta), r * np.sin(theta))
    return PolarTrace(r, vals)


def write_field(path, field_):
    n = field_.spec.n
    with open(path, "w") as fh:
        fh.write(FIELD_HEADER.format(n=n) + "\n")
        for row in field_.values:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_field(path, label=None):
    with open(path) as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) != 3 or parts[0] != "degob-field" or parts[1] != "v1" or not parts[2].startswith("n="):
            raise ValueError(f"not a degob field file: {header!r}")
        n = int(parts[2][2:])
        rows = [line for line in fh.read().splitlines() if line.strip()]
    if len(rows) != n + 1:
        raise ValueError(f"expected {n + 1} rows, found {len(rows)}")
    vals = np.array([[float(t) for t in row.split(",")] for row in rows])
    return ScalarField(GridSpec(n), vals, label if label is not None else str(path))
