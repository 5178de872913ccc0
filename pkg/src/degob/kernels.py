"""Relaxation sweeps and residuals for the 5-point obstacle systems.

Every kernel exists as a numba ``@njit`` loop and as a vectorised numpy
function.  Both visit nodes in red-black order (all nodes with ``(i+j)`` even,
then odd) and evaluate the stencil sum in the same operand order, so the two
paths agree bit for bit.  Dispatch happens through :func:`sweep` and
:func:`residual` according to :mod:`degob._backend`.
"""

import numpy as np

from ._backend import get_backend, njit

ZERO_SNAP = 1e-14

OBSTACLE = 0
SIGNED = 1


# -- numba kernels -----------------------------------------------------------


@njit
def _obstacle_sweep_nb(u, interior, f, h2, omega):
    n1 = u.shape[0]
    for color in range(2):
        for i in range(1, n1 - 1):
            start = 1 if (1 + i) % 2 == color else 2
            for j in range(start, n1 - 1, 2):
                if interior[i, j]:
                    s = u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1]
                    gs = 0.25 * (s - h2 * f[i, j])
                    v = u[i, j] + omega * (gs - u[i, j])
                    if v < ZERO_SNAP:
                        v = 0.0
                    u[i, j] = v


@njit
def _signed_sweep_nb(u, interior, f, h2, omega):
    n1 = u.shape[0]
    for color in range(2):
        for i in range(1, n1 - 1):
            start = 1 if (1 + i) % 2 == color else 2
            for j in range(start, n1 - 1, 2):
                if interior[i, j]:
                    s = u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1]
                    vpos = 0.25 * (s - h2 * f[i, j])
                    vneg = 0.25 * s
                    if vpos > 0.0:
                        t = vpos
                    elif vneg < 0.0:
                        t = vneg
                    else:
                        t = 0.0
                    old = u[i, j]
                    if t == 0.0:
                        v = 0.0
                    elif (t > 0.0 and old >= 0.0) or (t < 0.0 and old <= 0.0):
                        v = old + omega * (t - old)
                        if (t > 0.0 and v < 0.0) or (t < 0.0 and v > 0.0):
                            v = 0.0
                    else:
                        v = t
                    if abs(v) < ZERO_SNAP:
                        v = 0.0
                    u[i, j] = v


@njit
def _residual_nb(u, interior, f, h2, variant):
    n1 = u.shape[0]
    worst = 0.0
    for i in range(1, n1 - 1):
        for j in range(1, n1 - 1):
            if interior[i, j]:
                s = u[i + 1, j] + u[i - 1, j] + u[i, j + 1] + u[i, j - 1]
                lap = (s - 4.0 * u[i, j]) / h2
                c = u[i, j]
                if variant == 0:
                    r = abs(min(c, f[i, j] - lap))
                elif c > 0.0:
                    r = abs(lap - f[i, j])
                elif c < 0.0:
                    r = abs(lap)
                else:
                    r = max(0.0, -lap, lap - f[i, j])
                if r > worst:
                    worst = r
    return worst


# -- numpy kernels -----------------------------------------------------------


class Plan:
    """Flat index sets of interior nodes split by colour (numpy path)."""

    def __init__(self, interior):
        interior = np.asarray(interior, dtype=bool)
        self.interior = np.ascontiguousarray(interior)
        self.stride = interior.shape[1]
        ii, jj = np.nonzero(interior)
        flat = ii * self.stride + jj
        color = (ii + jj) % 2
        self.colors = (flat[color == 0], flat[color == 1])
        self.flat = flat


def _stencil_sum(uf, idx, stride):
    return uf[idx + stride] + uf[idx - stride] + uf[idx + 1] + uf[idx - 1]


def _obstacle_sweep_np(u, plan, f, h2, omega):
    uf = u.reshape(-1)
    ff = f.reshape(-1)
    for idx in plan.colors:
        s = _stencil_sum(uf, idx, plan.stride)
        gs = 0.25 * (s - h2 * ff[idx])
        old = uf[idx]
        v = old + omega * (gs - old)
        v[v < ZERO_SNAP] = 0.0
        uf[idx] = v


def _signed_sweep_np(u, plan, f, h2, omega):
    uf = u.reshape(-1)
    ff = f.reshape(-1)
    for idx in plan.colors:
        s = _stencil_sum(uf, idx, plan.stride)
        vpos = 0.25 * (s - h2 * ff[idx])
        vneg = 0.25 * s
        t = np.where(vpos > 0.0, vpos, np.where(vneg < 0.0, vneg, 0.0))
        old = uf[idx]
        same = ((t > 0.0) & (old >= 0.0)) | ((t < 0.0) & (old <= 0.0))
        relaxed = old + omega * (t - old)
        crossed = ((t > 0.0) & (relaxed < 0.0)) | ((t < 0.0) & (relaxed > 0.0))
        relaxed[crossed] = 0.0
        v = np.where(t == 0.0, 0.0, np.where(same, relaxed, t))
        v[np.abs(v) < ZERO_SNAP] = 0.0
        uf[idx] = v


def _residual_np(u, plan, f, h2, variant):
    uf = u.reshape(-1)
    idx = plan.flat
    if idx.size == 0:
        return 0.0
    s = _stencil_sum(uf, idx, plan.stride)
    c = uf[idx]
    lap = (s - 4.0 * c) / h2
    fi = f.reshape(-1)[idx]
    if variant == OBSTACLE:
        r = np.abs(np.minimum(c, fi - lap))
    else:
        r = np.where(
            c > 0.0,
            np.abs(lap - fi),
            np.where(c < 0.0, np.abs(lap), np.maximum(0.0, np.maximum(-lap, lap - fi))),
        )
    return float(r.max())


# -- dispatch ----------------------------------------------------------------


def sweep(u, plan, f, h2, omega, variant):
    """One red-black relaxation sweep, in place."""
    if get_backend() == "numba":
        if variant == OBSTACLE:
            _obstacle_sweep_nb(u, plan.interior, f, h2, omega)
        else:
            _signed_sweep_nb(u, plan.interior, f, h2, omega)
    elif variant == OBSTACLE:
        _obstacle_sweep_np(u, plan, f, h2, omega)
    else:
        _signed_sweep_np(u, plan, f, h2, omega)


def residual(u, plan, f, h2, variant):
    """Max-norm complementarity residual over interior nodes."""
    if get_backend() == "numba":
        return float(_residual_nb(u, plan.interior, f, h2, variant))
    return _residual_np(u, plan, f, h2, variant)
