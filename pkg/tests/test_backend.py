import numpy as np
import pytest

from degob import _backend, catalog, kernels, solver
from degob.grid import GridSpec

pytestmark = pytest.mark.skipif(not _backend.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture
def restore_backend():
    prev = _backend.get_backend()
    yield
    _backend.set_backend(prev)


def run(backend, variant, trace, sweeps=40):
    _backend.set_backend(backend)
    spec = GridSpec(64)
    problem = solver.DirichletProblem(spec, trace, variant)
    u = problem.extension().copy() * 0.7
    plan = kernels.Plan(spec.interior)
    code = kernels.OBSTACLE if variant == "obstacle" else kernels.SIGNED
    f = problem.forcing
    for _ in range(sweeps):
        kernels.sweep(u, plan, f, spec.h**2, 1.8, code)
    return u, kernels.residual(u, plan, f, spec.h**2, code)


@pytest.mark.parametrize("variant", solver.VARIANTS)
def test_sweeps_bit_identical(variant, restore_backend):
    sol = catalog.u_star() if variant == "obstacle" else catalog.h0()
    trace = solver.perturbed_trace(sol, 0.3, "sin", 2)
    u_nb, r_nb = run("numba", variant, trace)
    u_np, r_np = run("numpy", variant, trace)
    assert np.array_equal(u_nb, u_np)
    assert r_nb == pytest.approx(r_np, rel=1e-14, abs=1e-300)


def test_full_solve_identical(restore_backend):
    t = solver.catalog_trace(catalog.u_star())
    out = {}
    for b in ("numba", "numpy"):
        _backend.set_backend(b)
        out[b] = solver.solve(solver.DirichletProblem(GridSpec(64), t))
    assert out["numba"].iterations == out["numpy"].iterations
    assert np.array_equal(out["numba"].field.values, out["numpy"].field.values)


def test_unknown_backend(restore_backend):
    with pytest.raises(ValueError):
        _backend.set_backend("cuda")
