import json

import numpy as np
import pytest

from degob import catalog, solver
from degob.catalog import CatalogSolution
from degob.grid import GridSpec, PolarTrace


def solve(n, trace, variant="obstacle", **kw):
    return solver.solve(solver.DirichletProblem(GridSpec(n), trace, variant), **kw)


def max_err(rep, sol):
    spec = rep.field.spec
    X, Y = spec.coords
    exact = catalog.evaluate(sol, X, Y)
    return np.max(np.abs(rep.field.values - exact)[spec.inside])


@pytest.mark.parametrize("n", [64, 128])
def test_full_support_recovered(n):
    sol = CatalogSolution("full_support")
    rep = solve(n, solver.catalog_trace(sol))
    assert rep.converged and rep.residual <= solver.DEFAULT_TOL
    # |x|^3/9 is not a polynomial of degree <= 3 so the 5-point stencil is not exact
    assert max_err(rep, sol) <= 5 * rep.field.spec.h ** 2


def test_zero_data_gives_zero():
    rep = solve(64, solver.zero_trace())
    assert rep.converged and rep.iterations == 0
    assert np.all(rep.field.values == 0.0)


def test_ustar_recovered(ustar_128):
    rep = ustar_128
    assert rep.converged
    assert max_err(rep, catalog.u_star()) <= 5e-5


def test_energy_nonincreasing():
    rep = solve(64, solver.catalog_trace(catalog.u_star()), record_energy=True, max_iter=200, tol=1e-14)
    hist = rep.history
    assert len(hist) == rep.iterations + 1
    assert np.all(np.diff(hist) <= 1e-12 * np.abs(hist[:-1]).max())


@pytest.mark.parametrize("variant", solver.VARIANTS)
def test_energy_nonincreasing_from_zero(variant):
    trace = solver.perturbed_trace(catalog.u_star(), 0.3, "cos", 2)
    rep = solve(64, trace, variant, record_energy=True, max_iter=100, tol=1e-14, initial="zero")
    assert np.all(np.diff(rep.history) <= 1e-12)


def test_comparison_principle():
    sol = catalog.u_star()
    lo = solve(64, solver.catalog_trace(sol))
    hi = solve(64, solver.perturbed_trace(sol, 0.4, "cos", 0).scaled(1.0))  # cos(0)=1 gives 1.4 g
    assert np.all(hi.field.values >= lo.field.values - 1e-10)


def test_comparison_principle_crossed_data():
    a = CatalogSolution("single_cone", 0.3)
    b = CatalogSolution("single_cone", 0.6)
    ta, tb = solver.catalog_trace(a), solver.catalog_trace(b)
    top = solver.Trace(lambda t: np.maximum(ta(t), tb(t)), "max")
    ua, ub, ut = (solve(64, t).field.values for t in (ta, tb, top))
    assert np.all(ut >= np.maximum(ua, ub) - 1e-10)


def test_residual_map_small_at_convergence(ustar_128):
    res = solver.residual_map(ustar_128)
    spec = res.spec
    assert np.all(res.values[~spec.interior] == 0.0)
    assert np.max(np.abs(res.values)) <= 1e-7


def test_residual_map_large_for_extension():
    spec = GridSpec(64)
    problem = solver.DirichletProblem(spec, solver.catalog_trace(CatalogSolution("single_cone", 1.0)))
    vals = problem.extension()
    res = solver.residual_array(spec, vals)
    # the extension is a solution, so the residual is the stencil error only
    assert np.max(np.abs(res)) < 0.05
    bad = solver.residual_array(spec, vals + 0.01 * spec.inside)
    assert np.max(np.abs(bad)) > np.max(np.abs(res))


def test_signed_recovers_h0():
    sol = catalog.h0()
    rep = solve(128, solver.catalog_trace(sol), "signed")
    assert rep.converged
    assert max_err(rep, sol) <= 5e-5


def test_signed_allows_negative_data():
    trace = solver.Trace(lambda t: np.cos(t) / 9, "cos/9")
    rep = solve(64, trace, "signed")
    assert rep.converged and rep.field.values.min() < 0


def test_obstacle_rejects_negative_data():
    trace = solver.Trace(lambda t: np.cos(t) / 9, "cos/9")
    with pytest.raises(ValueError):
        solver.DirichletProblem(GridSpec(64), trace, "obstacle")


def test_solve_wrappers_check_variant():
    p = solver.DirichletProblem(GridSpec(64), solver.zero_trace(), "obstacle")
    with pytest.raises(ValueError):
        solver.solve_signed_mplus(p)
    with pytest.raises(ValueError):
        solver.DirichletProblem(GridSpec(64), solver.zero_trace(), "plain")


@pytest.mark.parametrize("omega", [0.0, 2.0, -1.0, 2.5])
def test_bad_omega(omega):
    with pytest.raises(ValueError):
        solve(64, solver.zero_trace(), omega=omega)


def test_optimal_omega_range():
    w = [solver.optimal_omega(n) for n in (64, 128, 256, 512, 1024)]
    assert all(1.0 < a < b < 2.0 for a, b in zip(w, w[1:]))


def test_fixed_omega_converges_to_same_solution():
    t = solver.catalog_trace(catalog.u_star())
    a = solve(64, t)
    b = solve(64, t, omega=1.5)
    assert abs(a.omega - b.omega) > 0.1
    assert np.max(np.abs(a.field.values - b.field.values)) < 1e-6


def test_max_iter_reports_nonconvergence():
    rep = solve(64, solver.catalog_trace(catalog.u_star()), max_iter=10, tol=1e-14, initial="zero")
    assert not rep.converged and rep.iterations == 10
    assert rep.status in ("max_iter", "active-set oscillation")


def test_solution_nonnegative_and_band_fixed(ustar_128):
    fld = ustar_128.field
    spec = fld.spec
    assert fld.values.min() >= 0.0
    ext = solver.DirichletProblem(spec, solver.catalog_trace(catalog.u_star())).extension()
    assert np.array_equal(fld.values[spec.band], ext[spec.band])
    assert np.all(fld.values[~spec.inside] == 0.0)


@pytest.mark.parametrize(
    "d",
    [
        {"type": "catalog", "catalog": {"family": "single_cone", "theta1": 1.0}},
        {"type": "scaled_catalog", "catalog": {"family": "full_support"}, "scale": 2.0},
        {"type": "perturbed", "catalog": {"family": "single_cone"}, "delta": 0.1, "mode": "cos", "k": 3},
        {"type": "blend", "first": {"family": "single_cone"}, "second": {"family": "single_cone", "theta1": 0.2}},
        {"type": "zero"},
        {"type": "tabulated", "values": list(np.linspace(0, 1, 64))},
    ],
)
def test_trace_from_dict(d):
    t = solver.trace_from_dict(json.loads(json.dumps(d)))
    vals = t(np.linspace(0, 2 * np.pi, 50))
    assert vals.shape == (50,) and np.all(np.isfinite(vals))


def test_trace_from_dict_unknown():
    with pytest.raises(ValueError):
        solver.trace_from_dict({"type": "spline"})


def test_trace_file_roundtrip(tmp_path):
    th = 2 * np.pi * np.arange(128) / 128
    vals = catalog.u_star().trace(th)
    p = tmp_path / "g.csv"
    p.write_text("theta,value\n" + "".join(f"{float(a)!r},{float(b)!r}\n" for a, b in zip(th, vals)))
    t = solver.trace_from_dict({"type": "trace_file", "path": str(p)})
    assert np.allclose(t(th), vals, atol=1e-15)


def test_scaled_catalog_is_linear():
    sol = catalog.u_star()
    t = solver.catalog_trace(sol, 3.0)
    th = np.linspace(0, 6, 20)
    assert np.allclose(t(th), 3 * sol.trace(th))


def test_tabulated_matches_polar_trace():
    pt = PolarTrace(1.0, np.sin(2 * np.pi * np.arange(64) / 64) ** 2)
    t = solver.polar_trace_data(pt)
    assert np.allclose(t(2 * np.pi * np.arange(64) / 64), pt.values)
