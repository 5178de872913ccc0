import numpy as np
import pytest

from degob import catalog, freeboundary as fb
from degob.catalog import CatalogSolution
from degob.grid import GridSpec, ScalarField

SPEC = GridSpec(256)
H = SPEC.h


@pytest.fixture(scope="module")
def ustar_exact():
    return catalog.sample_field(catalog.u_star(), SPEC)


@pytest.fixture(scope="module")
def ustar_curve(ustar_exact):
    return fb.extract(ustar_exact)


def test_exact_ustar_curve_on_rays(ustar_curve):
    d = fb.hausdorff_to_rays(ustar_curve, [np.pi / 6, 5 * np.pi / 6], rmin=0.1, rmax=0.8)
    assert d <= 3 * H


def test_side_tags(ustar_curve):
    pts, side = ustar_curve.points, ustar_curve.side
    r = np.hypot(pts[:, 0], pts[:, 1])
    assert set(side) <= {"left", "right", "near-origin"}
    assert np.all(side[r < 2 * H] == "near-origin")
    far = r >= 2 * H
    assert np.all((pts[far, 0] > 0) == (side[far] == "right"))


def test_normals_unit_and_point_into_positive_set(ustar_curve):
    n = ustar_curve.normals
    pts = ustar_curve.points
    r = np.hypot(pts[:, 0], pts[:, 1])
    sel = (r > 0.1) & (r < 0.8)
    assert np.allclose(np.hypot(n[sel, 0], n[sel, 1]), 1.0)
    # inward normals of the cone: (-sin π/6, cos π/6) on the right ray
    right = sel & (pts[:, 0] > 0)
    ref = np.array([-0.5, np.sqrt(3) / 2])
    assert np.min(n[right] @ ref) > 0.99


def test_full_support_has_no_free_boundary_away_from_origin():
    fld = catalog.sample_field(CatalogSolution("full_support"), SPEC)
    curve = fb.extract(fld)
    r = np.hypot(curve.points[:, 0], curve.points[:, 1])
    # only the few nodes around the origin fall below the threshold
    assert r.max() <= 3 * H


def test_zero_field_raises():
    with pytest.raises(fb.ExtractionError):
        fb.extract(ScalarField.zeros(GridSpec(64)))


def test_graph_fit_synthetic_wedge():
    # u = (x2 - 0.5|x1|)_+^2 has the graph x2 = 0.5|x1| as free boundary
    fld = ScalarField.from_function(SPEC, lambda X, Y: np.maximum(Y - 0.5 * np.abs(X), 0.0) ** 2)
    fit = fb.graph_fit(fb.extract(fld))
    assert fit.unique
    assert fit.ray_slopes[0] == pytest.approx(0.5, abs=1e-3)
    assert fit.ray_slopes[1] == pytest.approx(-0.5, abs=1e-3)
    assert fit.lipschitz == pytest.approx(0.5, abs=1e-2)
    assert fit.opening_angle == pytest.approx(np.pi - 2 * np.arctan(0.5), abs=2e-3)


def test_graph_fit_exact_ustar(ustar_curve):
    fit = fb.graph_fit(ustar_curve)
    assert fit.unique
    assert fit.opening_angle == pytest.approx(2 * np.pi / 3, abs=2e-2)
    er, el = fit.slope_errors(10 * H, fit.rho / 4)
    assert np.nanmax(er) <= 0.05 and np.nanmax(el) <= 0.05


def test_slice_crossings_single():
    fld = ScalarField.from_function(SPEC, lambda X, Y: np.maximum(Y - 0.1, 0.0) ** 2)
    roots, n_down = fb.slice_crossings(fld, 0.0, -0.5, 0.5)
    assert n_down == 0 and roots.size == 1
    assert roots[0] == pytest.approx(0.1, abs=H)


def test_proximity_on_exact_profile(ustar_exact, ustar_curve):
    rep = fb.proximity_check(ustar_exact, ustar_curve)
    assert rep.max_distance <= 3 * H


def test_monotonicity_catalog_wedge():
    rep = fb.directional_monotonicity_check(catalog.u_star())
    assert rep.holds and rep.n_points > 0 and rep.min_value >= -1e-6


def test_monotonicity_catalog_full_cone_fails_somewhere():
    # the wedge is the region where c0 ∂_e u >= u holds; across the whole cone it does not
    rep = fb.directional_monotonicity_check(catalog.u_star(), theta=(np.pi / 6, 5 * np.pi / 6))
    assert not rep.holds


def test_monotonicity_grid_wedge(ustar_exact):
    rep = fb.directional_monotonicity_check(ustar_exact)
    assert rep.n_points > 0
    assert rep.min_value >= -1e-4


@pytest.mark.parametrize(
    "angle, e",
    [(np.pi / 6, fb.E_STAR), (5 * np.pi / 6, np.array([0.5, np.sqrt(3) / 2]))],
)
def test_cone_inclusion_exact(ustar_exact, ustar_curve, angle, e):
    # e is the inward normal of the ray through x0
    x0 = 0.5 * np.array([np.cos(angle), np.sin(angle)])
    i = np.argmin(np.hypot(*(ustar_curve.points - x0).T))
    rep = fb.cone_inclusion_check(ustar_exact, ustar_curve.points[i], e=e, curve=ustar_curve)
    assert rep.holds


def test_cone_inclusion_requires_curve_point(ustar_exact, ustar_curve):
    with pytest.raises(ValueError):
        fb.cone_inclusion_check(ustar_exact, [0.0, 0.5], curve=ustar_curve)


def test_growth_constants_positive(ustar_exact, ustar_curve):
    pts = ustar_curve.points
    r = np.hypot(pts[:, 0], pts[:, 1])
    base = pts[(r > 0.1) & (r < 0.3)][::4]
    rep = fb.growth_constants(ustar_exact, base, [0.05, 0.1, 0.2])
    assert rep.positive
    assert np.all(rep.upper < np.inf) and np.all(rep.upper > 0)


def test_growth_constants_zero_field():
    rep = fb.growth_constants(ScalarField.zeros(GridSpec(64)), [[0.1, 0.0]], [0.1])
    assert not rep.positive


def test_curve_csv(tmp_path, ustar_curve):
    p = tmp_path / "c.csv"
    ustar_curve.write_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x1,x2,nx,ny,side" and len(lines) == len(ustar_curve) + 1
