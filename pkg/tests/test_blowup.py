import numpy as np
import pytest

from degob import blowup, catalog
from degob.catalog import CatalogSolution
from degob.grid import GridSpec, PolarTrace, ScalarField

SPEC = GridSpec(256)


def sample(sol, spec=SPEC):
    return catalog.sample_field(sol, spec)


def test_rescale_homogeneous_is_fixed():
    fld = sample(CatalogSolution("single_cone", 1.0))
    for r in (0.5, 0.25):
        out = blowup.rescale(fld, r=r)
        assert np.max(np.abs(out.values - fld.values)[SPEC.inside]) <= 2e-4


def test_rescale_shifted_centre():
    sol = CatalogSolution("full_support")
    fld = sample(sol)
    out = blowup.rescale(fld, x0=(0.2, 0.0), r=0.5)
    X, Y = SPEC.coords
    exact = catalog.evaluate(sol, 0.2 + 0.5 * X, 0.5 * Y) / 0.125
    assert np.max(np.abs(out.values - exact)[SPEC.inside]) <= 1e-3


def test_rescale_rejects_large_ball():
    with pytest.raises(ValueError):
        blowup.rescale(sample(catalog.u_star()), x0=(0.5, 0.0), r=0.6)


@pytest.mark.parametrize(
    "phi0, cls",
    [(np.pi / 81, "regular"), (2 * np.pi / 81, "double_cone"), (np.pi / 27, "triple_or_full"), (0.06, "unclassified")],
)
def test_energy_class(phi0, cls):
    assert blowup.energy_class(phi0) == cls


def test_self_classification_single_cone():
    res = blowup.classify(sample(CatalogSolution("single_cone", 1.0)))
    assert res.energy_class == "regular"
    assert res.best.family == "single_cone"
    assert res.best_theta1 == pytest.approx(1.0, abs=2e-3)
    assert not res.flags


def test_full_support_classification():
    res = blowup.classify(sample(CatalogSolution("full_support", a=0.05)))
    assert res.energy_class == "triple_or_full"
    assert res.best.family == "full_support"
    assert res.best.a == pytest.approx(0.05, abs=1e-3)
    assert abs(res.best.b) <= 1e-3
    assert res.best_theta1 is None


def test_triple_cone_classification():
    res = blowup.classify(sample(CatalogSolution("triple_cone", 0.2)))
    assert res.best.family == "triple_cone"
    assert res.best_theta1 == pytest.approx(0.2, abs=2e-3)


def test_double_cone_classification():
    res = blowup.classify(sample(CatalogSolution("double_cone", 0.3, 1.0)))
    assert res.energy_class == "double_cone"
    assert res.best.theta1 == pytest.approx(0.3, abs=2e-3)
    assert res.best.sigma == pytest.approx(1.0, abs=2e-3)


@pytest.mark.parametrize("shift", [0.4, 2.5])
def test_rotation_equivariance(shift):
    a = blowup.classify(sample(CatalogSolution("single_cone", 1.0))).best_theta1
    b = blowup.classify(sample(CatalogSolution("single_cone", 1.0 + shift))).best_theta1
    d = np.mod(b - a - shift + np.pi, 2 * np.pi) - np.pi
    assert abs(d) <= 2e-3


def test_origin_must_be_free_boundary():
    base = sample(catalog.u_star())
    vals = base.values.copy()
    vals[SPEC.n // 2, SPEC.n // 2] = 1.0
    fld = ScalarField(SPEC, vals)
    with pytest.raises(ValueError):
        blowup.classify(fld)


def test_unclassified_flagged():
    fld = ScalarField(SPEC, 0.3 * sample(catalog.u_star()).values)  # Φ = 0.51 π/81
    res = blowup.classify(fld)
    assert res.energy_class == "unclassified" and "unclassified energy" in res.flags
    assert res.best is None


def _result(radii, l1, noise=None):
    n = len(radii)
    return blowup.BlowupResult(np.asarray(radii), np.zeros(n), np.pi / 81, "regular", catalog.u_star(), 0.0,
                               np.asarray(l1), np.zeros(n), noise_floor=noise)


def test_uniqueness_rate_synthetic():
    r = 0.9 * 2.0 ** (-np.arange(10) / 2)
    fit = blowup.uniqueness_rate(_result(r, 0.2 * r**0.6))
    assert fit.rate == pytest.approx(0.6, rel=1e-10) and fit.used == 10


def test_uniqueness_rate_saturated():
    r = 0.9 * 2.0 ** (-np.arange(10) / 2)
    fit = blowup.uniqueness_rate(_result(r, np.full(10, 1e-8)))
    assert fit.saturated and fit.label == "saturated"


def test_uniqueness_rate_respects_noise_floor():
    r = 0.9 * 2.0 ** (-np.arange(10) / 2)
    l1 = 0.2 * r**0.6
    noise = np.where(np.arange(10) >= 5, 1.0, 0.0)
    fit = blowup.uniqueness_rate(_result(r, l1, noise))
    assert fit.used == 5 and fit.rate == pytest.approx(0.6, rel=1e-10)


def test_homogeneous_profile_distances_small():
    res = blowup.classify(sample(catalog.u_star()))
    assert np.max(res.l1_distance) <= 5e-3
    assert res.best_theta1 == pytest.approx(np.pi / 6, abs=2e-3)


def test_solved_ustar_classifies(ustar_256):
    res = blowup.classify(ustar_256.field)
    assert res.energy_class == "regular"
    assert res.best_theta1 == pytest.approx(np.pi / 6, abs=5e-3)
    assert not res.flags
    d = res.to_dict()
    assert d["class"] == "regular" and len(d["radii"]) == res.radii.size


def test_l1_distance_zero_for_own_trace():
    sol = CatalogSolution("single_cone", 2.0)
    th = 2 * np.pi * np.arange(256) / 256
    assert blowup.l1_distance(PolarTrace(1.0, sol.trace(th)), sol) == 0.0


def test_axis_crossing_ustar():
    fld = sample(catalog.u_star())
    # u* vanishes for y <= 0 on the vertical axis and grows like y^3 above
    assert abs(blowup.axis_crossing(fld)) <= 2 * SPEC.h
