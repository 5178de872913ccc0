import xml.etree.ElementTree as ET

import numpy as np
import pytest

from degob import catalog, freeboundary, svg
from degob.grid import GridSpec, ScalarField

SPEC = GridSpec(256)


def ray_distance(pts, angle):
    e = np.array([np.cos(angle), np.sin(angle)])
    s = np.clip(pts @ e, 0.0, None)
    return np.hypot(*(pts - s[:, None] * e[None, :]).T)


def test_ustar_polylines_end_on_rays(tmp_path):
    fld = catalog.sample_field(catalog.u_star(), SPEC)
    path = svg.emit_svg(fld, str(tmp_path / "u.svg"))
    lines = svg.read_polylines(path)
    assert {"left", "right"} <= set(lines)
    for name, angle in (("right", np.pi / 6), ("left", 5 * np.pi / 6)):
        pts = lines[name]
        ends = pts[[0, -1]]
        assert np.all(ray_distance(ends, angle) <= 3 * SPEC.h)
        # and every vertex, not just the ends
        assert np.all(ray_distance(pts, angle) <= 3 * SPEC.h)
    assert svg.count_shaded(path) > 0


def test_reference_rays_drawn(tmp_path):
    path = svg.emit_svg(catalog.sample_field(catalog.u_star(), GridSpec(64)), str(tmp_path / "r.svg"), theta1=0.4)
    root = ET.parse(path).getroot()
    rays = root.findall(f".//{{{svg.SVG_NS}}}g[@id='reference-rays']/{{{svg.SVG_NS}}}line")
    ends = sorted((float(r.get("x2")), float(r.get("y2"))) for r in rays)
    expect = sorted((np.cos(a), np.sin(a)) for a in (0.4, 0.4 + 2 * np.pi / 3))
    assert np.allclose(ends, expect, atol=1e-6)


def test_empty_curve_gives_shading_only(tmp_path):
    # positive on the whole disk: no free boundary to draw
    spec = GridSpec(64)
    fld = ScalarField(spec, np.where(spec.inside, 1.0, 0.0))
    with pytest.raises(freeboundary.ExtractionError):
        freeboundary.extract(fld)
    path = svg.emit_svg(fld, str(tmp_path / "e.svg"))
    assert svg.read_polylines(path) == {}
    assert svg.count_shaded(path) > 0


def test_zero_field_renders(tmp_path):
    path = svg.emit_svg(ScalarField.zeros(GridSpec(64)), str(tmp_path / "z.svg"))
    assert svg.read_polylines(path) == {} and svg.count_shaded(path) == 0


def test_solved_field_has_no_nan(tmp_path, ustar_128):
    path = svg.emit_svg(ustar_128.field, str(tmp_path / "s.svg"))
    text = open(path).read()
    assert "nan" not in text.lower() and "inf" not in text.lower()
    for pts in svg.read_polylines(path).values():
        assert np.all(np.isfinite(pts))


def test_curve_input(tmp_path):
    curve = freeboundary.extract(catalog.sample_field(catalog.u_star(), GridSpec(128)))
    path = svg.emit_svg(curve, str(tmp_path / "c.svg"))
    total = sum(p.shape[0] for p in svg.read_polylines(path).values())
    assert total == len(curve)


def test_nonfinite_rejected(tmp_path):
    with pytest.raises(ValueError):
        svg._fmt(np.nan)
    with pytest.raises(TypeError):
        svg.emit_svg("field.csv", str(tmp_path / "x.svg"))
