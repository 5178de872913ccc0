"""Static SVG rendering of a field's positive set, its free boundary and the
reference rays of a single-cone profile.

Coordinates in the file are the disk coordinates themselves (``viewBox`` is
``[-1, 1]²``) inside a group flipped with ``scale(1,-1)``, so parsers can
read points back without any transform.
"""

import logging
import re
import xml.etree.ElementTree as ET

import numpy as np

from . import freeboundary
from .catalog import CONE_WIDTH
from .freeboundary import FreeBoundaryCurve
from .grid import ScalarField

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
PIXELS = 512


def _fmt(v):
    if not np.isfinite(v):
        raise ValueError("non-finite coordinate in SVG output")
    return f"{v:.6f}"


def _positive_runs(fld, c_thr):
    """Rectangles ``(x0, y0, w, h)`` covering positive nodes, merged along rows."""
    spec = fld.spec
    h = spec.h
    pos = spec.inside & (fld.values > freeboundary.threshold(spec, c_thr=c_thr))
    axis = spec.axis
    rects = []
    for j in range(spec.n + 1):
        col = pos[:, j]
        if not col.any():
            continue
        d = np.diff(np.concatenate(([0], col.astype(np.int8), [0])))
        starts = np.nonzero(d == 1)[0]
        stops = np.nonzero(d == -1)[0]
        for a, b in zip(starts, stops):
            rects.append((axis[a] - h / 2, axis[j] - h / 2, (b - a) * h, h))
    return rects


def _branches(curve):
    out = []
    for name in ("left", "near-origin", "right"):
        pts = curve.branch(name)
        if pts.shape[0] == 0:
            continue
        pts = pts[np.argsort(np.hypot(pts[:, 0], pts[:, 1]))]
        out.append((name, pts))
    return out


def emit_svg(source, path, theta1=np.pi / 6, c_thr=freeboundary.C_THR, pixels=PIXELS):
    """Write the SVG for a field or an extracted curve; returns the path.

    A field whose free boundary cannot be extracted is drawn with shading only.
    """
    if isinstance(source, FreeBoundaryCurve):
        curve, fld = source, source.field
    elif isinstance(source, ScalarField):
        fld = source
        try:
            curve = freeboundary.extract(fld, c_thr)
        except freeboundary.ExtractionError as exc:
            logger.info("no free boundary drawn: %s", exc)
            curve = None
    else:
        raise TypeError(f"cannot render {type(source).__name__}")

    root = ET.Element("svg", xmlns=SVG_NS, width=str(pixels), height=str(pixels), viewBox="-1 -1 2 2")
    g = ET.SubElement(root, "g", transform="scale(1,-1)")
    ET.SubElement(g, "circle", cx="0", cy="0", r="1", fill="none", stroke="#444", **{"stroke-width": "0.004"})
    shade = ET.SubElement(g, "g", id="positive-set", fill="#9ecae1", stroke="none")
    for x, y, w, h in _positive_runs(fld, c_thr):
        ET.SubElement(shade, "rect", x=_fmt(x), y=_fmt(y), width=_fmt(w), height=_fmt(h))
    rays = ET.SubElement(g, "g", id="reference-rays", stroke="#d62728", fill="none",
                         **{"stroke-width": "0.004", "stroke-dasharray": "0.02 0.015"})
    for a in (theta1, theta1 + CONE_WIDTH):
        ET.SubElement(rays, "line", x1="0", y1="0", x2=_fmt(np.cos(a)), y2=_fmt(np.sin(a)))
    if curve is not None and len(curve):
        lines = ET.SubElement(g, "g", id="free-boundary", stroke="#08306b", fill="none",
                              **{"stroke-width": "0.006"})
        for name, pts in _branches(curve):
            coords = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in pts)
            ET.SubElement(lines, "polyline", points=coords, **{"class": name})
    ET.ElementTree(root).write(path, encoding="utf-8", xml_declaration=True)
    return path


def read_polylines(path):
    """``{class: (k, 2) array}`` of the free-boundary polylines in an SVG."""
    tree = ET.parse(path)
    out = {}
    for el in tree.iter(f"{{{SVG_NS}}}polyline"):
        nums = [float(v) for v in re.split(r"[ ,]+", el.get("points").strip())]
        out[el.get("class")] = np.array(nums).reshape(-1, 2)
    return out


def count_shaded(path):
    tree = ET.parse(path)
    return sum(1 for _ in tree.iter(f"{{{SVG_NS}}}rect"))
