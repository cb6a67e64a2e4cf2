"""Intersection representations of planar triangulations by homothetic right triangles."""

from tricontact.geometry import (
    Tri,
    NegTri,
    Point,
    Overlap,
    frac,
    frac_str,
    signed_height,
    intersect,
    common_intersection,
)

__version__ = "0.1.0"

__all__ = [
    "Tri",
    "NegTri",
    "Point",
    "Overlap",
    "frac",
    "frac_str",
    "signed_height",
    "intersect",
    "common_intersection",
    "__version__",
]
