from ._axes import derived_joints, estimate_height, limb_lengths, principal_axes
from ._ellipse import (
    conic_residual,
    conic_to_ellipse,
    direct_conic_fit,
    ellipse_perimeter,
    elliptic_perimeter,
    fit_ellipse,
)
from ._measure import Scan, measure_all, measure_girths, measure_scan
from ._sections import cross_section_points
from .wrappers import GIRTH_NAMES, EllipseFit, Measurements, PrincipalAxes, Tolerances

__all__ = (
    "GIRTH_NAMES",
    "EllipseFit",
    "Measurements",
    "PrincipalAxes",
    "Scan",
    "Tolerances",
    "conic_residual",
    "conic_to_ellipse",
    "cross_section_points",
    "derived_joints",
    "direct_conic_fit",
    "ellipse_perimeter",
    "elliptic_perimeter",
    "estimate_height",
    "fit_ellipse",
    "limb_lengths",
    "measure_all",
    "measure_girths",
    "measure_scan",
    "principal_axes",
)
