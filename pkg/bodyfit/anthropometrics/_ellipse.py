from __future__ import annotations

import math

import numpy as np
from scipy import linalg, special

from ..errors import DegenerateInput, NotAnEllipse
from .wrappers import EllipseFit

# inverse of the 4AC - B^2 = 1 constraint matrix restricted to (A, B, C)
_CONSTRAINT_INV_ROWS = ((2, 0.5), (1, -1.0), (0, 0.5))


def _check_points(points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if len(np.unique(points, axis=0)) < 6:
        raise DegenerateInput("an ellipse fit needs at least 6 distinct points")
    spread = np.linalg.svd(points - points.mean(axis=0), compute_uv=False)
    if spread[1] <= 1e-9 * spread[0]:
        raise DegenerateInput("points are collinear")
    return points


def direct_conic_fit(points: np.ndarray) -> np.ndarray:
    """
    Direct least-squares ellipse fit.

    Returns the conic coefficients (A, B, C, D, E, F) minimising the algebraic residual
    subject to 4AC - B^2 = 1. The problem is split into its quadratic and linear blocks
    and reduced to a 3x3 eigenproblem, which stays well conditioned for exact data.
    """
    points = _check_points(points)
    x, y = points[:, 0], points[:, 1]
    quadratic = np.column_stack((x * x, x * y, y * y))
    linear = np.column_stack((x, y, np.ones_like(x)))
    s1 = quadratic.T @ quadratic
    s2 = quadratic.T @ linear
    s3 = linear.T @ linear
    try:
        elimination = -np.linalg.solve(s3, s2.T)
    except np.linalg.LinAlgError:
        raise DegenerateInput("points do not span the plane") from None
    reduced = s1 + s2 @ elimination
    reduced = np.stack([reduced[row] * factor for row, factor in _CONSTRAINT_INV_ROWS])

    eigenvalues, eigenvectors = linalg.eig(reduced)
    eigenvectors = np.real(eigenvectors)
    constraint = 4 * eigenvectors[0] * eigenvectors[2] - eigenvectors[1] ** 2
    candidates = np.flatnonzero((constraint > 0) & np.isfinite(np.real(eigenvalues)))
    if len(candidates) == 0:
        raise NotAnEllipse("no eigenvector satisfies the ellipse constraint")

    design = np.hstack((quadratic, linear))
    best = None
    for index in candidates:
        head = eigenvectors[:, index]
        conic = np.concatenate((head, elimination @ head)) / math.sqrt(constraint[index])
        residual = float(np.sum((design @ conic) ** 2))
        if best is None or residual < best[0]:
            best = (residual, conic)
    assert best is not None
    return best[1]


def conic_residual(points: np.ndarray, conic: np.ndarray) -> float:
    x, y = np.asarray(points, dtype=np.float64).T
    design = np.column_stack((x * x, x * y, y * y, x, y, np.ones_like(x)))
    return float(np.sum((design @ conic) ** 2))


def conic_to_ellipse(conic: np.ndarray) -> EllipseFit:
    a_, b_, c_, d_, e_, f_ = (float(value) for value in conic)
    if 4 * a_ * c_ - b_ * b_ <= 0:
        raise NotAnEllipse("conic is not an ellipse")
    x0, y0 = np.linalg.solve([[2 * a_, b_], [b_, 2 * c_]], [-d_, -e_])
    offset = f_ + (d_ * x0 + e_ * y0) / 2
    quadratic = np.array([[a_, b_ / 2], [b_ / 2, c_]])
    if a_ + c_ < 0:
        quadratic, offset = -quadratic, -offset
    eigenvalues, eigenvectors = np.linalg.eigh(quadratic)
    if eigenvalues[0] <= 0 or offset >= 0:
        raise NotAnEllipse("conic has no real points")
    semi_major = math.sqrt(-offset / eigenvalues[0])
    semi_minor = math.sqrt(-offset / eigenvalues[1])
    orientation = math.atan2(eigenvectors[1, 0], eigenvectors[0, 0]) % math.pi
    return EllipseFit((float(x0), float(y0)), semi_major, semi_minor, orientation)


def fit_ellipse(points: np.ndarray) -> EllipseFit:
    """Fit an ellipse to 2D points (in metres) after centring and isotropic scaling."""
    points = _check_points(points)
    mean = points.mean(axis=0)
    scale = math.sqrt(np.mean(np.sum((points - mean) ** 2, axis=1)) / 2)
    fit = conic_to_ellipse(direct_conic_fit((points - mean) / scale))
    return EllipseFit(
        (fit.center[0] * scale + mean[0], fit.center[1] * scale + mean[1]),
        fit.a * scale,
        fit.b * scale,
        fit.orientation,
    )


def ellipse_perimeter(e: EllipseFit, method: str = "ramanujan2") -> float:
    a, b = e.a, e.b
    if method == "ramanujan1":
        return math.pi * (3 * (a + b) - math.sqrt((3 * a + b) * (a + 3 * b)))
    if method != "ramanujan2":
        raise ValueError(f"unknown perimeter method {method!r}")
    h = ((a - b) / (a + b)) ** 2
    return math.pi * (a + b) * (1 + 3 * h / (10 + math.sqrt(4 - 3 * h)))


def elliptic_perimeter(a: float, b: float) -> float:
    """Exact perimeter through the complete elliptic integral of the second kind."""
    major, minor = max(a, b), min(a, b)
    return 4 * major * float(special.ellipe(1 - (minor / major) ** 2))
