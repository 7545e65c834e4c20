"""Volumes and areas of geodesic balls, their small-radius series, and the
local isoperimetric margin.

The rotationally symmetric families have closed-form sphere areas
``A(r) = omega_{n-1} w(r)^{n-1}``; volumes are obtained by adaptive radial
quadrature.  Curvature-polynomial metrics (dimension 3 only) use a product
quadrature over the unit sphere, Gauss-Legendre in cos(theta) times a
trapezoid rule in phi, with the order doubled until the result stabilizes.
Since the integrand is analytic on the sphere this converges spectrally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma

from .errors import ModelDomainError, UnsupportedMethodError
from .metric_models import CurvaturePolynomial, MetricModel

__all__ = [
    "unit_ball_volume",
    "unit_sphere_area",
    "BallGeometry",
    "geodesic_ball",
    "sphere_area",
    "ball_volume",
    "v_series",
    "a_series",
    "druet_margin",
    "druet_threshold_radius",
]

RADIAL_QUAD_ABS_TOL = 1e-12
ANGULAR_QUAD_REL_TOL = 1e-12


def unit_ball_volume(n: int) -> float:
    """Volume beta_n of the unit ball in R^n."""
    return math.pi ** (n / 2.0) / gamma(n / 2.0 + 1.0)


def unit_sphere_area(n: int) -> float:
    """Area omega_{n-1} = n beta_n of the unit sphere in R^n."""
    return n * unit_ball_volume(n)


@dataclass(frozen=True)
class BallGeometry:
    """Volume and boundary area of one geodesic ball."""

    radius: float
    volume: float
    area: float
    method: str  # closed_form | quadrature
    quadrature_error: float


# ---------------------------------------------------------------------------
# sphere-area quadrature for curvature-polynomial metrics (n = 3)
# ---------------------------------------------------------------------------

def _sphere_grid(order: int):
    """Product rule on S^2: Gauss-Legendre in u = cos(theta) x trapezoid in phi."""
    u, wu = np.polynomial.legendre.leggauss(order)
    phi = np.arange(2 * order) * (math.pi / order)
    wphi = math.pi / order
    uu, pp = np.meshgrid(u, phi, indexing="ij")
    st = np.sqrt(1.0 - uu**2)
    theta = np.stack(
        [st * np.cos(pp), st * np.sin(pp), uu * np.ones_like(pp)], axis=-1
    ).reshape(-1, 3)
    weights = (wu[:, None] * wphi * np.ones_like(pp)).reshape(-1)
    return theta, weights


def _sqrt_det_integral(model: CurvaturePolynomial, r: float, order: int) -> float:
    theta, w = _sphere_grid(order)
    g = model.metric_at_many(r * theta)
    return float(np.dot(w, np.sqrt(np.linalg.det(g))))


def _angular_order(model: CurvaturePolynomial, r: float) -> tuple[int, float]:
    """Smallest doubled order at which the sphere integral has stabilized."""
    order = 8
    prev = _sqrt_det_integral(model, r, order)
    while order <= 128:
        order *= 2
        cur = _sqrt_det_integral(model, r, order)
        err = abs(cur - prev)
        if err <= ANGULAR_QUAD_REL_TOL * max(abs(cur), 1e-30):
            return order, err
        prev = cur
    return order, err


def _poly_area(model: CurvaturePolynomial, r: float):
    if model.dim != 3:
        raise UnsupportedMethodError(
            "curvature-polynomial areas are supported in dimension 3 only"
        )
    order, err = _angular_order(model, r)
    value = r**2 * _sqrt_det_integral(model, r, order)
    return value, r**2 * err, order


def _check_radius(model: MetricModel, r: float):
    if not r > 0:
        raise ModelDomainError(f"radius must be positive, got {r:g}")
    if r > model.valid_radius * (1 + 1e-12):
        raise ModelDomainError(
            f"radius {r:g} exceeds validity radius {model.valid_radius:g}"
        )


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def sphere_area(model: MetricModel, r: float) -> float:
    """Boundary area A(r) of the geodesic ball of radius r."""
    _check_radius(model, r)
    if model.is_rotationally_symmetric:
        omega = unit_sphere_area(model.dim)
        return float(omega * model.warp.value(r) ** (model.dim - 1))
    value, _, _ = _poly_area(model, r)
    return value


def ball_volume(model: MetricModel, r: float) -> float:
    """Volume V(r) of the geodesic ball of radius r."""
    return geodesic_ball(model, r).volume


def geodesic_ball(model: MetricModel, r: float) -> BallGeometry:
    """Volume and area together, with the quadrature error estimate."""
    _check_radius(model, r)
    if model.is_rotationally_symmetric:
        omega = unit_sphere_area(model.dim)
        area = float(omega * model.warp.value(r) ** (model.dim - 1))
        vol, vol_err = quad(
            lambda t: omega * model.warp.value(t) ** (model.dim - 1),
            0.0,
            r,
            epsabs=RADIAL_QUAD_ABS_TOL,
            epsrel=1e-13,
            limit=200,
        )
        return BallGeometry(r, float(vol), area, "closed_form", float(vol_err))
    area, area_err, order = _poly_area(model, r)
    vol, vol_err = quad(
        lambda t: t**2 * _sqrt_det_integral(model, t, order) if t > 0 else 0.0,
        0.0,
        r,
        epsabs=RADIAL_QUAD_ABS_TOL,
        epsrel=1e-13,
        limit=200,
    )
    return BallGeometry(r, float(vol), area, "quadrature", float(max(area_err, vol_err)))


def v_series(n: int, S: float, r: float) -> float:
    """Two-term volume series beta_n r^n (1 - S r^2 / (6(n+2)))."""
    if n < 3:
        raise ValueError("series defined for n >= 3")
    return unit_ball_volume(n) * r**n * (1.0 - S * r**2 / (6.0 * (n + 2)))


def a_series(n: int, S: float, r: float) -> float:
    """Two-term area series omega_{n-1} r^(n-1) (1 - S r^2 / (6n))."""
    if n < 3:
        raise ValueError("series defined for n >= 3")
    return unit_sphere_area(n) * r ** (n - 1) * (1.0 - S * r**2 / (6.0 * n))


def druet_margin(model: MetricModel, region_radius: float, epsilon: float) -> float:
    """Slack in the local isoperimetric inequality for a geodesic ball.

    Returns ``A^2 - [n^2 beta_n^(2/n) V^(2(n-1)/n) - (n S/(n+2) + eps) V^2]``
    evaluated with the computed area and volume; nonnegative means the
    inequality holds for this ball.  Vanishes identically for Euclidean
    balls at eps = 0.
    """
    geom = geodesic_ball(model, region_radius)
    n = model.dim
    beta = unit_ball_volume(n)
    S = model.scalar_curvature()
    rhs = n**2 * beta ** (2.0 / n) * geom.volume ** (2.0 * (n - 1) / n) - (
        n * S / (n + 2.0) + epsilon
    ) * geom.volume**2
    return geom.area**2 - rhs


def druet_threshold_radius(model: MetricModel, epsilon: float, radii) -> float | None:
    """Largest sampled radius below which all sampled margins are nonnegative.

    The inequality only promises a positive threshold without quantifying
    it, so the laboratory reports the empirical one: the largest radius R
    among ``radii`` such that every sampled radius <= R has margin >= 0.
    Returns None if even the smallest sampled radius fails.
    """
    radii = sorted(float(r) for r in radii)
    threshold = None
    for r in radii:
        if druet_margin(model, r, epsilon) >= 0.0:
            threshold = r
        else:
            break
    return threshold
