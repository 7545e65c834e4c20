"""Relative capacities of concentric geodesic balls.

Four routes are provided:

* ``euclidean_relative_capacity``: closed forms for concentric Euclidean
  balls, including the one- and two-dimensional interpretations
  (1/((lam-1) r) and 1/log(lam)) and the limit of infinite outer radius.
* ``symmetric_capacity``: exact quadrature value for rotationally symmetric
  models, where the radial harmonic function is the true minimizer and the
  area-profile formula is sharp.
* ``szego_upper_bound``: the same area-profile formula on any model; for a
  non-symmetric metric it is an upper bound for the capacity.
* ``variational_capacity``: direct minimization of the discrete Dirichlet
  energy (dimension 3), converging to the capacity from above.

All values are normalized by 1/((n-2) omega_{n-1}) so that the capacity of
the unit ball relative to all of Euclidean space is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ._solver import (
    DiscreteSolution,
    GridResolution,
    HarmonicField,
    discrete_flat_capacity,
    gradient_magnitudes,
    solve_annulus,
)
from .ball_geometry import _angular_order, _sqrt_det_integral, unit_sphere_area
from .errors import ModelDomainError, UnsupportedMethodError
from .metric_models import CurvaturePolynomial, MetricModel

__all__ = [
    "CapacityQuery",
    "CapacityResult",
    "HarmonicProbeResult",
    "euclidean_relative_capacity",
    "symmetric_capacity",
    "szego_upper_bound",
    "variational_capacity",
    "harmonic_probe",
    "dump_harmonic_field",
    "DEFAULT_LEVEL",
]

DEFAULT_LEVEL = 48


def euclidean_relative_capacity(n: int, r1: float, r2: float = math.inf) -> float:
    """Capacity c_n(r1, r2) of concentric Euclidean balls, r1 < r2.

    For n >= 3 this is 1/(r1^(2-n) - r2^(2-n)); r2 = inf gives r1^(n-2).
    The low-dimensional values 1/log(r2/r1) (n = 2) and 1/(r2 - r1) (n = 1)
    are the natural one- and two-dimensional relative capacities.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if not 0 < r1 < r2:
        raise ValueError(f"need 0 < r1 < r2, got r1={r1:g}, r2={r2:g}")
    if math.isinf(r2):
        if n < 3:
            raise ValueError("infinite outer radius needs n >= 3")
        return r1 ** (n - 2)
    if n == 1:
        return 1.0 / (r2 - r1)
    if n == 2:
        return 1.0 / math.log(r2 / r1)
    return 1.0 / (r1 ** (2 - n) - r2 ** (2 - n))


@dataclass(frozen=True)
class CapacityQuery:
    """A model together with the inner radius r and ratio lam > 1."""

    model: MetricModel
    inner_radius: float
    ratio: float

    def __post_init__(self):
        if self.inner_radius <= 0:
            raise ModelDomainError(f"inner radius must be positive, got {self.inner_radius:g}")
        if self.ratio <= 1.0:
            raise ModelDomainError(f"ratio must exceed 1, got {self.ratio:g}")
        outer = self.inner_radius * self.ratio
        if outer > self.model.valid_radius * (1 + 1e-12):
            raise ModelDomainError(
                f"outer radius {outer:g} exceeds validity radius "
                f"{self.model.valid_radius:g} of {self.model.label}"
            )

    @property
    def outer_radius(self) -> float:
        return self.inner_radius * self.ratio

    @property
    def euclidean_value(self) -> float:
        return euclidean_relative_capacity(
            self.model.dim, self.inner_radius, self.outer_radius
        )


@dataclass(frozen=True)
class CapacityResult:
    """A computed capacity with its method tag and error estimate.

    ``deficit`` is 1 - value / c_n(r, lam r).  For the variational method
    the value is the energy of a feasible discrete competitor and therefore
    an upper bound for the capacity up to discretization error;
    ``refinement`` records the (level, value) ladder whose last gap is the
    reported error estimate.
    """

    value: float
    method: str  # euclidean_closed_form | symmetric_quadrature | variational
    error_estimate: float
    euclidean_reference: float
    deficit: float
    upper_bound_only: bool = False
    refinement: tuple = field(default=())


@dataclass(frozen=True)
class HarmonicProbeResult:
    """Deviation of the annulus harmonic function from its Euclidean model.

    ``sup_deviation`` is the sup-norm distance to the radial profile
    (1 - (r/|y|)^(n-2)) / (1 - lam^(2-n)); ``gradient_deviation`` the
    sup-norm distance of |grad u| to (n-2) c_n(r, lam r) |y|^(1-n).  The
    first scales like r^2, the second like r; the implied constants are
    reported empirically, no specific value is asserted.
    """

    sup_deviation: float
    gradient_deviation: float
    radius: float

    @property
    def empirical_constants(self) -> tuple[float, float]:
        """(sup_deviation / r^2, gradient_deviation / r)."""
        return self.sup_deviation / self.radius**2, self.gradient_deviation / self.radius


# ---------------------------------------------------------------------------
# area-profile quadrature (sharp for symmetric models, upper bound otherwise)
# ---------------------------------------------------------------------------

def _area_profile_result(query: CapacityQuery, upper_bound_only: bool) -> CapacityResult:
    model = query.model
    n = model.dim
    omega = unit_sphere_area(n)
    r1, r2 = query.inner_radius, query.outer_radius

    if model.is_rotationally_symmetric:
        def recip_area(t):
            return 1.0 / (omega * model.warp.value(t) ** (n - 1))
    else:
        if not isinstance(model, CurvaturePolynomial) or n != 3:
            raise UnsupportedMethodError(
                f"no area profile available for {model.label}"
            )
        order, _ = _angular_order(model, r2)

        def recip_area(t):
            return 1.0 / (t**2 * _sqrt_det_integral(model, t, order))

    integral, abserr = quad(recip_area, r1, r2, epsabs=0.0, epsrel=1e-13, limit=200)
    value = 1.0 / ((n - 2) * omega * integral)
    error = value * abserr / integral
    reference = query.euclidean_value
    return CapacityResult(
        value=value,
        method="symmetric_quadrature",
        error_estimate=error,
        euclidean_reference=reference,
        deficit=1.0 - value / reference,
        upper_bound_only=upper_bound_only,
    )


def symmetric_capacity(query: CapacityQuery) -> CapacityResult:
    """Exact capacity of a rotationally symmetric model by radial quadrature.

    The value is [(n-2) omega_{n-1}]^{-1} [int_r^{lam r} dt/A(t)]^{-1}; on a
    symmetric model the radial harmonic function realizes the minimum, so
    this is the capacity itself, not merely a bound.
    """
    if not query.model.is_rotationally_symmetric:
        raise UnsupportedMethodError(
            f"{query.model.label} is not rotationally symmetric; "
            "use szego_upper_bound or variational_capacity"
        )
    return _area_profile_result(query, upper_bound_only=False)


def szego_upper_bound(query: CapacityQuery) -> CapacityResult:
    """Area-profile capacity bound, valid for any model with computable A(t).

    Coincides with ``symmetric_capacity`` (same code path) when the model is
    rotationally symmetric; otherwise the result is tagged as an upper bound
    only.
    """
    return _area_profile_result(
        query, upper_bound_only=not query.model.is_rotationally_symmetric
    )


# ---------------------------------------------------------------------------
# variational route
# ---------------------------------------------------------------------------

def _resolution_ladder(resolution, levels) -> list:
    if levels is not None:
        ladder = list(levels)
        if not ladder:
            raise ValueError("levels must be non-empty")
        return ladder
    level = DEFAULT_LEVEL if resolution is None else resolution
    if isinstance(level, GridResolution):
        return [GridResolution(max(4, level.n_rho // 2), max(2, level.n_theta // 2),
                               max(4, level.n_phi // 2)), level]
    level = int(level)
    return [max(4, level // 2), level]


def variational_capacity(
    query: CapacityQuery, resolution=None, *, levels=None
) -> tuple[CapacityResult, HarmonicField]:
    """Capacity by direct minimization of the discrete Dirichlet energy.

    Solves a ladder of grid levels (by default the requested level and its
    dyadic coarsening); the value is taken from the finest grid and the gap
    between the two finest levels is reported as the error estimate, never
    silently consumed.  Returns the result together with the discrete
    harmonic field of the finest solve.
    """
    ladder = _resolution_ladder(resolution, levels)
    solutions: list[tuple[object, DiscreteSolution]] = []
    for level in ladder:
        sol = solve_annulus(query.model, query.inner_radius, query.ratio, level)
        solutions.append((level, sol))
    values = [sol.capacity for _, sol in solutions]
    error = abs(values[-1] - values[-2]) if len(values) >= 2 else math.nan
    reference = query.euclidean_value
    result = CapacityResult(
        value=values[-1],
        method="variational",
        error_estimate=error,
        euclidean_reference=reference,
        deficit=1.0 - values[-1] / reference,
        refinement=tuple(
            (lvl if isinstance(lvl, int) else getattr(lvl, "label", str(lvl)), val)
            for (lvl, _), val in zip(solutions, values)
        ),
    )
    final = solutions[-1][1]
    return result, HarmonicField(grid=final.grid, values=final.values)


def dump_harmonic_field(field_obj: HarmonicField, path) -> None:
    """Write the discrete harmonic field as a CSV of node coordinates + value."""
    field_obj.write_csv(path)


# ---------------------------------------------------------------------------
# harmonic-function probe
# ---------------------------------------------------------------------------

def _radial_solution(query: CapacityQuery, n_samples: int = 2048):
    """Exact radial harmonic profile of a symmetric model on a dense grid.

    Returns (rho, u, du/drho) with u(rho) = I(rho)/I(lam r) for
    I(rho) = int_r^rho dt/A(t), accumulated by per-interval Gauss rules.
    """
    model = query.model
    n = model.dim
    omega = unit_sphere_area(n)
    edges = np.linspace(query.inner_radius, query.outer_radius, n_samples + 1)
    x, wts = np.polynomial.legendre.leggauss(8)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    pts = mid[:, None] + half[:, None] * x[None, :]
    recip = 1.0 / (omega * model.warp.value(pts) ** (n - 1))
    segments = (recip * wts).sum(axis=1) * half
    integral = np.concatenate([[0.0], np.cumsum(segments)])
    total = integral[-1]
    u = integral / total
    du = 1.0 / (omega * model.warp.value(edges) ** (n - 1)) / total
    return edges, u, du


def _euclidean_profile(n: int, r: float, lam: float, rho: np.ndarray) -> np.ndarray:
    return (1.0 - (r / rho) ** (n - 2)) / (1.0 - lam ** (2 - n))


def harmonic_probe(query: CapacityQuery, resolution=None) -> HarmonicProbeResult:
    """Measure how far the annulus harmonic function is from radial Euclidean.

    Symmetric models use the exact radial solution; other models probe the
    discrete minimizer of ``variational_capacity``.
    """
    model = query.model
    n = model.dim
    r, lam = query.inner_radius, query.ratio
    grad_model_coeff = (n - 2) * query.euclidean_value

    if model.is_rotationally_symmetric:
        rho, u, du = _radial_solution(query)
        sup_dev = float(np.max(np.abs(u - _euclidean_profile(n, r, lam, rho))))
        grad_dev = float(np.max(np.abs(du - grad_model_coeff * rho ** (1 - n))))
        return HarmonicProbeResult(sup_dev, grad_dev, r)

    level = DEFAULT_LEVEL if resolution is None else resolution
    sol = solve_annulus(model, r, lam, level)
    rho_nodes = np.linalg.norm(sol.grid.node_positions(), axis=1)
    sup_dev = float(
        np.max(np.abs(sol.values - _euclidean_profile(n, r, lam, rho_nodes)))
    )
    radii, mags = gradient_magnitudes(model, sol)
    grad_dev = float(np.max(np.abs(mags - grad_model_coeff * radii ** (1 - n))))
    return HarmonicProbeResult(sup_dev, grad_dev, r)
