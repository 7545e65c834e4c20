"""Model Riemannian manifolds with a distinguished base point.

Every model is presented in geodesic normal coordinates ``y`` centered at the
base point ``p``, arranged so that the coordinate spheres ``|y| = const`` are
exact geodesic spheres.  This holds by construction for the rotationally
symmetric families (space forms and warped products, written in geodesic
polar coordinates) and, for the curvature-polynomial family, as a consequence
of the algebraic symmetries of the curvature tensor (the radial identity
``g_ij(y) y^j = y_i``).  No geodesic integration is ever performed.

Three families are provided:

``SpaceForm``
    Constant sectional curvature ``K``; scalar curvature ``n(n-1)K`` at ``p``.

``WarpedProduct``
    ``d rho^2 + w(rho)^2 g_{S^{n-1}}`` for a closed-form warp ``w`` with
    ``w(0)=0, w'(0)=1, w''(0)=0``; scalar curvature ``n(n-1)c`` at ``p``
    where ``c = -w'''(0)``.

``CurvaturePolynomial``
    The quadratic truncation ``g_ij(y) = delta_ij - (1/3) R_{ikjl} y^k y^l``
    of a metric whose curvature tensor at ``p`` is ``R``.  The truncation is
    itself a genuine smooth metric on ``|y| <= valid_radius`` and has the
    prescribed curvature tensor at the origin; away from the origin its
    curvature differs at order ``|y|^2``, which only perturbs terms beyond
    the ones this laboratory measures.

Tensor indices in the public API are 1-based, matching the usual
``R_{ikjl}`` component notation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import ModelDomainError, ModelValidationError

__all__ = [
    "CurvatureTensor",
    "WarpProfile",
    "MetricModel",
    "SpaceForm",
    "WarpedProduct",
    "CurvaturePolynomial",
    "ValidationReport",
    "validate",
]

SYMMETRY_TOL = 1e-12

# Sampling used for positive-definiteness scans (points per axis).
_GRID_POINTS_PER_AXIS = 20
_MIN_EIG_FLOOR = 0.5


# ---------------------------------------------------------------------------
# curvature tensors
# ---------------------------------------------------------------------------

class CurvatureTensor:
    """Algebraic curvature tensor ``R_{ikjl}`` at a point, dimension >= 3.

    Components are stored densely; construction from a sparse component map
    or from generators (closed under the algebraic symmetries automatically)
    is provided.  All public index tuples are 1-based.
    """

    def __init__(self, dim: int, components: np.ndarray):
        if dim < 3:
            raise ModelValidationError(f"curvature tensor needs dim >= 3, got {dim}")
        components = np.asarray(components, dtype=float)
        if components.shape != (dim,) * 4:
            raise ModelValidationError(
                f"component array must have shape {(dim,)*4}, got {components.shape}"
            )
        self.dim = dim
        self._c = components
        self._c.setflags(write=False)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_components(cls, dim: int, components: dict[tuple[int, int, int, int], float]):
        """Build from an explicit {(i,k,j,l): value} map (1-based indices).

        Unspecified components default to zero.  The given components are
        stored as-is; symmetry violations are caught by ``validate``/the
        model constructor, not silently repaired.
        """
        arr = np.zeros((dim,) * 4)
        for idx, val in components.items():
            cls._check_index(dim, idx)
            i, k, j, l = (a - 1 for a in idx)
            arr[i, k, j, l] = val
        return cls(dim, arr)

    @classmethod
    def from_generators(cls, dim: int, generators) -> "CurvatureTensor":
        """Build from ``(i, k, j, l, value)`` generators (1-based).

        Each generator is expanded to its orbit under the pair symmetry and
        the two antisymmetries.  Conflicting generator orbits raise.
        """
        arr = np.zeros((dim,) * 4)
        seen: dict[tuple[int, int, int, int], float] = {}
        for gen in generators:
            i, k, j, l, val = gen
            cls._check_index(dim, (i, k, j, l))
            i, k, j, l = i - 1, k - 1, j - 1, l - 1
            for idx, v in _symmetry_orbit(i, k, j, l, float(val)):
                if idx in seen and abs(seen[idx] - v) > SYMMETRY_TOL:
                    raise ModelValidationError(
                        f"conflicting generator values for component {tuple(a+1 for a in idx)}"
                    )
                seen[idx] = v
                arr[idx] = v
        return cls(dim, arr)

    @classmethod
    def space_form(cls, dim: int, curvature: float) -> "CurvatureTensor":
        """Constant-curvature tensor ``K (d_ij d_kl - d_il d_kj)``."""
        eye = np.eye(dim)
        arr = curvature * (
            np.einsum("ij,kl->ikjl", eye, eye) - np.einsum("il,kj->ikjl", eye, eye)
        )
        return cls(dim, arr)

    @staticmethod
    def _check_index(dim, idx):
        if len(idx) != 4 or any(not (1 <= a <= dim) for a in idx):
            raise ModelValidationError(f"index {idx} out of range for dim {dim}")

    # -- queries -----------------------------------------------------------

    @property
    def components(self) -> np.ndarray:
        return self._c

    def component(self, i: int, k: int, j: int, l: int) -> float:
        """Component R_{ikjl} with 1-based indices."""
        self._check_index(self.dim, (i, k, j, l))
        return float(self._c[i - 1, k - 1, j - 1, l - 1])

    def scalar_trace(self) -> float:
        """Scalar curvature ``sum_{i,k} R_{ikik}``."""
        return float(np.einsum("ikik->", self._c))

    def symmetry_violation(self) -> float:
        """Worst absolute violation of the algebraic identities.

        Checks antisymmetry in the first and last index pairs, pair symmetry,
        and the first Bianchi identity.
        """
        c = self._c
        v = max(
            np.max(np.abs(c + np.transpose(c, (1, 0, 2, 3)))),
            np.max(np.abs(c + np.transpose(c, (0, 1, 3, 2)))),
            np.max(np.abs(c - np.transpose(c, (2, 3, 0, 1)))),
            # R_{ikjl} + R_{ijlk} + R_{ilkj} = 0
            np.max(
                np.abs(
                    c
                    + np.transpose(c, (0, 2, 3, 1))
                    + np.transpose(c, (0, 3, 1, 2))
                )
            ),
        )
        return float(v)

    def quadratic_form(self, Y: np.ndarray) -> np.ndarray:
        """``M_ij(y) = R_{ikjl} y^k y^l`` for a batch of points (m, n)."""
        return np.einsum("ikjl,mk,ml->mij", self._c, Y, Y)

    def __repr__(self):
        nz = int(np.count_nonzero(self._c))
        return f"CurvatureTensor(dim={self.dim}, nonzero={nz}, trace={self.scalar_trace():g})"


def _symmetry_orbit(i, k, j, l, v):
    yield (i, k, j, l), v
    yield (k, i, j, l), -v
    yield (i, k, l, j), -v
    yield (k, i, l, j), v
    yield (j, l, i, k), v
    yield (l, j, i, k), -v
    yield (j, l, k, i), -v
    yield (l, j, k, i), v


# ---------------------------------------------------------------------------
# warp profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WarpProfile:
    """Closed-form warp function family with analytic derivatives.

    Supported kinds:

    * ``sin``:     w(t) = sin(sqrt(k) t)/sqrt(k), parameter k > 0
    * ``sinh``:    w(t) = sinh(sqrt(m) t)/sqrt(m), parameter m > 0 (c = -m)
    * ``linear``:  w(t) = t
    * ``quintic``: w(t) = t + a t^5 (scalar-flat at the center, non-flat)

    All satisfy w(0)=0, w'(0)=1, w''(0)=0, so that the warped metric is
    smooth at the center and ``|y|`` is geodesic distance.
    """

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sin", "sinh", "linear", "quintic"):
            raise ModelValidationError(f"unknown warp kind {self.kind!r}")
        if self.kind in ("sin", "sinh") and self.param <= 0:
            raise ModelValidationError(f"warp {self.kind!r} needs a positive parameter")

    @classmethod
    def space_form(cls, curvature: float) -> "WarpProfile":
        if curvature > 0:
            return cls("sin", curvature)
        if curvature < 0:
            return cls("sinh", -curvature)
        return cls("linear")

    def value(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sin":
            s = math.sqrt(self.param)
            return np.sin(s * t) / s
        if self.kind == "sinh":
            s = math.sqrt(self.param)
            return np.sinh(s * t) / s
        if self.kind == "quintic":
            return t + self.param * t**5
        return t

    def deriv(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "sin":
            return np.cos(math.sqrt(self.param) * t)
        if self.kind == "sinh":
            return np.cosh(math.sqrt(self.param) * t)
        if self.kind == "quintic":
            return 1.0 + 5.0 * self.param * t**4
        return np.ones_like(t)

    def ratio(self, t):
        """w(t)/t, continuous at t = 0."""
        t = np.asarray(t, dtype=float)
        out = np.ones_like(t)
        nz = t != 0
        out[nz] = self.value(t[nz]) / t[nz]
        return out

    @property
    def center_curvature(self) -> float:
        """Sectional curvature at the center, ``-w'''(0)``."""
        if self.kind == "sin":
            return self.param
        if self.kind == "sinh":
            return -self.param
        return 0.0

    @property
    def natural_radius(self) -> float:
        """Largest radius on which the warp keeps the metric positive."""
        if self.kind == "sin":
            return (1.0 - 1e-9) * math.pi / math.sqrt(self.param)
        if self.kind == "quintic" and self.param < 0:
            return (1.0 - 1e-9) * (-1.0 / self.param) ** 0.25
        return math.inf

    @property
    def label(self) -> str:
        if self.kind in ("sin", "sinh"):
            return f"{self.kind}({self.param:g})"
        if self.kind == "quintic":
            return f"quintic({self.param:g})"
        return "linear"


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

class MetricModel:
    """Common interface of the three model families.

    Instances are immutable after validated construction; all queries are
    pure, so any number of threads may share a model.
    """

    dim: int
    valid_radius: float

    @property
    def is_rotationally_symmetric(self) -> bool:
        raise NotImplementedError

    def scalar_curvature(self) -> float:
        """Scalar curvature at the base point (analytic, no differencing)."""
        raise NotImplementedError

    def metric_at_many(self, Y: np.ndarray) -> np.ndarray:
        """Metric components g_ij at a batch of points, shape (m, n, n)."""
        raise NotImplementedError

    def metric_at(self, y) -> np.ndarray:
        """Metric components g_ij(y) as a symmetric (n, n) matrix."""
        y = np.asarray(y, dtype=float)
        if y.shape != (self.dim,):
            raise ModelDomainError(f"point must have shape ({self.dim},), got {y.shape}")
        self._check_radius(float(np.linalg.norm(y)))
        return self.metric_at_many(y[None, :])[0]

    def _check_radius(self, rho: float, what: str = "point"):
        if rho > self.valid_radius * (1 + 1e-12):
            raise ModelDomainError(
                f"{what} at distance {rho:g} exceeds validity radius {self.valid_radius:g}"
            )

    @property
    def label(self) -> str:
        raise NotImplementedError

    def __repr__(self):
        return self.label


@dataclass(frozen=True, repr=False)
class SpaceForm(MetricModel):
    """Simply connected space form of constant sectional curvature."""

    dim: int
    sectional_curvature: float
    valid_radius: float = field(default=math.nan)

    def __post_init__(self):
        if self.dim < 3:
            raise ModelValidationError("space form needs dim >= 3")
        if math.isnan(self.valid_radius):
            object.__setattr__(
                self, "valid_radius", self.warp.natural_radius
            )

    @property
    def warp(self) -> WarpProfile:
        return WarpProfile.space_form(self.sectional_curvature)

    @property
    def is_rotationally_symmetric(self) -> bool:
        return True

    def scalar_curvature(self) -> float:
        return self.dim * (self.dim - 1) * self.sectional_curvature

    def metric_at_many(self, Y: np.ndarray) -> np.ndarray:
        return _warped_metric_batch(self.warp, np.asarray(Y, dtype=float))

    @property
    def label(self) -> str:
        return f"space_form(n={self.dim},K={self.sectional_curvature:g})"


@dataclass(frozen=True, repr=False)
class WarpedProduct(MetricModel):
    """Rotationally symmetric metric ``d rho^2 + w(rho)^2 g_{S^{n-1}}``."""

    dim: int
    warp: WarpProfile
    valid_radius: float = field(default=math.nan)

    def __post_init__(self):
        if self.dim < 3:
            raise ModelValidationError("warped product needs dim >= 3")
        if math.isnan(self.valid_radius):
            object.__setattr__(self, "valid_radius", self.warp.natural_radius)

    @property
    def is_rotationally_symmetric(self) -> bool:
        return True

    def scalar_curvature(self) -> float:
        return self.dim * (self.dim - 1) * self.warp.center_curvature

    def metric_at_many(self, Y: np.ndarray) -> np.ndarray:
        return _warped_metric_batch(self.warp, np.asarray(Y, dtype=float))

    @property
    def label(self) -> str:
        return f"warped(n={self.dim},{self.warp.label})"


@dataclass(frozen=True, repr=False)
class CurvaturePolynomial(MetricModel):
    """Quadratic normal-coordinate truncation of a metric with tensor R at p."""

    tensor: CurvatureTensor
    valid_radius: float = field(default=math.nan)

    def __post_init__(self):
        worst = self.tensor.symmetry_violation()
        if worst > SYMMETRY_TOL:
            raise ModelValidationError(
                f"curvature tensor violates algebraic symmetries by {worst:.3e}"
            )
        if math.isnan(self.valid_radius):
            object.__setattr__(self, "valid_radius", _default_poly_radius(self.tensor))
        else:
            if self.valid_radius <= 0:
                raise ModelValidationError("valid_radius must be positive")
            min_eig = _min_metric_eigenvalue(self.tensor, self.valid_radius)
            if min_eig <= 0:
                raise ModelValidationError(
                    f"metric not positive definite on |y| <= {self.valid_radius:g} "
                    f"(min sampled eigenvalue {min_eig:.3e})"
                )

    @property
    def dim(self) -> int:  # type: ignore[override]
        return self.tensor.dim

    @property
    def is_rotationally_symmetric(self) -> bool:
        return False

    def scalar_curvature(self) -> float:
        return self.tensor.scalar_trace()

    def metric_at_many(self, Y: np.ndarray) -> np.ndarray:
        Y = np.asarray(Y, dtype=float)
        g = np.broadcast_to(np.eye(self.dim), (Y.shape[0], self.dim, self.dim)).copy()
        g -= self.tensor.quadratic_form(Y) / 3.0
        return g

    @property
    def label(self) -> str:
        return f"curvature_poly(n={self.dim},S={self.tensor.scalar_trace():g})"


def _warped_metric_batch(warp: WarpProfile, Y: np.ndarray) -> np.ndarray:
    """g = w^2 I + (1 - w^2) theta theta^T with w = warp(|y|)/|y|."""
    m, n = Y.shape
    rho = np.linalg.norm(Y, axis=1)
    w2 = warp.ratio(rho) ** 2
    g = w2[:, None, None] * np.eye(n)
    nz = rho > 0
    if np.any(nz):
        theta = Y[nz] / rho[nz, None]
        g[nz] += (1.0 - w2[nz])[:, None, None] * np.einsum("mi,mj->mij", theta, theta)
    g[~nz] = np.eye(n)
    return g


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    """Outcome of the model consistency checks."""

    model_label: str
    ok: bool
    worst_violation: float
    checks: dict[str, float]


def _sample_ball_points(dim: int, radius: float) -> np.ndarray:
    """Cube grid with _GRID_POINTS_PER_AXIS points per axis, clipped to the ball."""
    axis = np.linspace(-radius, radius, _GRID_POINTS_PER_AXIS)
    pts = np.array(list(product(axis, repeat=dim)))
    return pts[np.linalg.norm(pts, axis=1) <= radius]

def _min_metric_eigenvalue(tensor: CurvatureTensor, radius: float) -> float:
    pts = _sample_ball_points(tensor.dim, radius)
    g = np.eye(tensor.dim) - tensor.quadratic_form(pts) / 3.0
    return float(np.min(np.linalg.eigvalsh(g)))


def _default_poly_radius(tensor: CurvatureTensor) -> float:
    """Largest radius at which the sampled minimum eigenvalue exceeds 0.5."""
    if _min_metric_eigenvalue(tensor, 1e6) > _MIN_EIG_FLOOR:
        return math.inf
    lo, hi = 0.0, 1.0
    while _min_metric_eigenvalue(tensor, hi) > _MIN_EIG_FLOOR:
        lo, hi = hi, 2.0 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _min_metric_eigenvalue(tensor, mid) > _MIN_EIG_FLOOR:
            lo = mid
        else:
            hi = mid
    return lo


def validate(model: MetricModel, *, n_points: int = 1000, seed: int = 0) -> ValidationReport:
    """Run the model consistency checks and report the worst violation.

    Checks: identity metric at the center, the radial (Gauss) identity
    ``g_ij(y) y^j = y_i`` at random points, positive definiteness on a radial
    sample, and (for curvature-polynomial models) the algebraic tensor
    identities.  Construction already rejects violations above 1e-12; this
    re-runs the checks on demand.
    """
    checks: dict[str, float] = {}
    n = model.dim
    radius = model.valid_radius if math.isfinite(model.valid_radius) else 1.0

    checks["center_identity"] = float(
        np.max(np.abs(model.metric_at_many(np.zeros((1, n)))[0] - np.eye(n)))
    )

    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n_points, n))
    pts *= (radius * rng.random(n_points) ** (1.0 / n) / np.linalg.norm(pts, axis=1))[:, None]
    g = model.metric_at_many(pts)
    checks["radial_identity"] = float(
        np.max(np.abs(np.einsum("mij,mj->mi", g, pts) - pts))
    )

    min_eig = float(np.min(np.linalg.eigvalsh(g)))
    checks["min_eigenvalue"] = min_eig
    pd_violation = max(0.0, -min_eig)

    if isinstance(model, CurvaturePolynomial):
        checks["tensor_symmetry"] = model.tensor.symmetry_violation()
        checks["trace_consistency"] = abs(
            model.tensor.scalar_trace() - model.scalar_curvature()
        )

    worst = max(
        checks["center_identity"],
        checks["radial_identity"],
        pd_violation,
        checks.get("tensor_symmetry", 0.0),
        checks.get("trace_consistency", 0.0),
    )
    return ValidationReport(
        model_label=model.label,
        ok=worst <= SYMMETRY_TOL and min_eig > 0,
        worst_violation=worst,
        checks=checks,
    )
