"""Extraction of scalar curvature from capacity-deficit data.

The deficit 1 - cap(r, lam r) / c_n(r, lam r) behaves like kappa r^2 for
small r, with kappa = deficit_coefficient(n, lam, S) linear in the scalar
curvature S at the center.  This module collects deficits over a radius
sweep, extrapolates kappa (Richardson elimination of the next even term,
cross-checked by least squares), converts it to an S estimate, and makes a
guarded sign call.

Fitting assumptions, recorded here because no expansion beyond r^2 is
established: on the symmetric model families the deficit is fitted as an
even series a2 r^2 + a4 r^4.  The least-squares cross-check also fits an
optional r^3 term and reports its magnitude so a violation of the evenness
assumption would be visible in the diagnostics.

Variational capacities are upper bounds, so their deficits are biased low;
sign calls from variational data therefore treat positive estimates as
trustworthy and flag negative ones near zero.  To tame the shared
grid-level bias, variational deficits are measured against the discrete
flat capacity on the same grid rather than the closed-form Euclidean value
(the bias cancels; both raw and corrected numbers are kept).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import (
    CapacityQuery,
    symmetric_capacity,
    variational_capacity,
)
from ._solver import discrete_flat_capacity, GridResolution
from .capacity import DEFAULT_LEVEL
from .errors import ModelDomainError
from .expansion import deficit_coefficient
from .metric_models import MetricModel

__all__ = [
    "DeficitSample",
    "DeficitSeries",
    "FitResult",
    "SignVerdict",
    "collect_deficits",
    "variational_deficit_sample",
    "fit_deficit_coefficient",
    "nonnegativity_detector",
    "conjecture_scan",
    "ConjectureScanRow",
    "ConjectureScan",
]

# Estimates below this size (in kappa units) are indistinguishable from zero.
ZERO_ATOL = 1e-6
# Error-estimate fraction of the deficit above which a sample is noisy.
NOISE_FRACTION = 0.1
# Absolute deficit floor for the noise test, so that exactly-flat data
# (deficit and error both ~ roundoff) is not flagged.
NOISE_DEFICIT_FLOOR = 1e-9
DEAD_ZONE_FACTOR = 3.0


@dataclass(frozen=True)
class DeficitSample:
    """Capacity deficit at one radius."""

    r: float
    deficit: float
    method: str
    error_estimate: float
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DeficitSeries:
    """Deficit samples for one (model, lam) pair, radii descending."""

    model_label: str
    n: int
    lam: float
    samples: tuple[DeficitSample, ...]

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.r for s in self.samples])

    @property
    def deficits(self) -> np.ndarray:
        return np.array([s.deficit for s in self.samples])


@dataclass(frozen=True)
class FitResult:
    """Fitted r^2 coefficient of the deficit and the implied S estimate."""

    kappa_hat: float
    S_hat: float
    residual_norm: float
    radii_used: tuple[float, ...]
    extrapolation_diagnostics: tuple[float, ...]  # per-pair eliminations
    extrapolation_gap: float
    lsq_quadratic: tuple[float, float]  # (a2, a4)
    lsq_cubic_magnitude: float  # |a3| when an r^3 term is allowed
    richardson_lsq_gap: float
    low_confidence: bool
    methods: tuple[str, ...]


def collect_deficits(
    model: MetricModel,
    lam: float,
    radii,
    *,
    resolution=None,
    workers: int = 1,
    use_discrete_reference: bool = True,
) -> DeficitSeries:
    """One deficit sample per radius, using the best available method.

    Rotationally symmetric models use the exact quadrature capacity; other
    models fall back to the variational solver at the given resolution
    (level and its dyadic coarsening).  Radii must be strictly decreasing
    and fit inside the validity radius after scaling by lam.
    """
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")

    if model.is_rotationally_symmetric:
        sample_fn = lambda r: _quadrature_sample(model, lam, r)
    else:
        sample_fn = lambda r: variational_deficit_sample(
            model, lam, r, resolution=resolution,
            use_discrete_reference=use_discrete_reference,
        )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(sample_fn, radii))
    else:
        samples = [sample_fn(r) for r in radii]
    return DeficitSeries(
        model_label=model.label, n=model.dim, lam=lam, samples=tuple(samples)
    )


def _quadrature_sample(model, lam, r) -> DeficitSample:
    result = symmetric_capacity(CapacityQuery(model, r, lam))
    return DeficitSample(
        r=r,
        deficit=result.deficit,
        method=result.method,
        error_estimate=result.error_estimate / result.euclidean_reference,
        detail={"capacity": result.value},
    )


def _ladder(level):
    if isinstance(level, GridResolution):
        coarse = GridResolution(
            max(4, level.n_rho // 2), max(2, level.n_theta // 2), max(4, level.n_phi // 2)
        )
        return [coarse, level]
    level = int(level)
    return [max(4, level // 2), level]


def _ladder_key(level):
    return level if isinstance(level, GridResolution) else int(level)


def variational_deficit_sample(
    model: MetricModel,
    lam: float,
    r: float,
    *,
    resolution=None,
    use_discrete_reference: bool = True,
) -> DeficitSample:
    """Deficit sample from the variational solver, regardless of symmetry.

    With ``use_discrete_reference`` the deficit at each grid level is taken
    against the discrete flat capacity on the same grid, canceling the
    shared discretization bias; the error estimate is then the gap between
    the corrected deficits of the two levels.
    """
    level = DEFAULT_LEVEL if resolution is None else resolution
    ladder = _ladder(level)
    flat_refs = (
        {_ladder_key(lv): discrete_flat_capacity(lam, 1.0, lv) for lv in ladder}
        if use_discrete_reference
        else None
    )
    result, _ = variational_capacity(CapacityQuery(model, r, lam), levels=ladder)
    caps = dict(zip((_ladder_key(lv) for lv in ladder), (v for _, v in result.refinement)))
    if flat_refs is None:
        deficits = {
            k: 1.0 - caps[k] / result.euclidean_reference for k in caps
        }
    else:
        deficits = {k: 1.0 - caps[k] / (r * flat_refs[k]) for k in caps}
    keys = [_ladder_key(lv) for lv in ladder]
    fine, coarse = keys[-1], keys[-2] if len(keys) >= 2 else keys[-1]
    return DeficitSample(
        r=r,
        deficit=deficits[fine],
        method="variational",
        error_estimate=abs(deficits[fine] - deficits[coarse]),
        detail={
            "capacity": result.value,
            "raw_deficit": result.deficit,
            "capacity_error_estimate": result.error_estimate,
            "levels": tuple(str(k) for k in keys),
            "discrete_reference": flat_refs is not None,
        },
    )


def fit_deficit_coefficient(series: DeficitSeries) -> FitResult:
    """Extrapolate the r^2 coefficient of the deficit as r -> 0.

    Forms q(r) = deficit / r^2 and eliminates the next even correction from
    each adjacent radius pair; for a dyadic pair this is the classical
    (4 q(r/2) - q(r)) / 3.  The estimate is the finest-pair value, its gap
    to the previous pair is the reported uncertainty, and a least-squares
    fit of a2 r^2 + a4 r^4 serves as an independent cross-check.
    """
    if len(series.samples) < 3:
        raise ValueError("need at least 3 samples to extrapolate")
    r = series.radii
    if r[0] / r[-1] < 2.0 - 1e-12:
        raise ValueError("samples must span at least two dyadic levels")
    d = series.deficits
    q = d / r**2

    pair_values = []
    for i in range(len(r) - 1):
        r1, r2 = r[i], r[i + 1]  # r1 coarse > r2 fine
        pair_values.append((q[i + 1] * r1**2 - q[i] * r2**2) / (r1**2 - r2**2))
    kappa_hat = pair_values[-1]
    gap = abs(pair_values[-1] - pair_values[-2]) if len(pair_values) >= 2 else math.inf

    design = np.column_stack([r**2, r**4])
    coef, *_ = np.linalg.lstsq(design, d, rcond=None)
    residual = float(np.linalg.norm(d - design @ coef))
    design3 = np.column_stack([r**2, r**3, r**4])
    coef3, *_ = np.linalg.lstsq(design3, d, rcond=None)

    errors = np.array([s.error_estimate for s in series.samples])
    low_confidence = bool(
        np.any(errors > NOISE_FRACTION * np.maximum(np.abs(d), NOISE_DEFICIT_FLOOR))
    )

    return FitResult(
        kappa_hat=float(kappa_hat),
        S_hat=float(kappa_hat / deficit_coefficient(series.n, series.lam, 1.0)),
        residual_norm=residual,
        radii_used=tuple(float(x) for x in r),
        extrapolation_diagnostics=tuple(float(v) for v in pair_values),
        extrapolation_gap=float(gap),
        lsq_quadratic=(float(coef[0]), float(coef[1])),
        lsq_cubic_magnitude=float(abs(coef3[1])),
        richardson_lsq_gap=float(abs(kappa_hat - coef[0])),
        low_confidence=low_confidence,
        methods=tuple(sorted({s.method for s in series.samples})),
    )


@dataclass(frozen=True)
class SignVerdict:
    """Sign call for the scalar curvature at the center."""

    classification: str  # nonnegative | negative | indeterminate
    zero_flag: bool
    kappa_hat: float
    dead_zone: float


def nonnegativity_detector(series: DeficitSeries) -> SignVerdict:
    """Decide the sign of the scalar curvature from deficit samples.

    The fitted coefficient is compared against a dead zone of
    3x the extrapolation gap: values inside it are indistinguishable from
    zero.  An estimate within the absolute zero tolerance is reported as
    nonnegative with the zero flag set (a vanishing limit satisfies the
    weak inequality); noisy data or a dead-zone value of ambiguous sign is
    indeterminate.  Negative calls from variational data additionally
    require clearance of the one-sided discretization bias, since the
    variational route can only under-report deficits.
    """
    fit = fit_deficit_coefficient(series)
    dead_zone = DEAD_ZONE_FACTOR * fit.extrapolation_gap
    kappa = fit.kappa_hat

    if fit.low_confidence:
        return SignVerdict("indeterminate", False, kappa, dead_zone)
    if abs(kappa) <= ZERO_ATOL:
        return SignVerdict("nonnegative", True, kappa, dead_zone)
    if kappa > dead_zone:
        return SignVerdict("nonnegative", False, kappa, dead_zone)
    if kappa < -dead_zone:
        if "variational" in fit.methods:
            bias_scale = max(
                s.error_estimate / s.r**2 for s in series.samples
            )
            if kappa > -(dead_zone + DEAD_ZONE_FACTOR * bias_scale):
                return SignVerdict("indeterminate", False, kappa, dead_zone)
        return SignVerdict("negative", False, kappa, dead_zone)
    return SignVerdict("indeterminate", False, kappa, dead_zone)


@dataclass(frozen=True)
class ConjectureScanRow:
    """Residual deficit behavior at one lam for a scalar-flat model."""

    lam: float
    r2_coefficient: float
    r4_coefficient: float
    r4_by_radius: tuple[float, ...]  # deficit / r^4 per sampled radius
    fit: FitResult


@dataclass(frozen=True)
class ConjectureScan:
    """Exploratory table of residual r^4 coefficients; no pass/fail meaning."""

    model_label: str
    rows: tuple[ConjectureScanRow, ...]


def conjecture_scan(
    model: MetricModel,
    lambdas,
    radii,
    *,
    resolution=None,
    workers: int = 1,
) -> ConjectureScan:
    """Measure residual deficit coefficients of a scalar-flat model.

    Requires scalar curvature exactly zero at the center; the interesting
    inputs are non-flat models (for example a trace-free curvature tensor),
    where a stable nonzero r^4 coefficient records how far from Euclidean
    the capacity remains once the r^2 term vanishes.  Output is exploratory:
    one row per lam, each with the fitted r^4 coefficient and diagnostics.
    """
    S = model.scalar_curvature()
    if abs(S) > 1e-12:
        raise ModelDomainError(
            f"conjecture scan needs a scalar-flat model, got S = {S:g}"
        )
    rows = []
    for lam in lambdas:
        series = collect_deficits(
            model, float(lam), radii, resolution=resolution, workers=workers
        )
        fit = fit_deficit_coefficient(series)
        r = series.radii
        rows.append(
            ConjectureScanRow(
                lam=float(lam),
                r2_coefficient=fit.lsq_quadratic[0],
                r4_coefficient=fit.lsq_quadratic[1],
                r4_by_radius=tuple(float(v) for v in series.deficits / r**4),
                fit=fit,
            )
        )
    return ConjectureScan(model_label=model.label, rows=tuple(rows))
