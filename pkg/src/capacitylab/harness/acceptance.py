"""Acceptance criteria for the laboratory, runnable as `capacitylab verify`.

Each criterion pins a measured quantity against a fixed tolerance; the
suite passes only if every criterion passes.  The ``fast`` suite covers the
quadrature and closed-form checks; ``full`` adds the variational-solver
criteria.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..ball_geometry import druet_margin
from ..capacity import (
    CapacityQuery,
    harmonic_probe,
    symmetric_capacity,
    szego_upper_bound,
    variational_capacity,
)
from ..curvature_fit import (
    collect_deficits,
    fit_deficit_coefficient,
    nonnegativity_detector,
)
from ..expansion import deficit_coefficient, unified_deficit
from ..metric_models import (
    CurvaturePolynomial,
    CurvatureTensor,
    SpaceForm,
    WarpProfile,
    WarpedProduct,
)
from .._solver import solve_annulus

__all__ = ["CriterionResult", "CRITERIA", "run_suite", "SUITES"]

VARIATIONAL_LEVEL = 48


def product_curvature_model() -> CurvaturePolynomial:
    """S(p) = 2 model: single sectional curvature plane (R_1212 = 1)."""
    return CurvaturePolynomial(CurvatureTensor.from_generators(3, [(1, 2, 1, 2, 1.0)]))


def trace_free_model() -> CurvaturePolynomial:
    """Scalar-flat but non-flat model (R_1212 = 1, R_1313 = -1)."""
    return CurvaturePolynomial(
        CurvatureTensor.from_generators(3, [(1, 2, 1, 2, 1.0), (1, 3, 1, 3, -1.0)])
    )


@dataclass(frozen=True)
class CriterionResult:
    cid: str
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str
    runtime_s: float


def _result(cid, name, passed, measured, tolerance, detail, started):
    return CriterionResult(
        cid=cid,
        name=name,
        passed=bool(passed),
        measured=float(measured),
        tolerance=float(tolerance),
        detail=detail,
        runtime_s=time.perf_counter() - started,
    )


def criterion_branch_unified_identity() -> CriterionResult:
    """Branch deficits agree with the unified formula to 1e-12 relative."""
    t0 = time.perf_counter()
    worst = 0.0
    for n in range(3, 9):
        for lam in (1.1, 2.0, 10.0):
            for r in (1e-3, 1e-1):
                for S in (-6.0, 0.0, 7.3):
                    branch = deficit_coefficient(n, lam, S) * r**2
                    unified = unified_deficit(n, lam, r, S)
                    worst = max(
                        worst, abs(branch - unified) / max(abs(branch), 1e-3)
                    )
    return _result(
        "C1",
        "branch/unified identity",
        worst <= 1e-12,
        worst,
        1e-12,
        "max relative deficit disagreement over the (n, lambda, r, S) grid",
        t0,
    )


def _space_form_fit(curvature, lam, radii):
    model = SpaceForm(3, curvature)
    series = collect_deficits(model, lam, radii)
    return series, fit_deficit_coefficient(series)


def criterion_sphere_recovery() -> CriterionResult:
    """S^3 quadrature sweep recovers kappa = 2/3 and S_hat = 6."""
    t0 = time.perf_counter()
    radii = [0.2 * 2.0**-k for k in range(6)]
    _, fit = _space_form_fit(1.0, 2.0, radii)
    kappa_rel = abs(fit.kappa_hat - 2.0 / 3.0) / (2.0 / 3.0)
    s_abs = abs(fit.S_hat - 6.0)
    passed = kappa_rel <= 1e-3 and s_abs <= 1e-2
    return _result(
        "C2",
        "S^3 coefficient recovery",
        passed,
        max(kappa_rel, s_abs),
        1e-3,
        f"kappa rel err {kappa_rel:.2e} (tol 1e-3), |S_hat - 6| = {s_abs:.2e} (tol 1e-2)",
        t0,
    )


def criterion_hyperbolic_mirror() -> CriterionResult:
    """H^3 sweep gives S_hat = -6 and a negative-sign verdict."""
    t0 = time.perf_counter()
    radii = [0.2 * 2.0**-k for k in range(6)]
    series, fit = _space_form_fit(-1.0, 2.0, radii)
    verdict = nonnegativity_detector(series)
    s_abs = abs(fit.S_hat + 6.0)
    passed = s_abs <= 1e-2 and verdict.classification == "negative"
    return _result(
        "C3",
        "H^3 mirror test",
        passed,
        s_abs,
        1e-2,
        f"|S_hat + 6| = {s_abs:.2e}, verdict = {verdict.classification}",
        t0,
    )


def criterion_higher_dimensions() -> CriterionResult:
    """S^n fits match the n = 4, 5, 6 deficit coefficients to 1e-2 relative."""
    t0 = time.perf_counter()
    worst = 0.0
    details = []
    radii = [0.2 * 2.0**-k for k in range(5)]
    for n in (4, 5, 6):
        model = SpaceForm(n, 1.0)
        for lam in (1.5, 2.0):
            series = collect_deficits(model, lam, radii)
            fit = fit_deficit_coefficient(series)
            kappa = deficit_coefficient(n, lam, n * (n - 1))
            rel = abs(fit.kappa_hat - kappa) / abs(kappa)
            worst = max(worst, rel)
            details.append(f"n={n},lam={lam:g}:{rel:.1e}")
    return _result(
        "C4",
        "higher-dimensional branches",
        worst <= 1e-2,
        worst,
        1e-2,
        "; ".join(details),
        t0,
    )


def criterion_euclidean_variational() -> CriterionResult:
    """Flat variational solve hits 2.0 within 1%, monotone under refinement."""
    t0 = time.perf_counter()
    flat = SpaceForm(3, 0.0)
    caps = [solve_annulus(flat, 1.0, 2.0, level).capacity for level in (24, 48, 96)]
    final_rel = abs(caps[-1] - 2.0) / 2.0
    monotone = all(a >= b for a, b in zip(caps, caps[1:])) and caps[-1] >= 2.0 - 1e-9
    passed = final_rel <= 0.01 and monotone
    return _result(
        "C5",
        "Euclidean variational solve",
        passed,
        final_rel,
        0.01,
        f"levels 24/48/96 -> {[f'{c:.6f}' for c in caps]}, monotone={monotone}",
        t0,
    )


def criterion_product_curvature() -> CriterionResult:
    """Variational fit on the S(p)=2 tensor model matches 2/9 within 25%."""
    t0 = time.perf_counter()
    series = collect_deficits(
        product_curvature_model(), 2.0, [0.3, 0.2, 0.15, 0.1], resolution=VARIATIONAL_LEVEL
    )
    fit = fit_deficit_coefficient(series)
    target = deficit_coefficient(3, 2.0, 2.0)
    rel = abs(fit.kappa_hat - target) / target
    passed = rel <= 0.25 and fit.kappa_hat > 0
    return _result(
        "C6",
        "non-symmetric positive curvature",
        passed,
        rel,
        0.25,
        f"kappa_hat={fit.kappa_hat:.6f} vs {target:.6f}, gap={fit.extrapolation_gap:.1e}",
        t0,
    )


def criterion_scalar_flat() -> CriterionResult:
    """Trace-free tensor model shows no r^2 coefficient at the S = 2 scale."""
    t0 = time.perf_counter()
    series = collect_deficits(
        trace_free_model(), 2.0, [0.3, 0.2, 0.15, 0.1], resolution=VARIATIONAL_LEVEL
    )
    fit = fit_deficit_coefficient(series)
    limit = 0.25 * deficit_coefficient(3, 2.0, 2.0)
    passed = abs(fit.kappa_hat) <= limit
    return _result(
        "C7",
        "scalar-flat consistency",
        passed,
        abs(fit.kappa_hat),
        limit,
        f"kappa_hat={fit.kappa_hat:.2e}, r^4 coefficient={fit.lsq_quadratic[1]:.4f}",
        t0,
    )


def criterion_bound_ordering(include_variational: bool = True) -> CriterionResult:
    """Area-profile bound sits above every capacity estimate.

    On symmetric models the bound and the exact value coincide (same code
    path, equality to 1e-10 relative); on the non-symmetric model the bound
    must exceed the variational estimate minus its error estimate.
    """
    t0 = time.perf_counter()
    worst_eq = 0.0
    symmetric = [
        SpaceForm(3, 1.0),
        SpaceForm(3, -1.0),
        SpaceForm(3, 0.0),
        WarpedProduct(3, WarpProfile("quintic", 0.3)),
    ]
    for model in symmetric:
        for lam in (1.5, 2.0):
            for r in (0.2, 0.1, 0.05):
                query = CapacityQuery(model, r, lam)
                exact = symmetric_capacity(query)
                bound = szego_upper_bound(query)
                worst_eq = max(
                    worst_eq, abs(bound.value - exact.value) / exact.value
                )
    ordering_ok = True
    detail = f"max symmetric |szego - exact|/exact = {worst_eq:.1e}"
    if include_variational:
        query = CapacityQuery(product_curvature_model(), 0.2, 2.0)
        bound = szego_upper_bound(query)
        estimate, _ = variational_capacity(query, VARIATIONAL_LEVEL // 2)
        ordering_ok = bound.value >= estimate.value - estimate.error_estimate
        detail += (
            f"; szego={bound.value:.8f} vs variational "
            f"{estimate.value:.8f} (err {estimate.error_estimate:.1e})"
        )
    passed = worst_eq <= 1e-10 and ordering_ok
    return _result("C8", "bound ordering", passed, worst_eq, 1e-10, detail, t0)


def criterion_druet_margin() -> CriterionResult:
    """Isoperimetric margin nonnegative at eps = 0.1 on the test balls."""
    t0 = time.perf_counter()
    worst = math.inf
    for curvature in (1.0, -1.0, 0.0):
        for n in (3, 4, 5, 6):
            model = SpaceForm(n, curvature)
            for r in (0.05, 0.1, 0.2, 0.3):
                worst = min(worst, druet_margin(model, r, 0.1))
    for r in (0.05, 0.1, 0.15, 0.2):
        worst = min(worst, druet_margin(product_curvature_model(), r, 0.1))
    return _result(
        "C9",
        "isoperimetric margin",
        worst >= 0.0,
        worst,
        0.0,
        "minimum margin over space forms (r <= 0.3) and the tensor model (r <= 0.2)",
        t0,
    )


def criterion_harmonic_probe() -> CriterionResult:
    """Probe deviations scale like r^2 (values) and r (gradients) on S^3."""
    t0 = time.perf_counter()
    model = SpaceForm(3, 1.0)
    radii = np.array([0.2, 0.1, 0.05, 0.025])
    sups, grads = [], []
    for r in radii:
        probe = harmonic_probe(CapacityQuery(model, r, 2.0))
        sups.append(probe.sup_deviation)
        grads.append(probe.gradient_deviation)
    sup_slope = float(np.polyfit(np.log(radii), np.log(sups), 1)[0])
    grad_slope = float(np.polyfit(np.log(radii), np.log(grads), 1)[0])
    passed = 1.8 <= sup_slope <= 2.2 and 0.8 <= grad_slope <= 1.2
    return _result(
        "C10",
        "harmonic probe scaling",
        passed,
        sup_slope,
        2.2,
        f"sup slope {sup_slope:.3f} in [1.8, 2.2]; gradient slope {grad_slope:.3f} in [0.8, 1.2]",
        t0,
    )


def criterion_monotonicity() -> CriterionResult:
    """Capacity monotone in lambda and r; exact Euclidean scaling."""
    t0 = time.perf_counter()
    models = [SpaceForm(3, 1.0), SpaceForm(3, -1.0), SpaceForm(3, 0.0)]
    ok = True
    for model in models:
        caps = [
            symmetric_capacity(CapacityQuery(model, 0.1, lam)).value
            for lam in (1.5, 2.0, 4.0, 8.0)
        ]
        ok &= all(b < a for a, b in zip(caps, caps[1:]))
        caps_r = [
            symmetric_capacity(CapacityQuery(model, r, 2.0)).value
            for r in (0.025, 0.05, 0.1, 0.2)
        ]
        ok &= all(b > a for a, b in zip(caps_r, caps_r[1:]))
    flat = SpaceForm(3, 0.0)
    unit = symmetric_capacity(CapacityQuery(flat, 1.0, 2.0)).value
    scaling = max(
        abs(symmetric_capacity(CapacityQuery(flat, r, 2.0)).value - r * unit)
        / (r * unit)
        for r in (0.25, 0.5, 2.0)
    )
    passed = ok and scaling <= 1e-10
    return _result(
        "C11",
        "monotonicity and scaling",
        passed,
        scaling,
        1e-10,
        f"monotone={ok}; worst Euclidean scaling error {scaling:.1e}",
        t0,
    )


@dataclass(frozen=True)
class Criterion:
    cid: str
    name: str
    suites: frozenset
    run: callable


CRITERIA = (
    Criterion("C1", "branch/unified identity", frozenset({"fast", "full"}), criterion_branch_unified_identity),
    Criterion("C2", "S^3 coefficient recovery", frozenset({"fast", "full"}), criterion_sphere_recovery),
    Criterion("C3", "H^3 mirror test", frozenset({"fast", "full"}), criterion_hyperbolic_mirror),
    Criterion("C4", "higher-dimensional branches", frozenset({"fast", "full"}), criterion_higher_dimensions),
    Criterion("C5", "Euclidean variational solve", frozenset({"full"}), criterion_euclidean_variational),
    Criterion("C6", "non-symmetric positive curvature", frozenset({"full"}), criterion_product_curvature),
    Criterion("C7", "scalar-flat consistency", frozenset({"full"}), criterion_scalar_flat),
    Criterion("C8", "bound ordering", frozenset({"fast", "full"}), criterion_bound_ordering),
    Criterion("C9", "isoperimetric margin", frozenset({"fast", "full"}), criterion_druet_margin),
    Criterion("C10", "harmonic probe scaling", frozenset({"fast", "full"}), criterion_harmonic_probe),
    Criterion("C11", "monotonicity and scaling", frozenset({"fast", "full"}), criterion_monotonicity),
)

SUITES = ("fast", "full")


def run_suite(suite: str, stream=None) -> bool:
    """Run all criteria of a suite, printing one pass/fail line each."""
    import sys

    out = stream or sys.stdout
    all_passed = True
    for criterion in CRITERIA:
        if suite not in criterion.suites:
            continue
        if criterion.cid == "C8":
            result = criterion.run(include_variational=(suite == "full"))
        else:
            result = criterion.run()
        all_passed &= result.passed
        status = "PASS" if result.passed else "FAIL"
        print(
            f"{status} {result.cid} {result.name}: measured={result.measured:.3e} "
            f"tolerance={result.tolerance:.3e} ({result.runtime_s:.1f}s)\n"
            f"     {result.detail}",
            file=out,
        )
    return all_passed
