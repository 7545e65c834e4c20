"""Sweep orchestration and structured outputs.

Every (lambda, radius, method) combination becomes one CSV row; radius
sweeps with at least three radii also produce a coefficient fit per
(lambda, method), written to the JSON report together with the outcome of
the cross-cutting invariant checks.  Numeric CSV fields use 12 significant
digits, and rows are ordered (model, lambda, descending radius, method), so
re-running a spec reproduces the numeric output byte for byte; the
runtime_ms column is the one wall-clock field and is excluded from that
guarantee.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..capacity import (
    CapacityQuery,
    dump_harmonic_field,
    euclidean_relative_capacity,
    symmetric_capacity,
    szego_upper_bound,
    variational_capacity,
)
from ..curvature_fit import (
    DeficitSeries,
    fit_deficit_coefficient,
    variational_deficit_sample,
)
from ..expansion import deficit_coefficient, predicted_capacity
from .config import ExperimentSpec

__all__ = ["ResultRow", "RunOutcome", "run_experiment", "format_float"]

CSV_COLUMNS = (
    "model",
    "n",
    "lambda",
    "r",
    "method",
    "capacity",
    "c_n",
    "deficit",
    "predicted_capacity",
    "predicted_deficit_coeff",
    "S_true",
    "S_hat",
    "error_estimate",
    "runtime_ms",
)

QUADRATURE_ERROR_BOUND = 1e-10


@dataclass
class ResultRow:
    """One flat output record."""

    model: str
    n: int
    lam: float
    r: float
    method: str
    capacity: float
    c_n: float
    deficit: float
    predicted_capacity: float
    predicted_deficit_coeff: float
    S_true: float
    S_hat: float | None
    error_estimate: float
    runtime_ms: int


def format_float(x: float) -> str:
    """Fixed 12-significant-digit representation used in the CSV."""
    return f"{x:.12g}"


def _row_sort_key(row: ResultRow):
    return (row.model, row.lam, -row.r, row.method)


def _compute_task(spec: ExperimentSpec, lam: float, r: float, method: str):
    """One capacity evaluation; returns (row, sample_for_fit | None)."""
    model = spec.model
    n = model.dim
    started = time.perf_counter()
    prediction = predicted_capacity(n, lam, r, model.scalar_curvature())
    sample = None

    if method == "series":
        capacity = prediction.predicted_capacity
        tag = "series"
        deficit = prediction.deficit_coefficient * r**2
        error = 0.0
    elif method == "quadrature":
        if model.is_rotationally_symmetric:
            result = symmetric_capacity(CapacityQuery(model, r, lam))
            tag = result.method
        else:
            result = szego_upper_bound(CapacityQuery(model, r, lam))
            tag = "szego_upper_bound"
        capacity, deficit, error = result.value, result.deficit, result.error_estimate
        sample = _sample_from_quadrature(r, result)
    else:  # variational
        sample = variational_deficit_sample(model, lam, r, resolution=spec.resolution)
        capacity = sample.detail["capacity"]
        deficit = sample.deficit
        error = sample.detail["capacity_error_estimate"]
        tag = "variational"

    runtime_ms = int(round(1000 * (time.perf_counter() - started)))
    row = ResultRow(
        model=model.label,
        n=n,
        lam=lam,
        r=r,
        method=tag,
        capacity=capacity,
        c_n=euclidean_relative_capacity(n, r, lam * r),
        deficit=deficit,
        predicted_capacity=prediction.predicted_capacity,
        predicted_deficit_coeff=prediction.deficit_coefficient,
        S_true=model.scalar_curvature(),
        S_hat=None,
        error_estimate=error,
        runtime_ms=runtime_ms,
    )
    return (lam, method), row, sample


def _sample_from_quadrature(r, result):
    from ..curvature_fit import DeficitSample

    return DeficitSample(
        r=r,
        deficit=result.deficit,
        method=result.method if not result.upper_bound_only else "szego_upper_bound",
        error_estimate=result.error_estimate / result.euclidean_reference,
        detail={"capacity": result.value},
    )


@dataclass
class RunOutcome:
    rows: list[ResultRow]
    fits: dict[str, dict]
    invariant_checks: dict[str, bool]
    csv_path: Path
    report_path: Path


def run_experiment(spec: ExperimentSpec) -> RunOutcome:
    """Execute the sweep and write CSV, JSON report and plot data files."""
    tasks = [
        (lam, r, method)
        for lam in spec.lambdas
        for r in spec.radii
        for method in spec.methods
    ]
    if spec.workers > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            results = list(pool.map(lambda t: _compute_task(spec, *t), tasks))
    else:
        results = [_compute_task(spec, *t) for t in tasks]

    rows = [row for _, row, _ in results]
    rows.sort(key=_row_sort_key)

    # Group fit samples per (lambda, method); series rows carry no samples.
    groups: dict[tuple, list] = {}
    for key, _, sample in results:
        if sample is not None:
            groups.setdefault(key, []).append(sample)

    fits: dict[str, dict] = {}
    fit_values: dict[tuple, float] = {}
    for (lam, method), samples in sorted(groups.items()):
        samples.sort(key=lambda s: -s.r)
        series = DeficitSeries(
            model_label=spec.model.label,
            n=spec.model.dim,
            lam=lam,
            samples=tuple(samples),
        )
        try:
            fit = fit_deficit_coefficient(series)
        except ValueError:
            continue
        fits[f"lambda={lam:g},method={method}"] = dataclasses.asdict(fit)
        fit_values[(lam, method)] = fit.S_hat

    for row in rows:
        method_group = "quadrature" if row.method != "variational" else "variational"
        if row.method == "series":
            continue
        key = (row.lam, method_group)
        if key in fit_values:
            row.S_hat = fit_values[key]

    checks = _invariant_checks(rows)

    spec.out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = spec.out_dir / f"{spec.name}.csv"
    _write_csv(csv_path, rows)
    _write_qplots(spec, rows)
    if spec.field_dump is not None and "variational" in spec.methods:
        _, field = variational_capacity(
            CapacityQuery(spec.model, spec.radii[0], spec.lambdas[0]),
            spec.resolution,
        )
        spec.field_dump.parent.mkdir(parents=True, exist_ok=True)
        dump_harmonic_field(field, spec.field_dump)

    report_path = spec.out_dir / f"{spec.name}.json"
    report = {
        "name": spec.name,
        "model": spec.model.label,
        "scalar_curvature": spec.model.scalar_curvature(),
        "config": spec.raw,
        "fits": fits,
        "invariant_checks": checks,
        "csv": csv_path.name,
    }
    report_path.write_text(json.dumps(report, indent=2, default=str), encoding="utf-8")
    return RunOutcome(rows, fits, checks, csv_path, report_path)


def _write_csv(path: Path, rows: list[ResultRow]) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                [
                    row.model,
                    str(row.n),
                    format_float(row.lam),
                    format_float(row.r),
                    row.method,
                    format_float(row.capacity),
                    format_float(row.c_n),
                    format_float(row.deficit),
                    format_float(row.predicted_capacity),
                    format_float(row.predicted_deficit_coeff),
                    format_float(row.S_true),
                    "" if row.S_hat is None else format_float(row.S_hat),
                    format_float(row.error_estimate),
                    str(row.runtime_ms),
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_qplots(spec: ExperimentSpec, rows: list[ResultRow]) -> None:
    """Two-column plot data: r vs deficit/r^2, one file per (lambda, method)."""
    for lam in spec.lambdas:
        for method in spec.methods:
            if method == "series":
                continue
            sel = [
                row
                for row in rows
                if row.lam == lam
                and (
                    (method == "variational") == (row.method == "variational")
                )
            ]
            if len(sel) < 2:
                continue
            kappa = deficit_coefficient(
                spec.model.dim, lam, spec.model.scalar_curvature()
            )
            lines = [
                f"# {spec.model.label} lambda={lam:g} method={method}",
                f"# predicted deficit/r^2 = {format_float(kappa)}",
                "# r deficit_over_r2",
            ]
            for row in sorted(sel, key=lambda r: -r.r):
                lines.append(
                    f"{format_float(row.r)} {format_float(row.deficit / row.r**2)}"
                )
            name = f"{spec.name}_qplot_lam{lam:g}_{method}.dat"
            (spec.out_dir / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _invariant_checks(rows: list[ResultRow]) -> dict[str, bool]:
    """Cross-cutting sanity checks over the computed rows."""
    quad_rows = [r for r in rows if r.method == "symmetric_quadrature"]
    quad_error_ok = all(
        r.error_estimate <= QUADRATURE_ERROR_BOUND * abs(r.capacity) for r in quad_rows
    )

    non_series = [r for r in rows if r.method != "series"]
    decreasing_lambda = True
    by_rm: dict[tuple, list] = {}
    for row in non_series:
        by_rm.setdefault((row.r, row.method), []).append(row)
    for group in by_rm.values():
        group.sort(key=lambda r: r.lam)
        for a, b in zip(group, group[1:]):
            if not b.capacity < a.capacity:
                decreasing_lambda = False

    increasing_r = True
    by_lm: dict[tuple, list] = {}
    for row in non_series:
        by_lm.setdefault((row.lam, row.method), []).append(row)
    for group in by_lm.values():
        group.sort(key=lambda r: r.r)
        for a, b in zip(group, group[1:]):
            if not b.capacity > a.capacity:
                increasing_r = False

    return {
        "quadrature_error_bound": quad_error_ok,
        "capacity_decreasing_in_lambda": decreasing_lambda,
        "capacity_increasing_in_r": increasing_r,
    }
