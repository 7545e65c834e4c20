"""Experiment configuration: a single human-editable YAML tree.

Schema (see README for the full reference):

.. code-block:: yaml

    name: s3-sweep
    model:
      family: space_form            # space_form | warped_product | curvature_polynomial
      dim: 3
      curvature: 1.0                # space_form only
      # warp: {kind: sin|sinh|linear|quintic, param: 1.0}   # warped_product
      # generators: [[1, 2, 1, 2, 1.0]]                     # curvature_polynomial,
      #                                                     # 1-based (i, k, j, l, value)
      # valid_radius: 1.2           # optional override
    lambdas: [1.5, 2.0]
    radii: [0.2, 0.1, 0.05]         # or {r0: 0.2, levels: 6} for a dyadic sweep
    methods: [quadrature]           # subset of quadrature | variational | series
    resolution: 48                  # variational grid level L -> (L, L/2, L) cells
    workers: 1
    seed: 0
    output:
      dir: out
      field_dump: null              # or a path for the discrete harmonic field CSV
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import ConfigError
from ..metric_models import (
    CurvaturePolynomial,
    CurvatureTensor,
    MetricModel,
    SpaceForm,
    WarpProfile,
    WarpedProduct,
    validate,
)

__all__ = ["ExperimentSpec", "load_spec", "build_model"]

VALID_METHODS = ("quadrature", "variational", "series")
DEFAULT_DYADIC_LEVELS = 6
DEFAULT_MAX_R0 = 0.2


def build_model(spec: dict) -> MetricModel:
    """Instantiate a metric model from its config mapping."""
    if not isinstance(spec, dict):
        raise ConfigError("model must be a mapping")
    family = spec.get("family")
    dim = int(spec.get("dim", 3))
    kwargs = {}
    if "valid_radius" in spec and spec["valid_radius"] is not None:
        kwargs["valid_radius"] = float(spec["valid_radius"])
    try:
        if family == "space_form":
            return SpaceForm(dim, float(spec.get("curvature", 0.0)), **kwargs)
        if family == "warped_product":
            warp = spec.get("warp")
            if not isinstance(warp, dict) or "kind" not in warp:
                raise ConfigError("warped_product needs warp: {kind, param}")
            profile = WarpProfile(warp["kind"], float(warp.get("param", 0.0)))
            return WarpedProduct(dim, profile, **kwargs)
        if family == "curvature_polynomial":
            gens = spec.get("generators")
            if not gens:
                raise ConfigError("curvature_polynomial needs a generators list")
            tensor = CurvatureTensor.from_generators(
                dim, [tuple(g) for g in gens]
            )
            return CurvaturePolynomial(tensor, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model parameters: {exc}") from exc
    raise ConfigError(f"unknown model family {family!r}")


def _parse_radii(raw, max_lambda: float, valid_radius: float) -> list[float]:
    if raw is None:
        r0 = min(DEFAULT_MAX_R0, valid_radius / (2.0 * max_lambda))
        return [r0 * 2.0**-k for k in range(DEFAULT_DYADIC_LEVELS)]
    if isinstance(raw, dict):
        r0 = float(raw.get("r0", DEFAULT_MAX_R0))
        levels = int(raw.get("levels", DEFAULT_DYADIC_LEVELS))
        if r0 <= 0 or levels < 1:
            raise ConfigError("dyadic radii need r0 > 0 and levels >= 1")
        return [r0 * 2.0**-k for k in range(levels)]
    radii = [float(r) for r in raw]
    if not radii:
        raise ConfigError("radii must be non-empty")
    if any(r <= 0 for r in radii):
        raise ConfigError("radii must be positive")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii must be strictly decreasing")
    return radii


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated experiment description."""

    name: str
    model: MetricModel
    lambdas: tuple[float, ...]
    radii: tuple[float, ...]
    methods: tuple[str, ...]
    resolution: int
    workers: int
    seed: int
    out_dir: Path
    field_dump: Path | None
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a mapping")
        name = str(raw.get("name") or "experiment")
        model = build_model(raw.get("model") or {})
        report = validate(model, seed=int(raw.get("seed", 0)))
        if not report.ok:
            raise ConfigError(
                f"model failed validation (worst violation {report.worst_violation:.3e})"
            )

        lambdas = raw.get("lambdas") or [2.0]
        try:
            lambdas = tuple(float(l) for l in lambdas)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad lambdas: {exc}") from exc
        if any(l <= 1.0 for l in lambdas):
            raise ConfigError("every lambda must exceed 1")

        radii = tuple(_parse_radii(raw.get("radii"), max(lambdas), model.valid_radius))
        if max(radii) * max(lambdas) > model.valid_radius * (1 + 1e-12):
            raise ConfigError(
                f"radii * max(lambda) = {max(radii) * max(lambdas):g} exceeds "
                f"validity radius {model.valid_radius:g}"
            )

        methods = tuple(raw.get("methods") or ["quadrature"])
        bad = [m for m in methods if m not in VALID_METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}; valid: {list(VALID_METHODS)}")
        if len(set(methods)) != len(methods):
            raise ConfigError("duplicate methods")

        resolution = int(raw.get("resolution", 48))
        if resolution < 4:
            raise ConfigError("resolution level must be >= 4")
        workers = int(raw.get("workers", 1))
        if workers < 1:
            raise ConfigError("workers must be >= 1")

        output = raw.get("output") or {}
        out_dir = Path(output.get("dir", "out"))
        dump = output.get("field_dump")
        return cls(
            name=name,
            model=model,
            lambdas=lambdas,
            radii=radii,
            methods=methods,
            resolution=resolution,
            workers=workers,
            seed=int(raw.get("seed", 0)),
            out_dir=out_dir,
            field_dump=Path(dump) if dump else None,
            raw=raw,
        )


def load_spec(path) -> ExperimentSpec:
    """Parse and validate a YAML experiment file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return ExperimentSpec.from_dict(raw or {})
