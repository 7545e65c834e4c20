"""Numerical laboratory for relative capacities of small geodesic balls.

Computes the capacity of a geodesic ball relative to a concentric one in
model Riemannian manifolds, compares against the predicted small-radius
expansion whose r^2 coefficient carries the scalar curvature at the center,
and extracts that curvature back from capacity data.
"""

from .ball_geometry import (
    BallGeometry,
    a_series,
    ball_volume,
    druet_margin,
    druet_threshold_radius,
    geodesic_ball,
    sphere_area,
    unit_ball_volume,
    unit_sphere_area,
    v_series,
)
from .capacity import (
    CapacityQuery,
    CapacityResult,
    HarmonicProbeResult,
    dump_harmonic_field,
    euclidean_relative_capacity,
    harmonic_probe,
    symmetric_capacity,
    szego_upper_bound,
    variational_capacity,
)
from .curvature_fit import (
    DeficitSample,
    DeficitSeries,
    FitResult,
    SignVerdict,
    collect_deficits,
    conjecture_scan,
    fit_deficit_coefficient,
    nonnegativity_detector,
    variational_deficit_sample,
)
from .errors import (
    CapacityLabError,
    ConfigError,
    ModelDomainError,
    ModelValidationError,
    SolverConvergenceError,
    UnsupportedMethodError,
)
from .expansion import (
    BoundPrediction,
    ExpansionPrediction,
    bound_predictions,
    deficit_coefficient,
    predicted_capacity,
    unified_deficit,
)
from .metric_models import (
    CurvaturePolynomial,
    CurvatureTensor,
    MetricModel,
    SpaceForm,
    ValidationReport,
    WarpProfile,
    WarpedProduct,
    validate,
)

__version__ = "0.1.0"
