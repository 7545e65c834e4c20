"""Predicted small-radius behavior of the relative capacity of concentric
geodesic balls.

The capacity deficit ``1 - cap(r, lam r) / c_n(r, lam r)`` grows like
``kappa(n, lam, S) r^2`` for small r, with a coefficient linear in the
scalar curvature S at the center:

* n = 3:   kappa = S lam / 18
* n = 4:   kappa = (S / 12) log(lam) / (1 - lam^-2)
* n >= 5:  kappa = (n-2) S / (6 n (n-4)) * (1 - lam^(4-n)) / (1 - lam^(2-n))

A single formula covers all dimensions when written through the Euclidean
relative capacities in dimensions n and n-2,

    kappa r^2 = (n-2) S / (6 n |n-4|*) * c_n(r, lam r) / c_{n-2}(r, lam r),

where the |n-4| factor is omitted for n = 4.  The dimension-four case is a
genuine anomaly (two-dimensional capacity is logarithmic), so n = 3 and
n = 4 are explicit code branches and the unified form serves as an
independent cross-check, never as the primary evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .capacity import euclidean_relative_capacity

__all__ = [
    "ExpansionPrediction",
    "BoundPrediction",
    "deficit_coefficient",
    "unified_deficit",
    "predicted_capacity",
    "bound_predictions",
]

# Predictions are asymptotic; beyond this deficit fraction they are flagged.
REGIME_LIMIT = 0.5


def deficit_coefficient(n: int, lam: float, S: float) -> float:
    """Coefficient kappa(n, lam, S) of r^2 in the capacity deficit."""
    if n < 3:
        raise ValueError(f"expansion defined for n >= 3, got {n}")
    if lam <= 1.0:
        raise ValueError(f"ratio must exceed 1, got {lam:g}")
    if n == 3:
        return S * lam / 18.0
    if n == 4:
        return (S / 12.0) * math.log(lam) / (1.0 - lam**-2)
    return (
        (n - 2.0)
        * S
        / (6.0 * n * (n - 4.0))
        * (1.0 - lam ** (4.0 - n))
        / (1.0 - lam ** (2.0 - n))
    )


def unified_deficit(n: int, lam: float, r: float, S: float) -> float:
    """Deficit kappa r^2 through the c_n / c_{n-2} capacity ratio."""
    if n < 3:
        raise ValueError(f"expansion defined for n >= 3, got {n}")
    if lam <= 1.0:
        raise ValueError(f"ratio must exceed 1, got {lam:g}")
    factor = abs(n - 4) if n != 4 else 1
    ratio = euclidean_relative_capacity(n, r, lam * r) / euclidean_relative_capacity(
        n - 2, r, lam * r
    )
    return (n - 2.0) * S / (6.0 * n * factor) * ratio


@dataclass(frozen=True)
class ExpansionPrediction:
    """Predicted relative capacity of the ball pair (r, lam r)."""

    n: int
    lam: float
    r: float
    S: float
    predicted_capacity: float
    deficit_coefficient: float
    branch: str  # n3 | n4 | n5plus
    unified_deficit: float
    in_asymptotic_regime: bool
    positive: bool


def predicted_capacity(n: int, lam: float, r: float, S: float) -> ExpansionPrediction:
    """Central predicted value c_n(r, lam r) (1 - kappa r^2).

    Both the dimension-branch evaluation and the unified-form evaluation are
    stored; they agree to roundoff.  A prediction outside the asymptotic
    regime (kappa r^2 > 0.5, or a non-positive value) is flagged, not
    rejected.
    """
    kappa = deficit_coefficient(n, lam, S)
    cn = euclidean_relative_capacity(n, r, lam * r)
    value = cn * (1.0 - kappa * r**2)
    branch = "n3" if n == 3 else ("n4" if n == 4 else "n5plus")
    return ExpansionPrediction(
        n=n,
        lam=lam,
        r=r,
        S=S,
        predicted_capacity=value,
        deficit_coefficient=kappa,
        branch=branch,
        unified_deficit=unified_deficit(n, lam, r, S),
        in_asymptotic_regime=abs(kappa) * r**2 <= REGIME_LIMIT,
        positive=value > 0.0,
    )


@dataclass(frozen=True)
class BoundPrediction:
    """Central value shared by the capacity upper and lower bounds.

    Both bounds have the same r^2 coefficient; they differ only in the
    remainder: O(r^4) for the upper bound, o(r^2) without a stated rate for
    the lower bound.  Acceptance windows around the lower bound are
    therefore empirical, calibrated per model family.
    """

    upper_value: float
    lower_value: float
    upper_remainder_exponent: int = 4
    lower_remainder_exponent: int = 2
    lower_remainder_is_little_o: bool = True


def bound_predictions(n: int, lam: float, r: float, S: float) -> BoundPrediction:
    """Shared central value of the two-sided capacity bounds at (n, lam, r, S)."""
    central = predicted_capacity(n, lam, r, S).predicted_capacity
    return BoundPrediction(upper_value=central, lower_value=central)
