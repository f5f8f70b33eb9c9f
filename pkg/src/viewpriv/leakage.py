"""Viewpoint-leakage probabilities when predicted viewpoint and exact
prediction error are uploaded, and the attacker strategy attaining them.

The attacker intercepts the predicted viewpoint P and the reported error e,
concludes that the actual viewpoint lies on the circle of arc radius e
around P, and picks the inferred viewpoint that maximizes the chance of
landing within the required precision ``eps`` of the actual one:

* e <= eps: pick P itself (the whole circle is inside its neighborhood),
* e >= pi - eps: pick the antipode of P,
* otherwise: pick a uniformly random point on the circle itself.

The resulting conditional leakage probability is 1 in the two outer regimes
and min(eps / (pi * sin e), 1) in the middle one. Boundary errors e = eps
and e = pi - eps are assigned to the value-1 regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .sphere import SpherePoint, check_angle, sample_on_circle

# Required inference precision must stay below a quarter turn; at and above
# 0.5*pi the middle regime vanishes and leakage is always 1.
MAX_PRECISION = 0.5 * math.pi

_METHODS = ("analytic", "sample_mean", "monte_carlo")


def check_precision(eps: float) -> float:
    eps = float(eps)
    if not math.isfinite(eps) or not 0.0 < eps < MAX_PRECISION:
        raise ValueError(f"precision must lie in (0, 0.5*pi), got {eps!r}")
    return eps


@dataclass(frozen=True)
class LeakageEstimate:
    """A leakage probability with provenance.

    ``half_width`` is the binomial confidence half-width and is present
    exactly when the estimate is Monte-Carlo.
    """

    value: float
    method: str
    trials: int | None = None
    half_width: float | None = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown estimate method {self.method!r}")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"leakage probability out of [0, 1]: {self.value!r}")
        if (self.half_width is not None) != (self.method == "monte_carlo"):
            raise ValueError("half_width is present exactly for monte_carlo estimates")


def conditional_leakage(error, eps: float):
    """Leakage probability given a reported exact error.

    Accepts a scalar or array of errors in [0, pi]; returns the same shape.
    """
    eps = check_precision(eps)
    e = np.asarray(error, dtype=float)
    if not np.all(np.isfinite(e)) or np.any(e < 0.0) or np.any(e > math.pi):
        raise ValueError("errors must lie in [0, pi]")
    sine = np.maximum(np.sin(e), 1e-300)
    middle = np.minimum(eps / (math.pi * sine), 1.0)
    out = np.where((e <= eps) | (e >= math.pi - eps), 1.0, middle)
    return float(out) if np.ndim(error) == 0 else out


def optimal_inferred_viewpoint(
    predicted: SpherePoint,
    reported_error: float,
    eps: float,
    rng: np.random.Generator,
) -> SpherePoint:
    """The attacker's best guess for the actual viewpoint."""
    eps = check_precision(eps)
    reported_error = check_angle(reported_error, 0.0, math.pi, "reported_error")
    if reported_error <= eps:
        return predicted
    if reported_error >= math.pi - eps:
        return predicted.antipode()
    return sample_on_circle(predicted, reported_error, rng)


def leakage_sample_mean(errors, eps: float) -> LeakageEstimate:
    """Sample-mean leakage over a set of reported errors."""
    e = np.asarray(errors, dtype=float)
    if e.size == 0:
        raise ValueError("cannot estimate leakage from an empty error list")
    value = float(np.mean(conditional_leakage(e.ravel(), eps)))
    return LeakageEstimate(value=value, method="sample_mean", trials=int(e.size))


def optimal_error_distribution(eps: float) -> tuple[float, float]:
    """Error value and leakage of the leakage-minimizing error distribution.

    The minimizing distribution is a point mass; this returns its location
    (0.5*pi) and the floor probability eps/pi.
    """
    eps = check_precision(eps)
    return 0.5 * math.pi, eps / math.pi


def min_leakage_grid_check(eps: float, bins: int) -> float:
    """Numeric check of the leakage floor on a uniform error grid.

    Minimizes the expected leakage over all discrete error distributions
    supported on ``bins`` evenly spaced points of [0, pi]. The objective is
    linear in the distribution, so the optimum sits on a single grid point
    and equals the smallest per-point leakage.
    """
    eps = check_precision(eps)
    bins = int(bins)
    if bins < 2:
        raise ValueError(f"need at least 2 grid points, got {bins}")
    grid = np.linspace(0.0, math.pi, bins)
    return float(np.min(conditional_leakage(grid, eps)))
