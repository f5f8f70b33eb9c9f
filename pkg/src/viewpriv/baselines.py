"""Viewpoint-noise baselines, their calibration, and the requirement
satisfaction ratio.

The baselines perturb three-dimensional viewpoint coordinates with
zero-mean Gaussian or Laplace noise and renormalize to the unit sphere.
Because such noise only reshapes the error distribution, the achievable
leakage is floored at eps/pi regardless of scale; calibration searches the
scale parameter with a simple forward scan and reports infeasibility when
no scale meets the requirement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .leakage import check_precision, leakage_sample_mean
from .sphere import SpherePoint, unit_rows

GAUSSIAN_KIND = "gaussian_sigma"
LAPLACE_KIND = "laplace_b"

# Default scan ranges for the one-dimensional calibration search.
SEARCH_MAX = {GAUSSIAN_KIND: 7.0, LAPLACE_KIND: 6.0}
DEFAULT_SEARCH_STEP = 0.05


@dataclass(frozen=True)
class NoiseScale:
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in (GAUSSIAN_KIND, LAPLACE_KIND):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not math.isfinite(self.value) or self.value < 0.0:
            raise ValueError(f"noise scale must be non-negative, got {self.value!r}")


@dataclass(frozen=True)
class CalibrationResult:
    """Outcome of the forward scan over noise scales.

    ``scale`` is the smallest scanned scale meeting the requirement, or None
    when none does. ``fallback_scale`` is the scanned scale with the lowest
    achieved leakage, for callers that must run a baseline even when the
    requirement is unattainable. ``achieved_leakage`` belongs to ``scale``
    when feasible, otherwise to ``fallback_scale``.
    """

    scale: NoiseScale | None
    achieved_leakage: float
    search_evals: int
    fallback_scale: NoiseScale

    @property
    def feasible(self) -> bool:
        return self.scale is not None


def perturb_rows(points: np.ndarray, kind: str, value: float, rng: np.random.Generator) -> np.ndarray:
    """Add per-coordinate noise to (n, 3) unit rows and renormalize.

    The all-zero perturbed vector has probability zero; if it occurs it is
    resampled.
    """
    NoiseScale(kind, value)
    pts = np.asarray(points, dtype=float)
    if value == 0.0:
        return pts.copy()
    draw = rng.normal if kind == GAUSSIAN_KIND else rng.laplace
    noisy = pts + draw(0.0, value, size=pts.shape)
    bad = np.linalg.norm(noisy, axis=1) < 1e-12
    while np.any(bad):
        noisy[bad] = pts[bad] + draw(0.0, value, size=(int(np.sum(bad)), 3))
        bad = np.linalg.norm(noisy, axis=1) < 1e-12
    return unit_rows(noisy)


def gaussian_obfuscate(point: SpherePoint, sigma: NoiseScale, rng: np.random.Generator) -> SpherePoint:
    if sigma.kind != GAUSSIAN_KIND:
        raise ValueError(f"expected a {GAUSSIAN_KIND} scale, got {sigma.kind}")
    return SpherePoint.from_array(
        perturb_rows(point.as_array()[None, :], sigma.kind, sigma.value, rng)[0]
    )


def laplace_obfuscate(point: SpherePoint, scale: NoiseScale, rng: np.random.Generator) -> SpherePoint:
    if scale.kind != LAPLACE_KIND:
        raise ValueError(f"expected a {LAPLACE_KIND} scale, got {scale.kind}")
    return SpherePoint.from_array(
        perturb_rows(point.as_array()[None, :], scale.kind, scale.value, rng)[0]
    )


def calibrate_noise_scale(
    error_pipeline: Callable[[float], np.ndarray],
    eps: float,
    q: float,
    kind: str,
    search_max: float | None = None,
    step: float = DEFAULT_SEARCH_STEP,
) -> CalibrationResult:
    """Forward scan for the smallest scale whose leakage meets q.

    ``error_pipeline`` maps a scale value to the prediction errors measured
    on the calibration traces after obfuscation at that scale; it must be
    deterministic per scale (callers derive its randomness from the scale).
    A forward scan is used instead of bisection because the achieved
    leakage need not be monotone in the scale near the floor.
    """
    check_precision(eps)
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"privacy requirement must lie in [0, 1], got {q!r}")
    if step <= 0.0:
        raise ValueError(f"search step must be positive, got {step!r}")
    if search_max is None:
        search_max = SEARCH_MAX[kind]

    best_scale, best_leak = None, math.inf
    evals = 0
    count = int(math.floor(search_max / step + 1e-9)) + 1
    for i in range(count):
        scale = min(i * step, search_max)
        errors = np.asarray(error_pipeline(scale), dtype=float)
        if errors.size == 0:
            raise ValueError("error pipeline produced an empty calibration set")
        leak = leakage_sample_mean(errors, eps).value
        evals += 1
        if leak < best_leak:
            best_scale, best_leak = scale, leak
        if leak <= q:
            return CalibrationResult(
                scale=NoiseScale(kind, scale),
                achieved_leakage=leak,
                search_evals=evals,
                fallback_scale=NoiseScale(kind, scale),
            )
    return CalibrationResult(
        scale=None,
        achieved_leakage=best_leak,
        search_evals=evals,
        fallback_scale=NoiseScale(kind, best_scale),
    )


def pspr(per_trace_leakage, q: float) -> float:
    """Fraction of per-trace leakage values meeting the requirement q."""
    values = np.asarray(per_trace_leakage, dtype=float)
    if values.size == 0:
        raise ValueError("cannot compute a satisfaction ratio over no traces")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"privacy requirement must lie in [0, 1], got {q!r}")
    return float(np.mean(values <= q))
