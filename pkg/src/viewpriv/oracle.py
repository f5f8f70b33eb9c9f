"""Monte-Carlo and grid-search attacker.

Verifies the analytic leakage expressions from geometry alone: the actual
viewpoint is drawn uniformly on its circle around a fixed predicted
viewpoint, the attacker applies the selection rule from
:mod:`viewpriv.leakage` to the (possibly noisy) reported error, and a trial
counts as leakage when the guess lands within the required precision of the
actual viewpoint. No closed-form leakage formula is consulted anywhere in
this module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bpea import noise_bounds
from .leakage import LeakageEstimate, check_precision
from .sphere import SpherePoint, TWO_PI, check_angle, points_at_distance, unit_rows

# The predicted viewpoint is fixed here; leakage is rotation invariant.
REFERENCE_POINT = SpherePoint(0.0, 0.0, 1.0)

_CANDIDATE_CHUNK = 256


@dataclass(frozen=True)
class OracleConfig:
    trials: int = 100_000
    grid_resolution: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1_000:
            raise ValueError(f"need at least 1000 trials, got {self.trials}")
        if not 0.0 < self.grid_resolution <= 0.1:
            raise ValueError(
                f"grid resolution must lie in (0, 0.1], got {self.grid_resolution!r}"
            )


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent sub-streams for the viewer's and the attacker's draws."""
    viewer_seq, attacker_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(viewer_seq), np.random.default_rng(attacker_seq)


def empirical_conditional_leakage(
    error: float, noise: float, eps: float, cfg: OracleConfig
) -> LeakageEstimate:
    """Monte-Carlo estimate of the leakage probability at (e, n).

    Returns the leak fraction with a 4-standard-deviation binomial
    confidence half-width.
    """
    eps = check_precision(eps)
    error = check_angle(error, 0.0, math.pi, "error")
    lo, hi = noise_bounds(error)
    noise = check_angle(noise, lo, hi, "noise")

    viewer_rng, attacker_rng = _streams(cfg.seed)
    actual = points_at_distance(
        REFERENCE_POINT, error, viewer_rng.uniform(0.0, TWO_PI, cfg.trials)
    )

    reported = error + noise
    if reported <= eps:
        guesses = REFERENCE_POINT.as_array()[None, :]
    elif reported >= math.pi - eps:
        guesses = -REFERENCE_POINT.as_array()[None, :]
    else:
        guesses = points_at_distance(
            REFERENCE_POINT, reported, attacker_rng.uniform(0.0, TWO_PI, cfg.trials)
        )

    # d(V, Vhat) <= eps is equivalent to dot(V, Vhat) >= cos(eps).
    leaked = np.sum(actual * guesses, axis=1) >= math.cos(eps)
    p = float(np.mean(leaked))
    half_width = 4.0 * math.sqrt(p * (1.0 - p) / cfg.trials)
    return LeakageEstimate(p, "monte_carlo", trials=cfg.trials, half_width=half_width)


def fibonacci_sphere(count: int) -> np.ndarray:
    """Near-uniform (count, 3) point set from the golden-angle spiral."""
    if count < 1:
        raise ValueError("need at least one lattice point")
    i = np.arange(count, dtype=float)
    z = 1.0 - (2.0 * i + 1.0) / count
    radius = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    golden = math.pi * (3.0 - math.sqrt(5.0))
    theta = golden * i
    return unit_rows(np.column_stack((radius * np.cos(theta), radius * np.sin(theta), z)))


def _lattice_size(resolution: float) -> int:
    # Lattice dense enough that every sphere point has a neighbor well
    # within `resolution` (covering radius ~ sqrt(4*pi/count)).
    return max(64, int(math.ceil(16.0 * math.pi / resolution**2)))


def grid_attacker_best(
    error: float,
    eps: float,
    cfg: OracleConfig,
    min_distance: float | None = None,
) -> tuple[SpherePoint, float]:
    """Exhaustive search for the best inferred viewpoint.

    Scans a Fibonacci lattice of candidate guesses, scoring each by the
    Monte-Carlo leak fraction over a shared set of actual-viewpoint draws on
    the circle. Returns the argmax candidate and its estimated probability.
    ``min_distance`` optionally restricts candidates to lie farther than
    that arc distance from the predicted viewpoint.
    """
    eps = check_precision(eps)
    error = check_angle(error, 0.0, math.pi, "error")
    if not eps < error < math.pi - eps:
        raise ValueError("grid search applies to mid-range errors only")

    candidates = fibonacci_sphere(_lattice_size(cfg.grid_resolution))
    if min_distance is not None:
        ref = REFERENCE_POINT.as_array()
        keep = np.arccos(np.clip(candidates @ ref, -1.0, 1.0)) > min_distance
        if not np.any(keep):
            raise ValueError("candidate filter removed every lattice point")
        candidates = candidates[keep]

    viewer_rng, _ = _streams(cfg.seed)
    actual = points_at_distance(
        REFERENCE_POINT, error, viewer_rng.uniform(0.0, TWO_PI, cfg.trials)
    )

    cos_eps = math.cos(eps)
    counts = np.empty(len(candidates), dtype=np.int64)
    for start in range(0, len(candidates), _CANDIDATE_CHUNK):
        chunk = candidates[start : start + _CANDIDATE_CHUNK]
        counts[start : start + len(chunk)] = np.sum(chunk @ actual.T >= cos_eps, axis=1)

    best = int(np.argmax(counts))
    return SpherePoint.from_array(candidates[best]), float(counts[best] / cfg.trials)
