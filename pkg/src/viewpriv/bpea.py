"""Noisy-error obfuscation: leakage under additive error noise and the
minimal-|noise| choice meeting a per-sample leakage cap.

Instead of the exact prediction error e, the user uploads e + n with
n in [-e, pi - e] so the noisy value stays a plausible error in [0, pi].
The attacker, unaware of the noise, applies the strategy from
:mod:`viewpriv.leakage` to the noisy value. The resulting conditional
leakage probability is piecewise in (e, n):

    =====================  ================  =====================  ==================
    regime of e            n <= eps - e      eps - e < n < b        n >= b
    =====================  ================  =====================  ==================
    e <= eps               1                 mid(e, n)              0
    eps < e < pi - eps     0                 mid(e, n)              0
    e >= pi - eps          0                 mid(e, n)              1
    =====================  ================  =====================  ==================

with b = pi - e - eps and mid(e, n) = min(eff / (pi * sin e), 1), where
eff = arccos(cos eps / cos(min(|n|, eps))) is the effective precision: the
half-arc of the attacker's neighborhood intersected with the circle of
possible actual viewpoints. mid decreases in |n| and is exactly 0 once
|n| >= eps.

``optimal_noise`` returns the signed noise of smallest magnitude whose
leakage does not exceed the requirement q. Where the optimum sits at an
open-interval edge, a small margin (default ``DEFAULT_MARGIN``) keeps the
returned value strictly inside. The function is deterministic.
"""

from __future__ import annotations

import math

import numpy as np

from .leakage import check_precision
from .sphere import check_angle

DEFAULT_MARGIN = 1e-4


def check_requirement(q: float) -> float:
    q = float(q)
    if not math.isfinite(q) or not 0.0 <= q <= 1.0:
        raise ValueError(f"privacy requirement must lie in [0, 1], got {q!r}")
    return q


def check_margin(margin: float) -> float:
    margin = float(margin)
    if not math.isfinite(margin) or margin <= 0.0:
        raise ValueError(f"solver margin must be positive, got {margin!r}")
    return margin


def noise_bounds(error: float) -> tuple[float, float]:
    """Admissible noise range [-e, pi - e] for a given error."""
    error = check_angle(error, 0.0, math.pi, "error")
    return -error, math.pi - error


def effective_precision(noise, eps: float):
    """Half-arc of the attacker's neighborhood cut by the viewpoint circle:
    arccos(cos eps / cos(min(|n|, eps))). Zero for |n| >= eps."""
    eps = check_precision(eps)
    n = np.abs(np.asarray(noise, dtype=float))
    ratio = np.clip(math.cos(eps) / np.cos(np.minimum(n, eps)), -1.0, 1.0)
    out = np.arccos(ratio)
    return float(out) if np.ndim(noise) == 0 else out


def _mid_leakage(error, noise, eps: float):
    """The middle-regime leakage formula, safe at sin(e) = 0."""
    eff = effective_precision(noise, eps)
    e = np.asarray(error, dtype=float)
    denom = np.maximum(math.pi * np.sin(e), 1e-300)
    return np.where(eff <= 0.0, 0.0, np.minimum(np.asarray(eff) / denom, 1.0))


def conditional_leakage_noisy(error, noise, eps: float):
    """Leakage probability when error ``e`` is uploaded as ``e + n``.

    ``error`` and ``noise`` may be scalars or broadcastable arrays; noise
    values outside [-e, pi - e] are rejected since the attacker could detect
    such an upload.
    """
    eps = check_precision(eps)
    e = np.asarray(error, dtype=float)
    n = np.asarray(noise, dtype=float)
    if not np.all(np.isfinite(e)) or np.any(e < 0.0) or np.any(e > math.pi):
        raise ValueError("errors must lie in [0, pi]")
    if not np.all(np.isfinite(n)) or np.any(n < -e) or np.any(n > math.pi - e):
        raise ValueError("noise must lie in [-e, pi - e]")

    low = e <= eps
    high = e >= math.pi - eps
    left = n <= eps - e
    right = n >= math.pi - e - eps
    ones = (low & left) | (high & right)
    zeros = (~ones) & (left | right)
    out = np.where(ones, 1.0, np.where(zeros, 0.0, _mid_leakage(e, n, eps)))
    return float(out) if np.ndim(error) == 0 and np.ndim(noise) == 0 else out


def noise_for_leakage(error: float, eps: float, q: float) -> float:
    """Noise magnitude making the middle-regime leakage equal q.

    Only defined while q * pi * sin(e) <= eps (the middle-regime formula can
    reach q); callers solving the general piecewise problem should use
    ``optimal_noise`` instead.
    """
    eps = check_precision(eps)
    error = check_angle(error, 0.0, math.pi, "error")
    q = check_requirement(q)
    target = q * math.pi * math.sin(error)
    if target > eps:
        raise ValueError(
            f"q*pi*sin(e) = {target:.6g} exceeds precision {eps:.6g}; "
            "the middle-regime leakage never reaches q"
        )
    value = math.acos(min(1.0, math.cos(eps) / math.cos(target)))
    if target <= 0.0:
        # Zero target means |n| must reach the saturation point eps exactly;
        # keep the arccos round-trip from landing an ulp short of it.
        value = max(value, eps)
    return value


def _feasible_crossing(error: float, eps: float, q: float) -> float:
    """The crossing magnitude, nudged up until the evaluated leakage
    actually meets q.

    The analytic inversion can land a hair on the wrong side of the
    requirement (roundoff through an ill-conditioned arccos); geometric
    step escalation closes that deficit within ~1e-13 of the true
    crossing.
    """
    value = noise_for_leakage(error, eps, q)
    step = max(math.ulp(value), 1e-18)
    for _ in range(200):
        if _mid_leakage(error, value, eps) <= q:
            return value
        value += step
        step *= 2.0
    raise ArithmeticError(
        f"crossing refinement did not converge at e={error!r}, q={q!r}"
    )


def optimal_noise(error: float, eps: float, q: float, margin: float = DEFAULT_MARGIN) -> float:
    """Signed noise of minimal magnitude with leakage at most q.

    A feasible noise always exists: every error regime has a zero-leakage
    noise cell. Ties between a positive and a negative candidate of equal
    magnitude resolve to the positive one, which enlarges the streamed zone
    rather than shrinking it.
    """
    eps = check_precision(eps)
    error = check_angle(error, 0.0, math.pi, "error")
    q = check_requirement(q)
    margin = check_margin(margin)
    if q >= 1.0:
        return 0.0

    left_edge = eps - error        # below: the n <= eps - e cell
    right_edge = math.pi - error - eps  # above: the n >= pi - e - eps cell

    if error <= eps:
        # Small error: the whole middle interval is non-negative noise.
        if _mid_leakage(error, left_edge, eps) <= q:
            return left_edge + margin
        if _mid_leakage(error, right_edge, eps) <= q:
            return _feasible_crossing(error, eps, q)
        return right_edge  # closed boundary of the zero cell

    if error >= math.pi - eps:
        # Near-antipodal error: the middle interval is non-positive noise.
        if _mid_leakage(error, right_edge, eps) <= q:
            return right_edge - margin
        if _mid_leakage(error, left_edge, eps) <= q:
            return -_feasible_crossing(error, eps, q)
        return left_edge  # closed boundary of the zero cell

    # Mid-range error: zero cells on both sides, middle interval spans 0.
    if _mid_leakage(error, 0.0, eps) <= q:
        return 0.0
    candidates = [(-left_edge, left_edge), (right_edge, right_edge)]
    farthest = max(-left_edge, right_edge)
    if _mid_leakage(error, farthest, eps) <= q:
        magnitude = _feasible_crossing(error, eps, q)
        candidates.append((magnitude, magnitude))
    return min(candidates, key=lambda c: c[0])[1]


def optimal_noise_batch(errors, eps: float, q: float, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """Vectorized ``optimal_noise`` over an array of errors.

    Mirrors the scalar branch logic, including tie-breaks; the two agree to
    floating-point roundoff.
    """
    eps = check_precision(eps)
    q = check_requirement(q)
    margin = check_margin(margin)
    e = np.asarray(errors, dtype=float)
    if not np.all(np.isfinite(e)) or np.any(e < 0.0) or np.any(e > math.pi):
        raise ValueError("errors must lie in [0, pi]")
    if q >= 1.0:
        return np.zeros_like(e)

    left = eps - e
    right = math.pi - e - eps
    m_left = _mid_leakage(e, left, eps)
    m_right = _mid_leakage(e, right, eps)
    m_zero = _mid_leakage(e, 0.0, eps)

    # Magnitude solving mid-regime leakage == q; clamp keeps arccos in
    # domain where the value is masked out as unused.
    target = q * math.pi * np.sin(e)
    ratio = np.clip(math.cos(eps) / np.cos(np.minimum(target, eps)), -1.0, 1.0)
    crossing = np.arccos(ratio)
    crossing = np.where(target <= 0.0, np.maximum(crossing, eps), crossing)
    # Refinement mirroring _feasible_crossing, applied only where the
    # inversion is in domain.
    in_domain = target <= eps
    step = np.maximum(np.spacing(np.abs(crossing)), 1e-18)
    for _ in range(200):
        short = in_domain & (_mid_leakage(e, crossing, eps) > q)
        if not np.any(short):
            break
        crossing = np.where(short, crossing + step, crossing)
        step = np.where(short, step * 2.0, step)

    low_val = np.where(m_left <= q, left + margin, np.where(m_right <= q, crossing, right))
    high_val = np.where(m_right <= q, right - margin, np.where(m_left <= q, -crossing, left))

    farthest = np.maximum(-left, right)
    m_far = _mid_leakage(e, farthest, eps)
    bound_val = np.where(-left <= right, left, right)
    bound_mag = np.minimum(-left, right)
    with_crossing = np.where(crossing < bound_mag, crossing, bound_val)
    mid_val = np.where(m_zero <= q, 0.0, np.where(m_far <= q, with_crossing, bound_val))

    low = e <= eps
    high = e >= math.pi - eps
    return np.where(low, low_val, np.where(high, high_val, mid_val))


def obfuscate_error(error: float, eps: float, q: float, margin: float = DEFAULT_MARGIN) -> float:
    """The value to upload in place of the exact error: e + optimal noise."""
    noisy = error + optimal_noise(error, eps, q, margin)
    # Guard against float drift past the admissible range.
    return min(max(noisy, 0.0), math.pi)
