"""Geometry primitives on the unit viewing sphere.

All angles are radians. Distances are great-circle arc lengths in [0, pi].
Bearings are measured in a fixed tangent frame at each point: the frame's
first axis points toward the +z pole (projected into the tangent plane) and
the second completes a right-handed basis. When a point lies within
``UNIT_TOLERANCE`` of the +z/-z axis the frame falls back to the +x axis, so
bearings remain well defined at the poles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIT_TOLERANCE = 1e-9
TWO_PI = 2.0 * math.pi

_FRAME_AXIS = np.array([0.0, 0.0, 1.0])
_FRAME_AXIS_FALLBACK = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class SpherePoint:
    """A point on the unit sphere, renormalized at construction."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        v = np.array([self.x, self.y, self.z], dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"sphere point has non-finite coordinates: {v}")
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector to a sphere point")
        v /= norm
        object.__setattr__(self, "x", float(v[0]))
        object.__setattr__(self, "y", float(v[1]))
        object.__setattr__(self, "z", float(v[2]))

    @classmethod
    def from_array(cls, v) -> "SpherePoint":
        v = np.asarray(v, dtype=float)
        return cls(float(v[0]), float(v[1]), float(v[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def antipode(self) -> "SpherePoint":
        return SpherePoint(-self.x, -self.y, -self.z)


def check_angle(value: float, lo: float, hi: float, name: str) -> float:
    """Validate that an angle lies in [lo, hi]; returns it as a float."""
    value = float(value)
    if not math.isfinite(value) or value < lo or value > hi:
        raise ValueError(f"{name} must lie in [{lo:.6g}, {hi:.6g}], got {value!r}")
    return value


def unit_rows(vectors) -> np.ndarray:
    """Normalize an (n, 3) array of vectors to unit rows."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim != 2 or v.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) array, got shape {v.shape}")
    norms = np.linalg.norm(v, axis=1)
    if not np.all(np.isfinite(v)) or np.any(norms == 0.0):
        raise ValueError("rows must be finite and nonzero")
    return v / norms[:, None]


def spherical_distance(a: SpherePoint, b: SpherePoint) -> float:
    """Great-circle distance between two points, in [0, pi].

    Uses atan2 of the cross/dot pair, which stays accurate near 0 and pi
    where the arccos form loses precision.
    """
    va, vb = a.as_array(), b.as_array()
    return math.atan2(float(np.linalg.norm(np.cross(va, vb))), float(np.dot(va, vb)))


def arc_distances(points: np.ndarray, reference: SpherePoint) -> np.ndarray:
    """Great-circle distances from each row of an (n, 3) unit array."""
    r = reference.as_array()
    cross = np.cross(points, r)
    return np.arctan2(np.linalg.norm(cross, axis=1), points @ r)


def tangent_frame(origin: SpherePoint) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal tangent basis (t1, t2) at ``origin``.

    t1 is the unit projection of the +z axis onto the tangent plane
    (+x axis when the origin is within UNIT_TOLERANCE of +-z), and
    t2 = origin x t1.
    """
    o = origin.as_array()
    axis = _FRAME_AXIS
    if abs(float(np.dot(o, axis))) > 1.0 - UNIT_TOLERANCE:
        axis = _FRAME_AXIS_FALLBACK
    t1 = axis - np.dot(axis, o) * o
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(o, t1)
    return t1, t2


def point_at_distance(origin: SpherePoint, distance: float, bearing: float) -> SpherePoint:
    """Point at a given arc distance and bearing from ``origin``.

    Parameters
    ----------
    origin : SpherePoint
    distance : float
        Arc length in [0, pi].
    bearing : float
        Direction in the origin's tangent frame, in [0, 2*pi).
    """
    distance = check_angle(distance, 0.0, math.pi, "distance")
    bearing = float(bearing) % TWO_PI
    t1, t2 = tangent_frame(origin)
    direction = math.cos(bearing) * t1 + math.sin(bearing) * t2
    v = math.cos(distance) * origin.as_array() + math.sin(distance) * direction
    return SpherePoint.from_array(v)


def points_at_distance(origin: SpherePoint, distance: float, bearings: np.ndarray) -> np.ndarray:
    """Vectorized ``point_at_distance``: one unit row per bearing."""
    distance = check_angle(distance, 0.0, math.pi, "distance")
    t1, t2 = tangent_frame(origin)
    b = np.asarray(bearings, dtype=float)
    directions = np.cos(b)[:, None] * t1 + np.sin(b)[:, None] * t2
    rows = math.cos(distance) * origin.as_array() + math.sin(distance) * directions
    return unit_rows(rows)


def sample_on_circle(center: SpherePoint, radius: float, rng: np.random.Generator) -> SpherePoint:
    """Uniform random point on the circle of given arc radius around ``center``."""
    radius = check_angle(radius, 0.0, math.pi, "radius")
    return point_at_distance(center, radius, rng.uniform(0.0, TWO_PI))


def circle_circumference(error: float) -> float:
    """Circumference of the circle at arc distance ``error`` from its center:
    2*pi*sin(error)."""
    error = check_angle(error, 0.0, math.pi, "error")
    return TWO_PI * math.sin(error)


def random_point(rng: np.random.Generator) -> SpherePoint:
    """Area-uniform random point on the sphere."""
    while True:
        v = rng.normal(size=3)
        if np.linalg.norm(v) > 1e-12:
            return SpherePoint.from_array(v)
