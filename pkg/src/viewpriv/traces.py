"""Session traces: synthesis, the persistence predictor proxy, and CSV IO.

A session trace is one user watching one video: a sequence of per-GoP
actual viewpoints, optionally with externally supplied predictions.
Synthetic traces follow a bounded random walk on the sphere whose per-GoP
step is drawn from a von Mises-Fisher distribution around the current
viewpoint; higher concentration means slower head movement.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .sphere import SpherePoint, TWO_PI, point_at_distance, random_point, unit_rows

# Tuned so that two-GoP-ahead persistence errors spread across both sides of
# a 0.1*pi precision radius.
DEFAULT_CONCENTRATION = 32.0
DEFAULT_HORIZON = 2

MIN_GOPS = 3

TRACE_HEADER = [
    "user_id", "video_id", "gop_index",
    "actual_x", "actual_y", "actual_z",
]
TRACE_PRED_COLUMNS = ["pred_x", "pred_y", "pred_z"]

_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class SessionTrace:
    user_id: int
    video_id: int
    actual: np.ndarray = field(repr=False)
    predicted: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        actual = unit_rows(self.actual)
        if len(actual) < MIN_GOPS:
            raise ValueError(
                f"trace ({self.user_id}, {self.video_id}) has {len(actual)} GoPs; "
                f"need at least {MIN_GOPS}"
            )
        object.__setattr__(self, "actual", actual)
        if self.predicted is not None:
            predicted = unit_rows(self.predicted)
            if predicted.shape != actual.shape:
                raise ValueError("predicted viewpoints must match the actual GoP count")
            object.__setattr__(self, "predicted", predicted)

    @property
    def gops(self) -> int:
        return len(self.actual)


def vmf_step(current: SpherePoint, concentration: float, rng: np.random.Generator) -> SpherePoint:
    """One von Mises-Fisher draw centered on ``current``.

    Infinite concentration returns ``current`` unchanged.
    """
    if concentration <= 0.0:
        raise ValueError(f"concentration must be positive, got {concentration!r}")
    if math.isinf(concentration):
        return current
    angle = _vmf_angle(1.0 - rng.random(), concentration)
    return point_at_distance(current, angle, rng.uniform(0.0, TWO_PI))


def _vmf_angle(u, concentration: float):
    """Polar step angle from a uniform draw in (0, 1], via the inverse CDF
    of the von Mises-Fisher cosine."""
    w = 1.0 + np.log(u + (1.0 - u) * math.exp(-2.0 * concentration)) / concentration
    return np.arccos(np.clip(w, -1.0, 1.0))


def _walk_step(v: np.ndarray, angle: float, bearing: float) -> np.ndarray:
    # Raw-array counterpart of sphere.point_at_distance, to keep long walks
    # cheap; same tangent-frame convention.
    if abs(v[2]) > 1.0 - 1e-9:
        axis = np.array([1.0, 0.0, 0.0])
    else:
        axis = np.array([0.0, 0.0, 1.0])
    t1 = axis - np.dot(axis, v) * v
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(v, t1)
    out = math.cos(angle) * v + math.sin(angle) * (math.cos(bearing) * t1 + math.sin(bearing) * t2)
    return out / np.linalg.norm(out)


def generate_synthetic_trace(
    user_id: int,
    video_id: int,
    gops: int,
    rng: np.random.Generator,
    concentration: float = DEFAULT_CONCENTRATION,
) -> SessionTrace:
    """Bounded-random-walk head trace with ``gops`` viewpoints."""
    if gops < MIN_GOPS:
        raise ValueError(f"need at least {MIN_GOPS} GoPs, got {gops}")
    if concentration <= 0.0:
        raise ValueError(f"concentration must be positive, got {concentration!r}")
    start = random_point(rng).as_array()
    rows = np.empty((gops, 3))
    rows[0] = start
    if math.isinf(concentration):
        rows[1:] = start
        return SessionTrace(user_id, video_id, rows)
    angles = _vmf_angle(1.0 - rng.random(gops - 1), concentration)
    bearings = rng.uniform(0.0, TWO_PI, gops - 1)
    current = start
    for t in range(1, gops):
        current = _walk_step(current, float(angles[t - 1]), float(bearings[t - 1]))
        rows[t] = current
    return SessionTrace(user_id, video_id, rows)


def persistence_predict(actual: np.ndarray, horizon: int = DEFAULT_HORIZON) -> np.ndarray:
    """Predict each GoP's viewpoint as the one observed ``horizon`` GoPs ago.

    The first GoPs, for which no observation that old exists, reuse the
    earliest available viewpoint. ``horizon`` = 0 returns the input.
    """
    if horizon < 0:
        raise ValueError(f"horizon must be non-negative, got {horizon}")
    actual = np.asarray(actual, dtype=float)
    indices = np.maximum(np.arange(len(actual)) - horizon, 0)
    return actual[indices]


def prediction_errors(predicted: np.ndarray, actual: np.ndarray) -> np.ndarray:
    """Spherical distances between predictions and actuals, elementwise over
    the last axis."""
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    cross = np.linalg.norm(np.cross(predicted, actual), axis=-1)
    dot = np.sum(predicted * actual, axis=-1)
    return np.arctan2(cross, dot)


def _parse_point(row: dict, columns: list[str], row_index: int) -> np.ndarray:
    values = []
    for col in columns:
        raw = row.get(col, "")
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ValueError(f"row {row_index}: column {col!r} is not a number: {raw!r}")
        if not math.isfinite(value):
            raise ValueError(f"row {row_index}: column {col!r} is not finite")
        values.append(value)
    v = np.array(values)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > _NORM_TOLERANCE:
        raise ValueError(
            f"row {row_index}: columns {columns[0]}..{columns[-1]} have norm "
            f"{norm:.8f}, more than {_NORM_TOLERANCE} away from 1"
        )
    return v / norm


def load_traces(path) -> list[SessionTrace]:
    """Read session traces from CSV, validating schema and geometry.

    Rows must be grouped by (user_id, video_id) with gop_index contiguous
    from 0 within each group.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        has_pred = header == TRACE_HEADER + TRACE_PRED_COLUMNS
        if header != TRACE_HEADER and not has_pred:
            raise ValueError(f"unexpected trace header: {header}")

        groups: dict[tuple[int, int], dict] = {}
        order: list[tuple[int, int]] = []
        for i, row in enumerate(reader):
            row_index = i + 2  # 1-based, counting the header line
            try:
                key = (int(row["user_id"]), int(row["video_id"]))
                gop = int(row["gop_index"])
            except (TypeError, ValueError):
                raise ValueError(f"row {row_index}: user_id/video_id/gop_index must be integers")
            if key not in groups:
                groups[key] = {"actual": [], "pred": []}
                order.append(key)
            group = groups[key]
            if gop != len(group["actual"]):
                raise ValueError(
                    f"row {row_index}: gop_index {gop} breaks the contiguous-from-0 "
                    f"order for trace {key}"
                )
            group["actual"].append(_parse_point(row, TRACE_HEADER[3:], row_index))
            if has_pred:
                group["pred"].append(_parse_point(row, TRACE_PRED_COLUMNS, row_index))

    if not order:
        raise ValueError(f"{path}: no trace rows found")
    return [
        SessionTrace(
            user_id=key[0],
            video_id=key[1],
            actual=np.array(groups[key]["actual"]),
            predicted=np.array(groups[key]["pred"]) if has_pred else None,
        )
        for key in order
    ]


def write_traces(traces: list[SessionTrace], path) -> None:
    """Write session traces in the CSV schema accepted by ``load_traces``."""
    include_pred = any(t.predicted is not None for t in traces)
    if include_pred and not all(t.predicted is not None for t in traces):
        raise ValueError("either all traces carry predictions or none do")
    header = TRACE_HEADER + TRACE_PRED_COLUMNS if include_pred else TRACE_HEADER
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for trace in traces:
            for gop in range(trace.gops):
                row = [trace.user_id, trace.video_id, gop]
                row += [repr(float(v)) for v in trace.actual[gop]]
                if include_pred:
                    row += [repr(float(v)) for v in trace.predicted[gop]]
                writer.writerow(row)
