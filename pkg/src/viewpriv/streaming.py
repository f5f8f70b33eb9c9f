"""Tile-based proactive streaming simulator.

The sphere is sliced into a 4x8 equirectangular tile grid (rows are
latitude bands, columns wrap at the 360-degree seam). Each GoP, the server
streams a rectangular zone of tiles centered on the predicted-FoV center
tile; the zone shape grows with the uploaded prediction error. Within a
per-GoP bitrate budget, every zone tile is first streamed at the lowest
quality, then upgrades to the highest quality are spent on the pFoV center
tile, the rest of the pFoV, the rest of the zone, and finally on adding
tiles outside the zone, in that order. Ties within a tier are broken by
ring distance from the pFoV center, then row, then column.

The session score is a four-term weighted surrogate on a [1, 5] scale:
gaze-tile quality, mean FoV quality, temporal quality smoothness, and the
absence of stalls. A GoP stalls when its budget cannot cover the zone at
low quality or when any actual-FoV tile was not streamed; a transition
into or out of a stalled GoP counts as maximal quality variation. The
weights are artifact defaults, declared in ``SessionConfig``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .leakage import LeakageEstimate, check_precision, conditional_leakage
from .baselines import perturb_rows
from .policies import BpeaPolicy, GaussianViewpointNoise, LaplaceViewpointNoise, ObfuscationPolicy
from .sphere import check_angle
from .traces import DEFAULT_HORIZON, SessionTrace, persistence_predict, prediction_errors
from . import bpea

TILE_ROWS = 4
TILE_COLS = 8

# Ordered feasible zone shapes, smallest to whole-sphere.
ZONE_SHAPES = ((3, 3), (3, 5), (3, 7), (4, 7), (4, 8))

FOV_SHAPE = (3, 3)

DEFAULT_BUDGET_MBIT = 95.4
_BUDGET_SLACK = 1e-9

Tile = tuple[int, int]


class QualityLevel(enum.Enum):
    LOW = 1.8
    MID = 2.7
    HIGH = 6.0

    @property
    def mbps(self) -> float:
        return self.value

    @property
    def normalized(self) -> float:
        return self.value / QualityLevel.HIGH.value


@dataclass(frozen=True)
class SessionConfig:
    gop_seconds: float = 1.0
    predict_upload_seconds: float = 0.05
    error_upload_seconds: float = 0.05
    stream_seconds: float = 0.95
    budget_mbit: float = DEFAULT_BUDGET_MBIT
    qoe_weights: tuple[float, float, float, float] = (0.4, 0.3, 0.15, 0.15)

    def __post_init__(self):
        if self.gop_seconds <= 0.0 or self.budget_mbit < 0.0:
            raise ValueError("GoP duration must be positive and budget non-negative")
        if self.predict_upload_seconds + self.stream_seconds > self.gop_seconds + 1e-12:
            raise ValueError("prediction upload plus streaming must fit within one GoP")
        w = self.qoe_weights
        if len(w) != 4 or any(x < 0.0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("qoe_weights must be four non-negative values summing to 1")


def tile_of(point) -> Tile:
    """Tile containing a unit viewpoint vector."""
    v = np.asarray(point, dtype=float)
    polar = math.acos(min(1.0, max(-1.0, float(v[2]))))
    row = min(TILE_ROWS - 1, int(polar / math.pi * TILE_ROWS))
    azimuth = math.atan2(float(v[1]), float(v[0])) % (2.0 * math.pi)
    col = min(TILE_COLS - 1, int(azimuth / (2.0 * math.pi) * TILE_COLS))
    return row, col


def block_tiles(center: Tile, shape: tuple[int, int]) -> frozenset:
    """Tile block of the given shape centered on ``center``.

    Columns wrap around the seam; row ranges clamp at the top and bottom
    edges, so blocks near a pole can lose a row.
    """
    rows, cols = shape
    r, c = center
    if rows >= TILE_ROWS:
        row_range = range(TILE_ROWS)
    else:
        half = rows // 2
        row_range = range(max(0, r - half), min(TILE_ROWS, r + half + 1))
    if cols >= TILE_COLS:
        col_range = [(c + d) % TILE_COLS for d in range(TILE_COLS)]
    else:
        half = cols // 2
        col_range = [(c + d) % TILE_COLS for d in range(-half, half + 1)]
    return frozenset((rr, cc) for rr in row_range for cc in col_range)


@lru_cache(maxsize=TILE_ROWS * TILE_COLS)
def fov_tiles(center: Tile) -> frozenset:
    return block_tiles(center, FOV_SHAPE)


@dataclass(frozen=True)
class Zone:
    shape: tuple[int, int]
    center: Tile
    tiles: frozenset = field(repr=False)


def make_zone(center: Tile, shape: tuple[int, int]) -> Zone:
    if shape not in ZONE_SHAPES:
        raise ValueError(f"zone shape {shape} is outside the feasible set {ZONE_SHAPES}")
    return Zone(shape=shape, center=center, tiles=block_tiles(center, shape))


def zone_from_error(uploaded_error: float) -> tuple[int, int]:
    """Feasible zone shape for an uploaded error, linear with half-up rounding."""
    uploaded_error = check_angle(uploaded_error, 0.0, math.pi, "uploaded_error")
    index = int(math.floor((len(ZONE_SHAPES) - 1) * uploaded_error / math.pi + 0.5))
    return ZONE_SHAPES[min(index, len(ZONE_SHAPES) - 1)]


def _ring_key(center: Tile):
    cr, cc = center

    def key(tile: Tile):
        r, c = tile
        dc = abs(c - cc)
        dc = min(dc, TILE_COLS - dc)
        return (max(abs(r - cr), dc), r, c)

    return key


@dataclass(frozen=True)
class Allocation:
    quality: dict
    under_provisioned: bool
    spent_mbit: float


def allocate_quality(zone: Zone, pfov: frozenset, cfg: SessionConfig) -> Allocation:
    """Per-tile quality map for one GoP under the bitrate budget."""
    return _allocate(zone, pfov, cfg.budget_mbit, cfg.gop_seconds)


def _allocate(zone: Zone, pfov: frozenset, budget: float, t: float) -> Allocation:
    order = _ring_key(zone.center)
    quality: dict = {}
    spent = 0.0
    under = False

    low_cost = QualityLevel.LOW.mbps * t
    for tile in sorted(zone.tiles, key=order):
        if spent + low_cost <= budget + _BUDGET_SLACK:
            quality[tile] = QualityLevel.LOW
            spent += low_cost
        else:
            under = True
    if under:
        return Allocation(quality, True, spent)

    upgrade_cost = (QualityLevel.HIGH.mbps - QualityLevel.LOW.mbps) * t
    tiers = [
        [zone.center],
        sorted(pfov - {zone.center}, key=order),
        sorted(zone.tiles - pfov, key=order),
    ]
    for tier in tiers:
        for tile in tier:
            if spent + upgrade_cost <= budget + _BUDGET_SLACK:
                quality[tile] = QualityLevel.HIGH
                spent += upgrade_cost

    add_cost = QualityLevel.HIGH.mbps * t
    every = ((r, c) for r in range(TILE_ROWS) for c in range(TILE_COLS))
    for tile in sorted((x for x in every if x not in zone.tiles), key=order):
        if spent + add_cost <= budget + _BUDGET_SLACK:
            quality[tile] = QualityLevel.HIGH
            spent += add_cost
    return Allocation(quality, False, spent)


@lru_cache(maxsize=4096)
def _allocate_cached(center: Tile, shape: tuple[int, int], budget: float, gop_seconds: float) -> Allocation:
    return _allocate(make_zone(center, shape), fov_tiles(center), budget, gop_seconds)


@dataclass(frozen=True)
class GopRecord:
    fov_center: Tile
    fov_tiles: frozenset
    quality: dict
    under_provisioned: bool


@dataclass(frozen=True)
class QoEReport:
    qoe: float
    fov_coverage: float
    mean_fov_quality: float
    quality_variation: float
    stall_fraction: float


def _norm_quality(level) -> float:
    return level.normalized if level is not None else 0.0


def qoe_score(per_gop: list, cfg: SessionConfig) -> QoEReport:
    """Session score from per-GoP FoV tiles and streamed quality maps."""
    if not per_gop:
        raise ValueError("cannot score an empty session")
    central, fov_means, stalled = [], [], []
    covered_pairs = 0
    total_pairs = 0
    for rec in per_gop:
        central.append(_norm_quality(rec.quality.get(rec.fov_center)))
        values = [_norm_quality(rec.quality.get(tile)) for tile in rec.fov_tiles]
        fov_means.append(sum(values) / len(values))
        covered = sum(1 for tile in rec.fov_tiles if tile in rec.quality)
        covered_pairs += covered
        total_pairs += len(rec.fov_tiles)
        stalled.append(rec.under_provisioned or covered < len(rec.fov_tiles))

    transitions = [
        1.0 if (stalled[i] or stalled[i + 1]) else min(1.0, abs(fov_means[i + 1] - fov_means[i]))
        for i in range(len(per_gop) - 1)
    ]
    variation = sum(transitions) / len(transitions) if transitions else 0.0
    stall_fraction = sum(stalled) / len(stalled)
    mean_central = sum(central) / len(central)
    mean_fov = sum(fov_means) / len(fov_means)

    w1, w2, w3, w4 = cfg.qoe_weights
    qoe = 1.0 + 4.0 * (
        w1 * mean_central + w2 * mean_fov + w3 * (1.0 - variation) + w4 * (1.0 - stall_fraction)
    )
    return QoEReport(
        qoe=qoe,
        fov_coverage=covered_pairs / total_pairs,
        mean_fov_quality=mean_fov,
        quality_variation=variation,
        stall_fraction=stall_fraction,
    )


@dataclass(frozen=True)
class PolicyApplication:
    """Per-GoP upload pipeline outputs for one session under one policy."""

    predicted: np.ndarray = field(repr=False)
    errors: np.ndarray = field(repr=False)
    noises: np.ndarray = field(repr=False)
    uploaded: np.ndarray = field(repr=False)
    per_gop_leakage: np.ndarray = field(repr=False)

    @property
    def mean_error_rad(self) -> float:
        return float(np.mean(self.errors))

    @property
    def mean_abs_noise_rad(self) -> float:
        return float(np.mean(np.abs(self.noises)))


def apply_policy(
    trace: SessionTrace,
    policy: ObfuscationPolicy,
    eps: float,
    rng: np.random.Generator,
    horizon: int = DEFAULT_HORIZON,
) -> PolicyApplication:
    """Run the upload pipeline for one session under a policy.

    Baseline policies perturb the viewpoint history the predictor sees and
    upload the measured (effective) error unchanged; the noisy-error policy
    predicts from clean history and perturbs only the uploaded error.
    Per-GoP leakage is the conditional leakage at the attacker-observed
    upload.
    """
    eps = check_precision(eps)
    actual = trace.actual

    if isinstance(policy, (GaussianViewpointNoise, LaplaceViewpointNoise)):
        scale = policy.scale()
        predicted = persistence_predict(
            perturb_rows(actual, scale.kind, scale.value, rng), horizon
        )
    elif trace.predicted is not None:
        predicted = trace.predicted
    else:
        predicted = persistence_predict(actual, horizon)

    errors = prediction_errors(predicted, actual)
    if isinstance(policy, BpeaPolicy):
        noises = bpea.optimal_noise_batch(errors, eps, policy.q, policy.margin)
        uploaded = np.clip(errors + noises, 0.0, math.pi)
        leaks = bpea.conditional_leakage_noisy(errors, noises, eps)
    else:
        noises = np.zeros_like(errors)
        uploaded = errors
        leaks = conditional_leakage(errors, eps)
    return PolicyApplication(predicted, errors, noises, uploaded, np.asarray(leaks))


@dataclass(frozen=True)
class SessionOutcome:
    qoe: QoEReport
    leakage: LeakageEstimate
    mean_error_rad: float
    mean_abs_noise_rad: float
    per_gop_leakage: np.ndarray = field(repr=False)
    uploaded_errors: np.ndarray = field(repr=False)


def simulate_session(
    trace: SessionTrace,
    policy: ObfuscationPolicy,
    cfg: SessionConfig,
    eps: float,
    rng: np.random.Generator,
    horizon: int = DEFAULT_HORIZON,
) -> SessionOutcome:
    """Stream one session under a policy; score QoE and leakage.

    The leakage estimate is the sample mean of per-GoP conditional leakage
    at the attacker-observed uploads (see ``apply_policy``).
    """
    app = apply_policy(trace, policy, eps, rng, horizon)

    records = []
    for gop in range(trace.gops):
        shape = zone_from_error(float(app.uploaded[gop]))
        pcenter = tile_of(app.predicted[gop])
        acenter = tile_of(trace.actual[gop])
        allocation = _allocate_cached(pcenter, shape, cfg.budget_mbit, cfg.gop_seconds)
        records.append(
            GopRecord(acenter, fov_tiles(acenter), allocation.quality, allocation.under_provisioned)
        )

    report = qoe_score(records, cfg)
    estimate = LeakageEstimate(
        float(np.mean(app.per_gop_leakage)), "sample_mean", trials=trace.gops
    )
    return SessionOutcome(
        qoe=report,
        leakage=estimate,
        mean_error_rad=app.mean_error_rad,
        mean_abs_noise_rad=app.mean_abs_noise_rad,
        per_gop_leakage=app.per_gop_leakage,
        uploaded_errors=app.uploaded,
    )
