"""Gait structure from foot-contact schedules.

A gait is identified purely from the boolean stance matrix: stride
period from the front-left touchdown intervals, per-foot duty factors,
and per-foot touchdown phases relative to front-left. The classifier is
a fixed-order decision tree over those diagnostics; all thresholds are
stride fractions and configurable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import InsufficientDataError

FOOT_NAMES = ("FL", "FR", "RL", "RR")
FL, FR, RL, RR = 0, 1, 2, 3


@dataclass
class ContactSchedule:
    """Boolean stance matrix, shape (4, T), rows ordered FL, FR, RL, RR."""

    stance: np.ndarray
    dt: float

    def __post_init__(self):
        self.stance = np.asarray(self.stance, dtype=bool)
        if self.stance.ndim != 2 or self.stance.shape[0] != 4:
            raise ValueError(f"stance must be (4, T), got {self.stance.shape}")
        if self.stance.shape[1] < 1:
            raise ValueError("stance must have at least one column")
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def num_steps(self) -> int:
        return self.stance.shape[1]


class Gait(enum.Enum):
    WALK_4BEAT = "walk_4beat"
    WALK_2BEAT = "walk_2beat"
    TROT = "trot"
    FLY_TROT = "fly_trot"
    BOUNCE = "bounce"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class GaitThresholds:
    """Decision-tree thresholds, all in stride fractions except walk_duty."""

    sync: float = 0.1
    pair: float = 0.1
    flight: float = 0.02
    quad: float = 0.05
    four_beat: float = 0.1
    walk_duty: float = 0.6


@dataclass
class StrideSegmentation:
    """Touchdown events and per-foot phase structure of a schedule.

    phase_offsets are touchdown phases relative to FL in [0, 1), NaN for
    feet that never touch down; FL is the reference and is always 0.
    """

    touchdown_times: list
    stride_period: float
    phase_offsets: np.ndarray
    duty_factors: np.ndarray
    flight_fraction: float
    quad_support_fraction: float


@dataclass
class GaitLabel:
    gait: Gait
    duty_factors: np.ndarray = field(default_factory=lambda: np.full(4, np.nan))
    phase_offsets: np.ndarray = field(default_factory=lambda: np.full(4, np.nan))
    flight_fraction: float = float("nan")
    quad_support_fraction: float = float("nan")
    stride_period: float = float("nan")

    @classmethod
    def from_segmentation(cls, gait: Gait, seg: StrideSegmentation) -> "GaitLabel":
        return cls(
            gait=gait,
            duty_factors=seg.duty_factors,
            phase_offsets=seg.phase_offsets,
            flight_fraction=seg.flight_fraction,
            quad_support_fraction=seg.quad_support_fraction,
            stride_period=seg.stride_period,
        )


def _touchdown_indices(row: np.ndarray) -> np.ndarray:
    # A stance block already underway at column 0 is not a touchdown event.
    rising = np.flatnonzero(row[1:] & ~row[:-1]) + 1
    return rising


def _circular_mean(phases: np.ndarray) -> float:
    ang = 2.0 * math.pi * phases
    m = math.atan2(np.mean(np.sin(ang)), np.mean(np.cos(ang))) / (2.0 * math.pi)
    return m % 1.0


def circular_distance(a: float, b: float) -> float:
    """Distance between two stride phases, in [0, 0.5]."""
    d = abs(a - b) % 1.0
    return min(d, 1.0 - d)


def extract_strides(cs: ContactSchedule) -> StrideSegmentation:
    """Segment a schedule into strides using FL touchdowns as reference.

    Raises InsufficientDataError when fewer than two FL touchdowns exist,
    i.e. the schedule does not cover two complete stance cycles.
    """
    touchdowns = [_touchdown_indices(cs.stance[f]) * cs.dt for f in range(4)]
    fl = touchdowns[FL]
    if len(fl) < 2:
        raise InsufficientDataError(
            f"need at least 2 FL touchdowns to segment strides, got {len(fl)}"
        )
    period = float(np.median(np.diff(fl)))
    if period <= 0:
        raise InsufficientDataError("FL touchdowns do not advance in time")

    offsets = np.full(4, np.nan)
    for f in range(4):
        times = touchdowns[f]
        if len(times) == 0:
            continue
        # Phase of each touchdown relative to the preceding FL touchdown.
        ref_idx = np.searchsorted(fl, times, side="right") - 1
        refs = fl[np.clip(ref_idx, 0, len(fl) - 1)]
        phases = ((times - refs) / period) % 1.0
        offsets[f] = _circular_mean(phases)

    support_count = cs.stance.sum(axis=0)
    return StrideSegmentation(
        touchdown_times=touchdowns,
        stride_period=period,
        phase_offsets=offsets,
        duty_factors=cs.stance.mean(axis=1),
        flight_fraction=float(np.mean(support_count == 0)),
        quad_support_fraction=float(np.mean(support_count == 4)),
    )


def classify_gait(
    cs: ContactSchedule, thresholds: GaitThresholds | None = None
) -> GaitLabel:
    """Label the gait of a contact schedule.

    Decision order: synchronized feet -> bounce; diagonal pairs in phase
    -> fly trot / two-beat walk / trot by flight and quad-support
    fractions; four distinct touchdown phases with high duty -> four-beat
    walk; anything else -> unknown. Bounce is checked first, so the
    degenerate all-in-phase case resolves to bounce.
    """
    th = thresholds or GaitThresholds()
    seg = extract_strides(cs)
    offs = seg.phase_offsets
    if np.any(np.isnan(offs)):
        return GaitLabel.from_segmentation(Gait.UNKNOWN, seg)

    pair_dists = [circular_distance(offs[a], offs[b]) for a, b in combinations(range(4), 2)]
    if max(pair_dists) < th.sync:
        return GaitLabel.from_segmentation(Gait.BOUNCE, seg)

    diag_a = circular_distance(offs[FL], offs[RR])
    diag_b = circular_distance(offs[FR], offs[RL])
    cross = circular_distance(offs[FL], offs[FR])
    if diag_a < th.pair and diag_b < th.pair and abs(cross - 0.5) < th.pair:
        if seg.flight_fraction > th.flight:
            return GaitLabel.from_segmentation(Gait.FLY_TROT, seg)
        if seg.quad_support_fraction > th.quad:
            return GaitLabel.from_segmentation(Gait.WALK_2BEAT, seg)
        return GaitLabel.from_segmentation(Gait.TROT, seg)

    if min(pair_dists) > th.four_beat and np.mean(seg.duty_factors) > th.walk_duty:
        return GaitLabel.from_segmentation(Gait.WALK_4BEAT, seg)

    return GaitLabel.from_segmentation(Gait.UNKNOWN, seg)


def synthetic_schedule(
    duties,
    offsets,
    stride_period: float = 0.5,
    n_strides: int = 6,
    dt: float = 0.005,
    phase0: float = 0.0,
) -> ContactSchedule:
    """Square-wave schedule generator for fixtures and diagram demos.

    Foot f is in stance while ((t/period - offsets[f]) mod 1) < duties[f].
    """
    n = int(round(n_strides * stride_period / dt))
    t = np.arange(n) * dt
    stance = np.zeros((4, n), dtype=bool)
    for f in range(4):
        phase = (t / stride_period - offsets[f] + phase0) % 1.0
        stance[f] = phase < duties[f]
    return ContactSchedule(stance=stance, dt=dt)
