"""Post-hoc rollout analysis: transport cost, distances, tracking error.

All operations work on immutable RolloutLog objects and are deterministic,
so logs can be analyzed in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateMotionError, GaitlabError
from .gaits import ContactSchedule, GaitLabel, GaitThresholds, classify_gait
from .rewards import RewardConfig, rectified_power
from .rollout import RolloutLog

MIN_NET_DISTANCE = 1e-6

# Fraction of each episode discarded as a standing-start transient before
# computing steady-state metrics.
STEADY_STATE_DISCARD = 0.2


@dataclass
class CotPoint:
    command_speed: float
    achieved_speed: float
    cot: float
    tracking_error: float


@dataclass
class SweepRow:
    """One evaluated command of a velocity sweep; error is set when a
    metric could not be computed and the remaining fields are partial."""

    command_vx: float
    command_wz: float
    point: CotPoint | None = None
    gait: GaitLabel | None = None
    error: str | None = None


def _select(log: RolloutLog, window):
    if window is None:
        return log.samples
    t0, t1 = window
    return [s for s in log.samples if t0 <= s.t < t1]


def steady_state_window(log: RolloutLog, discard: float = STEADY_STATE_DISCARD):
    """Time window with the leading transient fraction dropped."""
    t0, t1 = log.time_window()
    return (t0 + discard * (t1 - t0), t1)


def cost_of_transport(log: RolloutLog, window=None) -> float:
    """Rectified energy per net planar distance over the window, J/m."""
    samples = _select(log, window)
    if not samples:
        raise DegenerateMotionError("no samples in window")
    dt = log.dt_control
    energy = sum(rectified_power(s) * dt for s in samples)
    dx = sum(s.vx for s in samples) * dt
    dy = sum(s.vy for s in samples) * dt
    dist = math.hypot(dx, dy)
    if dist < MIN_NET_DISTANCE:
        raise DegenerateMotionError(
            f"net distance {dist:.3e} m below {MIN_NET_DISTANCE} m"
        )
    return energy / dist


def generalized_distance(log: RolloutLog, c: RewardConfig, window=None) -> float:
    """Linear-equivalent distance including scaled rotation, in meters.

    Reduces to planar path length when wz is identically zero.
    """
    if c.sigma_en_x == 0:
        raise ConfigError("generalized distance requires sigma_en_x > 0")
    samples = _select(log, window)
    dt = log.dt_control
    total = sum(
        c.sigma_en_x * abs(s.vx) + c.sigma_en_z * abs(s.wz) for s in samples
    )
    return total * dt / c.sigma_en_x


def circle_tracking_error(positions, center, radius: float):
    """Per-step |distance-to-center - radius| and its sum over steps."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] == 0:
        raise ValueError(f"positions must be a nonempty (T, 2) array, got {pos.shape}")
    ctr = np.asarray(center, dtype=float)
    d = np.hypot(pos[:, 0] - ctr[0], pos[:, 1] - ctr[1])
    errors = np.abs(d - radius)
    return errors, float(np.sum(errors))


def contact_schedule_from_log(log: RolloutLog, window=None) -> ContactSchedule:
    samples = _select(log, window)
    if not samples:
        raise DegenerateMotionError("no samples in window")
    stance = np.stack([s.foot_contact for s in samples], axis=1)
    return ContactSchedule(stance=stance, dt=log.dt_control)


def analyze_log(
    log: RolloutLog,
    thresholds: GaitThresholds | None = None,
    discard: float = STEADY_STATE_DISCARD,
) -> SweepRow:
    """CoT point plus gait label for one log over its steady-state window."""
    cmd_vx = float(log.command.get("vx", 0.0))
    cmd_wz = float(log.command.get("wz", 0.0))
    row = SweepRow(command_vx=cmd_vx, command_wz=cmd_wz)
    window = steady_state_window(log, discard)
    samples = _select(log, window)
    if not samples:
        row.error = "empty steady-state window"
        return row

    achieved = float(np.mean([abs(s.vx) for s in samples]))
    tracking = float(np.mean([abs(s.vx - s.cmd_vx) for s in samples]))
    errors = []
    try:
        cot = cost_of_transport(log, window)
        row.point = CotPoint(cmd_vx, achieved, cot, tracking)
    except GaitlabError as exc:
        errors.append(f"cot: {exc}")
    try:
        row.gait = classify_gait(contact_schedule_from_log(log, window), thresholds)
    except GaitlabError as exc:
        errors.append(f"gait: {exc}")
    if errors:
        row.error = "; ".join(errors)
    return row


def velocity_sweep_report(
    logs, thresholds: GaitThresholds | None = None
) -> list[SweepRow]:
    """Analyze a sweep of logs, one row per log; per-log failures are
    recorded in the row instead of aborting the rest of the report."""
    return [analyze_log(log, thresholds) for log in logs]
