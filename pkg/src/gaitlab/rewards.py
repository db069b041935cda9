"""Energy-regularized locomotion reward terms.

Per control step the total reward is

    r_total = (r_lin + alpha_ang * r_ang + alpha_en * r_en) * exp(-r_aux_raw)

where the tracking terms are negative-exponential kernels on squared
velocity error, and the energy term divides rectified joint power by a
generalized distance rate so that the same mechanical efficiency scores
the same at any speed:

    r_en = exp(-P / max(sigma_en_x*|vx| + sigma_en_z*|wz|, denom_epsilon))
    P    = sum_i |tau_i| * |qd_i|        (motors dissipate, never recharge)

All operations are pure functions of their arguments and are safe to call
from any number of rollout workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InputShapeError

AUX_TERMS = ("collision", "action_rate", "orientation")

DEFAULT_AUX_WEIGHTS = {"collision": 1.0, "action_rate": 0.01, "orientation": 1.0}


@dataclass(frozen=True)
class RewardConfig:
    """Constants of the reward composition.

    aux_weights maps the three auxiliary term names (collision,
    action_rate, orientation) to nonnegative weights.
    """

    sigma_v: float = 0.25
    sigma_w: float = 0.25
    alpha_ang: float = 0.5
    sigma_en_x: float = 1000.0
    sigma_en_z: float = 500.0
    alpha_en: float = 1.0
    aux_weights: dict = field(default_factory=lambda: dict(DEFAULT_AUX_WEIGHTS))
    denom_epsilon: float = 1.0

    def __post_init__(self):
        if not (self.sigma_v > 0 and self.sigma_w > 0):
            raise ConfigError("sigma_v and sigma_w must be positive")
        if self.sigma_en_x < 0 or self.sigma_en_z < 0:
            raise ConfigError("energy scales must be nonnegative")
        if self.sigma_en_x == 0 and self.sigma_en_z == 0:
            raise ConfigError("sigma_en_x and sigma_en_z cannot both be zero")
        if self.alpha_en < 0 or self.alpha_ang < 0:
            raise ConfigError("alpha_en and alpha_ang must be nonnegative")
        if not self.denom_epsilon > 0:
            raise ConfigError("denom_epsilon must be positive")
        unknown = set(self.aux_weights) - set(AUX_TERMS)
        if unknown:
            raise ConfigError(f"unknown aux_weights keys: {sorted(unknown)}")
        if any(w < 0 for w in self.aux_weights.values()):
            raise ConfigError("aux_weights must be nonnegative")

    def aux_weight(self, name: str) -> float:
        return float(self.aux_weights.get(name, 0.0))


@dataclass
class StepSample:
    """One control-step snapshot of commands, dynamics and contacts.

    Torque/velocity vectors are 8-long for the planar simulator and may
    be 12-long when ingesting external quadruped logs; the two must
    always have equal length. foot_contact order is (FL, FR, RL, RR).
    """

    t: float
    cmd_vx: float
    cmd_vy: float
    cmd_wz: float
    vx: float
    vy: float
    wz: float
    joint_torques: np.ndarray
    joint_velocities: np.ndarray
    joint_positions: np.ndarray
    prev_action: np.ndarray
    action: np.ndarray
    foot_contact: np.ndarray
    trunk_pitch: float
    trunk_height: float
    collision_flag: bool

    def __post_init__(self):
        self.joint_torques = np.asarray(self.joint_torques, dtype=float)
        self.joint_velocities = np.asarray(self.joint_velocities, dtype=float)
        self.joint_positions = np.asarray(self.joint_positions, dtype=float)
        self.prev_action = np.asarray(self.prev_action, dtype=float)
        self.action = np.asarray(self.action, dtype=float)
        self.foot_contact = np.asarray(self.foot_contact, dtype=bool)
        if self.foot_contact.shape != (4,):
            raise InputShapeError(
                f"foot_contact must have exactly 4 entries, got {self.foot_contact.shape}"
            )
        if self.joint_torques.shape != self.joint_velocities.shape:
            raise InputShapeError(
                "joint_torques and joint_velocities must have equal length: "
                f"{self.joint_torques.shape} vs {self.joint_velocities.shape}"
            )


@dataclass(frozen=True)
class RewardBreakdown:
    r_lin: float
    r_ang: float
    r_motion: float
    r_en: float
    r_aux_raw: float
    r_total: float


def motion_reward(s: StepSample, c: RewardConfig) -> tuple[float, float, float]:
    """Velocity-tracking rewards (r_lin, r_ang, r_motion), each kernel in (0,1]."""
    lin_err = (s.vx - s.cmd_vx) ** 2 + (s.vy - s.cmd_vy) ** 2
    ang_err = (s.wz - s.cmd_wz) ** 2
    r_lin = math.exp(-lin_err / c.sigma_v)
    r_ang = math.exp(-ang_err / c.sigma_w)
    return r_lin, r_ang, r_lin + c.alpha_ang * r_ang


def rectified_power(s: StepSample) -> float:
    """Total joint power with both factors rectified, sum_i |tau_i|*|qd_i| in W."""
    if s.joint_torques.shape != s.joint_velocities.shape:
        raise InputShapeError(
            "joint_torques and joint_velocities must have equal length"
        )
    return float(np.sum(np.abs(s.joint_torques) * np.abs(s.joint_velocities)))


def energy_reward(s: StepSample, c: RewardConfig) -> float:
    """Distance-rate-averaged energy reward in (0,1].

    The denominator is floored at denom_epsilon so a robot burning power
    while stationary is maximally penalized but the reward stays finite.
    """
    p = rectified_power(s)
    denom = max(c.sigma_en_x * abs(s.vx) + c.sigma_en_z * abs(s.wz), c.denom_epsilon)
    return math.exp(-p / denom)


def aux_reward(s: StepSample, c: RewardConfig) -> float:
    """Nonnegative auxiliary penalty: collision, action rate, trunk orientation."""
    rate = float(np.sum((s.action - s.prev_action) ** 2))
    return (
        c.aux_weight("collision") * (1.0 if s.collision_flag else 0.0)
        + c.aux_weight("action_rate") * rate
        + c.aux_weight("orientation") * s.trunk_pitch**2
    )


def total_reward(s: StepSample, c: RewardConfig) -> RewardBreakdown:
    """Full reward composition for one step."""
    r_lin, r_ang, r_motion = motion_reward(s, c)
    r_en = energy_reward(s, c)
    r_aux = aux_reward(s, c)
    r_total = (r_motion + c.alpha_en * r_en) * math.exp(-r_aux)
    return RewardBreakdown(r_lin, r_ang, r_motion, r_en, r_aux, r_total)


def breakdown_arrays(
    c: RewardConfig,
    cmd_vx,
    cmd_vy,
    cmd_wz,
    vx,
    vy,
    wz,
    torques,
    velocities,
    action,
    prev_action,
    trunk_pitch,
    collision,
):
    """Vectorized total_reward over T steps.

    torques/velocities/action/prev_action are (T, n) arrays, the rest
    (T,) arrays. Returns dict of (T,) arrays with the breakdown fields.
    Numerically identical to calling total_reward per step.
    """
    lin_err = (vx - cmd_vx) ** 2 + (vy - cmd_vy) ** 2
    r_lin = np.exp(-lin_err / c.sigma_v)
    r_ang = np.exp(-((wz - cmd_wz) ** 2) / c.sigma_w)
    r_motion = r_lin + c.alpha_ang * r_ang
    p = np.sum(np.abs(torques) * np.abs(velocities), axis=1)
    denom = np.maximum(
        c.sigma_en_x * np.abs(vx) + c.sigma_en_z * np.abs(wz), c.denom_epsilon
    )
    r_en = np.exp(-p / denom)
    r_aux = (
        c.aux_weight("collision") * collision.astype(float)
        + c.aux_weight("action_rate") * np.sum((action - prev_action) ** 2, axis=1)
        + c.aux_weight("orientation") * trunk_pitch**2
    )
    r_total = (r_motion + c.alpha_en * r_en) * np.exp(-r_aux)
    return {
        "r_lin": r_lin,
        "r_ang": r_ang,
        "r_motion": r_motion,
        "r_en": r_en,
        "r_aux_raw": r_aux,
        "r_total": r_total,
    }


def score_samples(samples, c: RewardConfig) -> list[RewardBreakdown]:
    """Reward breakdown per sample; offline re-scoring of a stored rollout."""
    return [total_reward(s, c) for s in samples]
