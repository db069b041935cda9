"""Command-velocity curriculum: ranges expand on reward, never shrink."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Curriculum:
    """Symmetric sampling ranges [-lin, lin] m/s and [-ang, ang] rad/s."""

    lin_range: float = 1.0
    ang_range: float = 0.0
    lin_max: float = 2.5
    ang_max: float = 0.0
    step: float = 0.25
    reward_threshold: float = 30.0

    def __post_init__(self):
        if not 0 <= self.lin_range <= self.lin_max:
            raise ConfigError("curriculum: need 0 <= lin_range <= lin_max")
        if not 0 <= self.ang_range <= self.ang_max:
            raise ConfigError("curriculum: need 0 <= ang_range <= ang_max")
        if self.step < 0:
            raise ConfigError("curriculum: step must be >= 0")


def sample_commands(cur: Curriculum, rng: np.random.Generator) -> tuple[float, float]:
    """Uniform command draw; a zero-width range yields exactly 0.0."""
    cmd_vx = float(rng.uniform(-cur.lin_range, cur.lin_range)) if cur.lin_range > 0 else 0.0
    cmd_wz = float(rng.uniform(-cur.ang_range, cur.ang_range)) if cur.ang_range > 0 else 0.0
    return cmd_vx, cmd_wz


def update_curriculum(cur: Curriculum, mean_episode_reward: float) -> Curriculum:
    """Expand active ranges by one step when the reward clears the threshold."""
    if mean_episode_reward < cur.reward_threshold:
        return cur
    return replace(
        cur,
        lin_range=min(cur.lin_range + cur.step, cur.lin_max),
        ang_range=min(cur.ang_range + cur.step, cur.ang_max),
    )
