"""Feedforward policy and observation construction.

An observation frame is 28 channels in fixed order:

    [sin(pitch), cos(pitch), cmd_vx, cmd_wz, q(8), dq(8), prev_action(8)]

The full observation is the current frame followed by the last H frames,
most recent first, zero-padded before the episode start. The network is
obs -> 64 -> 64 -> 8 with tanh activations; outputs scale to joint-angle
offsets about the nominal standing pose. Input normalization is a fixed
affine transform owned by the policy, not part of the frame contract.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .rewards import StepSample
from .sim import RobotModel

FRAME_DIM = K.FRAME_DIM


def frame_from_values(pitch, cmd_vx, cmd_wz, q, dq, prev_action) -> np.ndarray:
    frame = np.empty(FRAME_DIM)
    K.fill_frame(
        frame,
        float(pitch),
        float(cmd_vx),
        float(cmd_wz),
        np.asarray(q, dtype=float),
        np.asarray(dq, dtype=float),
        np.asarray(prev_action, dtype=float),
    )
    return frame


def frame_from_sample(sample: StepSample, cmd) -> np.ndarray:
    """Observation frame for the NEXT action after this sample.

    cmd is the command pair the next action should track; prev_action is
    the sample's own action, i.e. the most recent one.
    """
    return frame_from_values(
        sample.trunk_pitch,
        cmd[0],
        cmd[1],
        sample.joint_positions,
        sample.joint_velocities,
        sample.action,
    )


def build_observation(frame: np.ndarray, history_frames, history_len: int) -> np.ndarray:
    """Concatenate the current frame with zero-padded history.

    history_frames holds previous frames most recent first; missing
    entries (early in an episode) pad with zeros.
    """
    obs = np.zeros(FRAME_DIM * (history_len + 1))
    obs[:FRAME_DIM] = frame
    for i in range(min(history_len, len(history_frames))):
        obs[FRAME_DIM * (i + 1) : FRAME_DIM * (i + 2)] = history_frames[i]
    return obs


class ObservationBuilder:
    """Keeps the rolling frame history for one episode."""

    def __init__(self, history_len: int):
        self.history_len = history_len
        self._frames = deque(maxlen=max(history_len, 1))

    @property
    def obs_dim(self) -> int:
        return FRAME_DIM * (self.history_len + 1)

    def observe(self, frame: np.ndarray) -> np.ndarray:
        """Assemble the observation for this frame, then retire it to history."""
        obs = build_observation(frame, self._frames, self.history_len)
        self._frames.appendleft(frame)
        return obs

    def reset(self):
        self._frames.clear()


@dataclass
class Policy:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    obs_shift: np.ndarray
    obs_scale: np.ndarray
    nominal_targets: np.ndarray
    action_scale: float
    history_len: int

    @classmethod
    def build(
        cls,
        model: RobotModel,
        history_len: int = 4,
        hidden: int = 64,
        action_scale: float = 0.6,
        init_scale: float = 0.0,
        seed: int = 0,
    ) -> "Policy":
        """Fresh policy; zero weights hold the nominal standing pose."""
        obs_dim = FRAME_DIM * (history_len + 1)
        nominal = model.nominal_pose
        frame_shift = np.zeros(FRAME_DIM)
        frame_shift[4:12] = nominal
        frame_shift[20:28] = nominal
        frame_scale = np.ones(FRAME_DIM)
        frame_scale[2:4] = 0.4  # commands, ~[-2.5, 2.5]
        frame_scale[4:12] = 1.0 / action_scale
        frame_scale[12:20] = 0.1
        frame_scale[20:28] = 1.0 / action_scale
        rng = np.random.default_rng(seed)

        def init(shape):
            if init_scale == 0.0:
                return np.zeros(shape)
            return init_scale * rng.standard_normal(shape)

        return cls(
            w1=init((hidden, obs_dim)),
            b1=init(hidden),
            w2=init((hidden, hidden)),
            b2=init(hidden),
            w3=init((8, hidden)),
            b3=init(8),
            obs_shift=np.tile(frame_shift, history_len + 1),
            obs_scale=np.tile(frame_scale, history_len + 1),
            nominal_targets=nominal,
            action_scale=action_scale,
            history_len=history_len,
        )

    @property
    def obs_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def num_params(self) -> int:
        return sum(a.size for a in self._arrays())

    def _arrays(self):
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)

    def to_flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self._arrays()])

    def from_flat(self, flat: np.ndarray) -> "Policy":
        """New policy with the same structure and the given parameters."""
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} params, got {flat.shape}")
        parts = []
        i = 0
        for a in self._arrays():
            parts.append(flat[i : i + a.size].reshape(a.shape).copy())
            i += a.size
        return Policy(
            *parts,
            obs_shift=self.obs_shift,
            obs_scale=self.obs_scale,
            nominal_targets=self.nominal_targets,
            action_scale=self.action_scale,
            history_len=self.history_len,
        )

    def act(self, obs: np.ndarray) -> np.ndarray:
        """Map a raw observation to absolute joint-position targets."""
        x = (obs - self.obs_shift) * self.obs_scale
        out = np.empty(8)
        K.mlp_forward(x, self.w1, self.b1, self.w2, self.b2, self.w3, self.b3, out)
        return self.nominal_targets + self.action_scale * out
