"""Planar (sagittal) quadruped simulator.

Four independently actuated two-link legs hang from a rigid trunk with
(x, z, pitch) freedom. Ground contact is a spring-damper normal force
(never pulling) with velocity-regularized Coulomb friction, so the
friction cone |Ft| <= mu*N holds at every substep by construction.
Physics runs at dt_physics; control_step advances n_substeps of physics
per action.

The trunk does not feel leg-swing reaction forces, only gravity and
ground forces. In exchange the trunk is exactly ballistic in free flight
and horizontal momentum is exactly conserved without contact, which the
test oracles rely on.

v_y and w_z are identically zero in this planar model; the reward and
analysis layers still handle them for ingested 3D logs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels as K
from .errors import ConfigError, SimulationDivergedError
from .rewards import StepSample

# A foot counts as in stance above this normal force; the analysis layer
# takes the resulting booleans as given.
CONTACT_FORCE_THRESHOLD = 1.0  # N

NOISE_DIM = K.NOISE_DIM


@dataclass(frozen=True)
class RobotModel:
    """Geometry, inertia, actuation and contact parameters.

    Engineering defaults, order-of-magnitude Go1-like; every field is
    configurable from the experiment config.
    """

    trunk_mass: float = 10.0
    trunk_inertia: float = 0.15
    trunk_length: float = 0.4
    hip_x_front: float = 0.19
    hip_x_rear: float = -0.19
    thigh_mass: float = 0.5
    thigh_length: float = 0.21
    thigh_com: float = 0.105
    thigh_inertia: float = 0.0018
    shank_mass: float = 0.5
    shank_length: float = 0.21
    shank_com: float = 0.105
    shank_inertia: float = 0.0018
    torque_limit: float = 30.0
    velocity_limit: float = 25.0
    hip_range: tuple = (-0.8, 1.6)
    knee_range: tuple = (-2.2, -0.1)
    kp: float = 100.0
    kd: float = 2.5
    foot_radius: float = 0.02
    contact_stiffness: float = 2.0e4
    contact_damping: float = 200.0
    friction_vreg: float = 0.01
    nominal_hip: float = 0.4
    nominal_knee: float = -0.8
    min_trunk_height: float = 0.15
    gravity: float = 9.81
    dt_physics: float = 0.001
    n_substeps: int = 20

    def __post_init__(self):
        for name in (
            "trunk_mass",
            "trunk_inertia",
            "trunk_length",
            "thigh_mass",
            "thigh_length",
            "thigh_inertia",
            "shank_mass",
            "shank_length",
            "shank_inertia",
            "torque_limit",
            "velocity_limit",
            "kp",
            "foot_radius",
            "contact_stiffness",
            "gravity",
            "dt_physics",
        ):
            if not getattr(self, name) > 0:
                raise ConfigError(f"robot.{name} must be strictly positive")
        if self.n_substeps < 1:
            raise ConfigError("robot.n_substeps must be >= 1")
        for name in ("hip_range", "knee_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ConfigError(f"robot.{name} must be a nonempty (lo, hi) range")
        if not self.hip_range[0] <= self.nominal_hip <= self.hip_range[1]:
            raise ConfigError("robot.nominal_hip outside hip_range")
        if not self.knee_range[0] <= self.nominal_knee <= self.knee_range[1]:
            raise ConfigError("robot.nominal_knee outside knee_range")

    @property
    def dt_control(self) -> float:
        return self.dt_physics * self.n_substeps

    @property
    def total_mass(self) -> float:
        return self.trunk_mass + 4.0 * (self.thigh_mass + self.shank_mass)

    @property
    def nominal_pose(self) -> np.ndarray:
        return np.tile([self.nominal_hip, self.nominal_knee], 4).astype(float)

    @property
    def stand_height(self) -> float:
        """Trunk height with nominal joint angles and feet on the ground."""
        a1 = self.nominal_hip
        a2 = self.nominal_hip + self.nominal_knee
        return (
            self.foot_radius
            + self.thigh_length * np.cos(a1)
            + self.shank_length * np.cos(a2)
        )


@dataclass(frozen=True)
class DomainRandomization:
    """Per-episode friction/mass resampling and per-step observation noise.

    friction and added trunk mass are drawn once at every episode reset;
    the uniform observation noise is redrawn after every control step.
    """

    friction_range: tuple = (0.05, 1.5)
    added_mass_range: tuple = (-0.1, 3.0)
    noise_joint_pos: float = 0.01
    noise_joint_vel: float = 0.2
    noise_pitch: float = 0.01
    noise_base_vel: float = 0.05

    def __post_init__(self):
        for name in ("friction_range", "added_mass_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ConfigError(f"domain_randomization.{name}: lower > upper")
        if self.friction_range[0] <= 0:
            raise ConfigError("friction must stay positive")
        for name in ("noise_joint_pos", "noise_joint_vel", "noise_pitch", "noise_base_vel"):
            if getattr(self, name) < 0:
                raise ConfigError(f"domain_randomization.{name} must be >= 0")

    @classmethod
    def nominal(cls, friction: float = 0.8) -> "DomainRandomization":
        """Deterministic evaluation environment: fixed friction, no noise."""
        return cls(
            friction_range=(friction, friction),
            added_mass_range=(0.0, 0.0),
            noise_joint_pos=0.0,
            noise_joint_vel=0.0,
            noise_pitch=0.0,
            noise_base_vel=0.0,
        )

    def noise_amplitudes(self) -> np.ndarray:
        amp = np.zeros(NOISE_DIM)
        amp[0:8] = self.noise_joint_pos
        amp[8:16] = self.noise_joint_vel
        amp[16] = self.noise_pitch
        amp[17] = self.noise_base_vel
        return amp


@dataclass
class SimState:
    """Trunk pose/twist, joint state, contact forces, energy and time.

    Thin wrapper over the flat kernel state vector; the properties are
    read-only views.
    """

    vec: np.ndarray

    @property
    def x(self):
        return float(self.vec[K.X])

    @property
    def z(self):
        return float(self.vec[K.Z])

    @property
    def pitch(self):
        return float(self.vec[K.TH])

    @property
    def vx(self):
        return float(self.vec[K.VX])

    @property
    def vz(self):
        return float(self.vec[K.VZ])

    @property
    def pitch_rate(self):
        return float(self.vec[K.OM])

    @property
    def joint_angles(self):
        return self.vec[K.Q0 : K.Q0 + 8].copy()

    @property
    def joint_velocities(self):
        return self.vec[K.DQ0 : K.DQ0 + 8].copy()

    @property
    def normal_forces(self):
        return self.vec[K.FN0 : K.FN0 + 4].copy()

    @property
    def tangential_forces(self):
        return self.vec[K.FT0 : K.FT0 + 4].copy()

    @property
    def energy(self):
        return float(self.vec[K.EN])

    @property
    def time(self):
        return float(self.vec[K.TIME])

    @property
    def max_cone_violation(self):
        return float(self.vec[K.CONE])

    @property
    def foot_contact(self):
        return self.normal_forces > CONTACT_FORCE_THRESHOLD

    def copy(self) -> "SimState":
        return SimState(self.vec.copy())


@dataclass(frozen=True)
class EpisodeParams:
    """Frozen per-episode environment: resolved physics + command."""

    friction: float
    added_mass: float
    command: tuple
    params: np.ndarray
    noise_amp: np.ndarray
    episode_length: int = 1000


class PlanarQuadruped:
    """Owns a RobotModel and builds states, parameter vectors and steps.

    Instances hold no mutable episode state; run one per rollout worker.
    """

    def __init__(self, model: RobotModel | None = None):
        self.model = model or RobotModel()

    def pack_params(self, friction: float, added_mass: float = 0.0) -> np.ndarray:
        m = self.model
        p = np.zeros(K.PARAM_DIM)
        p[K.P_TRUNK_I] = m.trunk_inertia
        p[K.P_HIPF] = m.hip_x_front
        p[K.P_HIPR] = m.hip_x_rear
        p[K.P_M1] = m.thigh_mass
        p[K.P_L1] = m.thigh_length
        p[K.P_LC1] = m.thigh_com
        p[K.P_I1] = m.thigh_inertia
        p[K.P_M2] = m.shank_mass
        p[K.P_L2] = m.shank_length
        p[K.P_LC2] = m.shank_com
        p[K.P_I2] = m.shank_inertia
        p[K.P_TAU_MAX] = m.torque_limit
        p[K.P_DQ_MAX] = m.velocity_limit
        p[K.P_HIP_LO], p[K.P_HIP_HI] = m.hip_range
        p[K.P_KNEE_LO], p[K.P_KNEE_HI] = m.knee_range
        p[K.P_KP] = m.kp
        p[K.P_KD] = m.kd
        p[K.P_FOOT_R] = m.foot_radius
        p[K.P_KC] = m.contact_stiffness
        p[K.P_CC] = m.contact_damping
        p[K.P_MU] = friction
        p[K.P_VREG] = m.friction_vreg
        p[K.P_G] = m.gravity
        p[K.P_MTOT] = m.total_mass + added_mass
        p[K.P_DT] = m.dt_physics
        p[K.P_MIN_TRUNK_Z] = m.min_trunk_height
        return p

    def initial_state(self, height: float | None = None) -> SimState:
        """Standing at the nominal pose, feet just touching the ground."""
        vec = np.zeros(K.STATE_DIM)
        vec[K.Z] = self.model.stand_height if height is None else height
        vec[K.Q0 : K.Q0 + 8] = self.model.nominal_pose
        return SimState(vec)

    def step(
        self, state: SimState, joint_position_targets, params: np.ndarray
    ) -> SimState:
        """One physics substep. Raises SimulationDivergedError on blow-up."""
        targets = np.asarray(joint_position_targets, dtype=float)
        if targets.shape != (8,) or not np.all(np.isfinite(targets)):
            raise ConfigError("joint_position_targets must be a finite 8-vector")
        new = state.copy()
        K.substep(new.vec, params, targets)
        if not np.all(np.isfinite(new.vec)):
            raise SimulationDivergedError(
                f"non-finite state at t={state.time:.4f}s"
            )
        return new

    def control_step(
        self,
        state: SimState,
        action,
        ep: EpisodeParams,
        rng: np.random.Generator,
        prev_action=None,
        cmd: tuple | None = None,
    ) -> tuple[SimState, StepSample]:
        """Advance one control period and assemble the (noisy) step sample.

        action is an 8-vector of absolute joint-position targets. The
        sample snapshots the end-of-step state: recorded torques are the
        PD command at the sampled joint state, stance flags come from the
        final-substep normal force, and the observation-feeding fields
        (joint state, pitch, vx) carry the per-step uniform noise.
        Deterministic given (state, action, ep, rng state).
        """
        targets = np.asarray(action, dtype=float)
        if targets.shape != (8,):
            raise ConfigError("action must be an 8-vector of joint targets")
        m = self.model
        new = state.copy()
        t_start = new.vec[K.TIME]
        ok = K.tick(new.vec, ep.params, targets, m.n_substeps)
        if not ok:
            raise SimulationDivergedError(f"non-finite state at t={t_start:.4f}s")

        eta = rng.uniform(-1.0, 1.0, NOISE_DIM)
        q_n = new.vec[K.Q0 : K.Q0 + 8] + ep.noise_amp[0:8] * eta[0:8]
        dq_n = new.vec[K.DQ0 : K.DQ0 + 8] + ep.noise_amp[8:16] * eta[8:16]
        pitch_n = new.vec[K.TH] + ep.noise_amp[16] * eta[16]
        vx_n = new.vec[K.VX] + ep.noise_amp[17] * eta[17]
        tau = np.clip(
            m.kp * (targets - new.vec[K.Q0 : K.Q0 + 8])
            - m.kd * new.vec[K.DQ0 : K.DQ0 + 8],
            -m.torque_limit,
            m.torque_limit,
        )
        cmd_vx, cmd_wz = cmd if cmd is not None else ep.command
        if prev_action is None:
            prev_action = m.nominal_pose
        sample = StepSample(
            t=float(t_start),
            cmd_vx=float(cmd_vx),
            cmd_vy=0.0,
            cmd_wz=float(cmd_wz),
            vx=float(vx_n),
            vy=0.0,
            wz=0.0,
            joint_torques=tau,
            joint_velocities=dq_n,
            joint_positions=q_n,
            prev_action=np.asarray(prev_action, dtype=float).copy(),
            action=targets.copy(),
            foot_contact=new.vec[K.FN0 : K.FN0 + 4] > CONTACT_FORCE_THRESHOLD,
            trunk_pitch=float(pitch_n),
            trunk_height=float(new.vec[K.Z]),
            collision_flag=bool(K.collided(new.vec, ep.params)),
        )
        return new, sample

    def reset_episode(
        self,
        dr: DomainRandomization,
        rng: np.random.Generator,
        command_sampler=None,
        episode_length: int = 1000,
    ) -> tuple[SimState, EpisodeParams]:
        """New episode: standing start, resampled friction/mass, fresh command.

        Draw order is fixed (friction, added mass, then commands) so
        episodes are reproducible from the rng seed alone.
        """
        friction = float(rng.uniform(*dr.friction_range))
        added = float(rng.uniform(*dr.added_mass_range))
        if command_sampler is not None:
            command = tuple(command_sampler(rng))
        else:
            command = (0.0, 0.0)
        ep = EpisodeParams(
            friction=friction,
            added_mass=added,
            command=command,
            params=self.pack_params(friction, added),
            noise_amp=dr.noise_amplitudes(),
            episode_length=episode_length,
        )
        return self.initial_state(), ep


def warmup_kernels():
    """Trigger numba compilation once (cached on disk afterwards)."""
    sim = PlanarQuadruped()
    state, ep = sim.reset_episode(
        DomainRandomization.nominal(), np.random.default_rng(0)
    )
    sim.step(state, sim.model.nominal_pose, ep.params)
    K.collided(state.vec, ep.params)
