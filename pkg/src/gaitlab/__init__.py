"""Planar quadruped locomotion lab.

Energy-regularized velocity-tracking rewards, a self-contained planar
rigid-body simulator, an episodic evolution-strategy trainer with a
command curriculum and domain randomization, and post-hoc gait/energy
analysis of rollout logs.
"""

from .config import ExperimentConfig, TrainConfig, load_config
from .curriculum import Curriculum, sample_commands, update_curriculum
from .gaits import ContactSchedule, Gait, GaitLabel, GaitThresholds, classify_gait
from .metrics import (
    CotPoint,
    circle_tracking_error,
    cost_of_transport,
    generalized_distance,
    velocity_sweep_report,
)
from .policy import ObservationBuilder, Policy, build_observation
from .rewards import (
    RewardBreakdown,
    RewardConfig,
    StepSample,
    aux_reward,
    energy_reward,
    motion_reward,
    rectified_power,
    total_reward,
)
from .rollout import RolloutLog, read_log, write_log
from .sim import DomainRandomization, PlanarQuadruped, RobotModel, SimState
from .training import evaluate, evolve, train

__version__ = "0.1.0"
