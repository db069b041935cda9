"""Experiment configuration: one strict JSON document, nested blocks.

Unknown keys are rejected with the offending path so misspelled options
never silently fall back to defaults. Missing keys take the dataclass
defaults. The config hash (sha256 of the canonical JSON) is embedded in
every artifact a run produces.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .rewards import RewardConfig
from .sim import DomainRandomization, RobotModel


@dataclass(frozen=True)
class CurriculumConfig:
    lin_start: float = 1.0
    lin_max: float = 2.5
    ang_start: float = 0.0
    ang_max: float = 0.0
    step: float = 0.25
    # Threshold for expanding the command range, as a fraction of the
    # maximum achievable episode return (1 + alpha_ang + alpha_en) * T * dt.
    threshold_fraction: float = 0.6

    def __post_init__(self):
        if not 0 <= self.lin_start <= self.lin_max:
            raise ConfigError("need 0 <= lin_start <= lin_max")
        if not 0 <= self.ang_start <= self.ang_max:
            raise ConfigError("need 0 <= ang_start <= ang_max")
        if self.step < 0 or self.threshold_fraction < 0:
            raise ConfigError("step and threshold_fraction must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    population: int = 24  # total candidates per iteration; antithetic, so even
    sigma: float = 0.08
    lr: float = 0.2
    iterations: int = 300
    episodes_per_eval: int = 1
    episode_length: int = 1000
    history_len: int = 4
    hidden: int = 64
    action_scale: float = 0.6
    sigma_decay: float = 1.0
    lr_decay: float = 1.0
    eval_commands: tuple = (0.5, 1.0, 1.5)
    jobs: int = 1

    def __post_init__(self):
        if self.population < 2 or self.population % 2 != 0:
            raise ConfigError("population must be an even number >= 2")
        for name in ("sigma", "lr", "iterations", "episodes_per_eval", "episode_length"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.history_len < 0:
            raise ConfigError("history_len must be >= 0")
        if not (0 < self.sigma_decay <= 1.0 and 0 < self.lr_decay <= 1.0):
            raise ConfigError("decay factors must be in (0, 1]")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    output_dir: str = "runs/default"
    reward: RewardConfig = field(default_factory=RewardConfig)
    robot: RobotModel = field(default_factory=RobotModel)
    domain_randomization: DomainRandomization = field(default_factory=DomainRandomization)
    train: TrainConfig = field(default_factory=TrainConfig)
    curriculum: CurriculumConfig = field(default_factory=CurriculumConfig)


_TUPLE_FIELDS = {
    "hip_range",
    "knee_range",
    "friction_range",
    "added_mass_range",
    "eval_commands",
}

_BLOCKS = {
    "reward": RewardConfig,
    "robot": RobotModel,
    "domain_randomization": DomainRandomization,
    "train": TrainConfig,
    "curriculum": CurriculumConfig,
}


def _build_block(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}: unknown key {unknown[0]!r}")
    kwargs = {}
    for key, value in data.items():
        if key in _TUPLE_FIELDS and isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {"seed", "output_dir"} | set(_BLOCKS)
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"config: unknown key {unknown[0]!r}")
    kwargs = {}
    if "seed" in data:
        if not isinstance(data["seed"], int):
            raise ConfigError("config: seed must be an integer")
        kwargs["seed"] = data["seed"]
    if "output_dir" in data:
        kwargs["output_dir"] = str(data["output_dir"])
    for name, cls in _BLOCKS.items():
        if name in data:
            kwargs[name] = _build_block(cls, data[name], name)
    return ExperimentConfig(**kwargs)


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return config_from_dict(data)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    d = dataclasses.asdict(cfg)

    def detuple(obj):
        if isinstance(obj, tuple):
            return [detuple(x) for x in obj]
        if isinstance(obj, list):
            return [detuple(x) for x in obj]
        if isinstance(obj, dict):
            return {k: detuple(v) for k, v in obj.items()}
        return obj

    return detuple(d)


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def build_curriculum(cfg: ExperimentConfig):
    """Runtime curriculum with the reward threshold resolved to a return."""
    from .curriculum import Curriculum

    max_step_reward = 1.0 + cfg.reward.alpha_ang + cfg.reward.alpha_en
    max_return = max_step_reward * cfg.train.episode_length * cfg.robot.dt_control
    return Curriculum(
        lin_range=cfg.curriculum.lin_start,
        ang_range=cfg.curriculum.ang_start,
        lin_max=cfg.curriculum.lin_max,
        ang_max=cfg.curriculum.ang_max,
        step=cfg.curriculum.step,
        reward_threshold=cfg.curriculum.threshold_fraction * max_return,
    )
