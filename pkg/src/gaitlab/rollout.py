"""Rollout log interchange format.

A rollout is stored as JSON-lines: line 0 is the header, every further
line is one control-step sample. Floats serialize via Python's shortest
round-trip repr, so write-then-read reproduces every field bitwise. The
format is streamable and remains readable after a crash truncates it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import SchemaError
from .rewards import StepSample

SCHEMA_VERSION = "gaitlab.rollout.v1"

_SAMPLE_SCALARS = (
    "t",
    "cmd_vx",
    "cmd_vy",
    "cmd_wz",
    "vx",
    "vy",
    "wz",
    "trunk_pitch",
    "trunk_height",
)
_SAMPLE_VECTORS = (
    "joint_torques",
    "joint_velocities",
    "joint_positions",
    "prev_action",
    "action",
)


@dataclass
class RolloutLog:
    """Ordered control-step samples plus the run metadata needed to score them."""

    config_hash: str
    command: dict
    seed: int
    dt_control: float
    samples: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    schema: str = SCHEMA_VERSION

    def validate(self):
        if self.schema != SCHEMA_VERSION:
            raise SchemaError(
                f"schema version mismatch: log has {self.schema!r}, "
                f"reader expects {SCHEMA_VERSION!r}"
            )
        for i in range(1, len(self.samples)):
            step = self.samples[i].t - self.samples[i - 1].t
            if step <= 0:
                raise SchemaError(f"record {i}: time not strictly increasing")
            if abs(step - self.dt_control) > 1e-9:
                raise SchemaError(
                    f"record {i}: dt {step!r} differs from dt_control {self.dt_control!r}"
                )

    @property
    def duration(self) -> float:
        return len(self.samples) * self.dt_control

    def time_window(self) -> tuple[float, float]:
        if not self.samples:
            return (0.0, 0.0)
        return (self.samples[0].t, self.samples[-1].t + self.dt_control)


def _sample_to_obj(s: StepSample) -> dict:
    obj = {k: float(getattr(s, k)) for k in _SAMPLE_SCALARS}
    for k in _SAMPLE_VECTORS:
        obj[k] = [float(x) for x in getattr(s, k)]
    obj["foot_contact"] = [bool(x) for x in s.foot_contact]
    obj["collision_flag"] = bool(s.collision_flag)
    return obj


def _sample_from_obj(obj: dict, index: int) -> StepSample:
    try:
        kwargs = {k: float(obj[k]) for k in _SAMPLE_SCALARS}
        for k in _SAMPLE_VECTORS:
            kwargs[k] = np.asarray(obj[k], dtype=float)
        kwargs["foot_contact"] = np.asarray(obj["foot_contact"], dtype=bool)
        kwargs["collision_flag"] = bool(obj["collision_flag"])
        return StepSample(**kwargs)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"record {index}: {exc}") from exc


def write_log(log: RolloutLog, path) -> None:
    header = {
        "schema": log.schema,
        "config_hash": log.config_hash,
        "command": log.command,
        "seed": log.seed,
        "dt_control": log.dt_control,
        "meta": log.meta,
    }
    with open(path, "w") as f:
        f.write(json.dumps(header, allow_nan=False) + "\n")
        for s in log.samples:
            f.write(json.dumps(_sample_to_obj(s), allow_nan=False) + "\n")


def read_log(path) -> RolloutLog:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines:
        raise SchemaError(f"{path}: empty log file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: bad header: {exc}") from exc
    for key in ("schema", "config_hash", "command", "seed", "dt_control"):
        if key not in header:
            raise SchemaError(f"{path}: header missing {key!r}")
    log = RolloutLog(
        config_hash=header["config_hash"],
        command=header["command"],
        seed=int(header["seed"]),
        dt_control=float(header["dt_control"]),
        meta=header.get("meta", {}),
        schema=header["schema"],
    )
    for i, line in enumerate(lines[1:], start=1):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"record {i}: unparseable line: {exc}") from exc
        log.samples.append(_sample_from_obj(obj, i))
    log.validate()
    return log
