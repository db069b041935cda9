"""Artifact emission: report CSVs, gait diagrams, checkpoints, manifests.

Column orders are part of the package contract and pinned by tests:

    sweep report: command_vx, command_wz, achieved_vx, cot_j_per_m,
        tracking_err, gait_label, duty_fl, duty_fr, duty_rl, duty_rr,
        offset_fr, offset_rl, offset_rr, flight_frac, quad_frac
    gait diagram: t, fl, fr, rl, rr              (stance as 0/1)
    training history: iteration, mean_return, best_return,
        curriculum_range, wall_time
    reward breakdown: t, r_lin, r_ang, r_motion, r_en, r_aux_raw, r_total
    circle error: t, error, accumulated
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .config import ExperimentConfig, config_from_dict, config_hash
from .errors import SchemaError
from .gaits import ContactSchedule
from .policy import Policy

CHECKPOINT_SCHEMA = "gaitlab.checkpoint.v1"

SWEEP_COLUMNS = [
    "command_vx",
    "command_wz",
    "achieved_vx",
    "cot_j_per_m",
    "tracking_err",
    "gait_label",
    "duty_fl",
    "duty_fr",
    "duty_rl",
    "duty_rr",
    "offset_fr",
    "offset_rl",
    "offset_rr",
    "flight_frac",
    "quad_frac",
]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def write_sweep_report_csv(rows, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            p = row.point
            g = row.gait
            record = [
                _fmt(row.command_vx),
                _fmt(row.command_wz),
                _fmt(p.achieved_speed) if p else "",
                _fmt(p.cot) if p else "",
                _fmt(p.tracking_error) if p else "",
                g.gait.value if g else "",
            ]
            if g is not None:
                record += [_fmt(d) for d in g.duty_factors]
                record += [_fmt(o) for o in g.phase_offsets[1:]]
                record += [_fmt(g.flight_fraction), _fmt(g.quad_support_fraction)]
            else:
                record += [""] * 9
            w.writerow(record)


def write_gait_diagram_csv(cs: ContactSchedule, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "fl", "fr", "rl", "rr"])
        for k in range(cs.num_steps):
            w.writerow(
                [repr(k * cs.dt)] + [int(cs.stance[foot, k]) for foot in range(4)]
            )


def render_gait_diagram_svg(cs: ContactSchedule, path, title: str = "") -> None:
    """Self-contained stance diagram: one band per foot, filled while down."""
    width, row_h, pad, label_w = 900.0, 28.0, 10.0, 40.0
    t_total = cs.num_steps * cs.dt
    sx = (width - label_w - 2 * pad) / t_total
    height = 4 * row_h + 3 * pad + 30
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" font-family="sans-serif" font-size="12">'
    ]
    if title:
        parts.append(f'<text x="{label_w}" y="14">{title}</text>')
    names = ("FL", "FR", "RL", "RR")
    for foot in range(4):
        y0 = 20 + foot * (row_h + pad / 2)
        parts.append(f'<text x="{pad}" y="{y0 + row_h / 2 + 4}">{names[foot]}</text>')
        parts.append(
            f'<rect x="{label_w}" y="{y0}" width="{width - label_w - pad}" '
            f'height="{row_h}" fill="none" stroke="#999"/>'
        )
        row = cs.stance[foot]
        k = 0
        while k < cs.num_steps:
            if row[k]:
                start = k
                while k < cs.num_steps and row[k]:
                    k += 1
                x = label_w + start * cs.dt * sx
                wid = (k - start) * cs.dt * sx
                parts.append(
                    f'<rect x="{x:.2f}" y="{y0}" width="{wid:.2f}" '
                    f'height="{row_h}" fill="#36618e"/>'
                )
            else:
                k += 1
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts))


def write_training_history_csv(history, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["iteration", "mean_return", "best_return", "curriculum_range", "wall_time"])
        for row in history:
            w.writerow(
                [
                    row["iteration"],
                    _fmt(row["mean_return"]),
                    _fmt(row["best_return"]),
                    _fmt(row["curriculum_lin_range"]),
                    _fmt(row["wall_time_s"]),
                ]
            )


def write_reward_breakdown_csv(times, breakdowns, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "r_lin", "r_ang", "r_motion", "r_en", "r_aux_raw", "r_total"])
        for t, b in zip(times, breakdowns):
            w.writerow(
                [_fmt(t)]
                + [_fmt(v) for v in (b.r_lin, b.r_ang, b.r_motion, b.r_en, b.r_aux_raw, b.r_total)]
            )


def write_circle_error_csv(times, errors, path) -> None:
    acc = 0.0
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "error", "accumulated"])
        for t, e in zip(times, errors):
            acc += float(e)
            w.writerow([_fmt(t), _fmt(e), _fmt(acc)])


def write_checkpoint(path, policy: Policy, cfg: ExperimentConfig, iteration: int) -> None:
    obj = {
        "schema": CHECKPOINT_SCHEMA,
        "iteration": int(iteration),
        "config_hash": config_hash(cfg),
        "config": _cfg_dict(cfg),
        "policy": {
            "hidden": int(policy.b1.size),
            "history_len": int(policy.history_len),
            "action_scale": float(policy.action_scale),
        },
        "params": [float(x) for x in policy.to_flat()],
    }
    with open(path, "w") as f:
        json.dump(obj, f)


def _cfg_dict(cfg: ExperimentConfig) -> dict:
    from .config import config_to_dict

    return config_to_dict(cfg)


def read_checkpoint(path) -> tuple[Policy, ExperimentConfig, dict]:
    with open(path) as f:
        obj = json.load(f)
    if obj.get("schema") != CHECKPOINT_SCHEMA:
        raise SchemaError(
            f"{path}: checkpoint schema {obj.get('schema')!r}, expected {CHECKPOINT_SCHEMA!r}"
        )
    cfg = config_from_dict(obj["config"])
    if config_hash(cfg) != obj["config_hash"]:
        raise SchemaError(f"{path}: config hash mismatch, checkpoint corrupted")
    meta = obj["policy"]
    policy = Policy.build(
        cfg.robot,
        history_len=meta["history_len"],
        hidden=meta["hidden"],
        action_scale=meta["action_scale"],
    )
    policy = policy.from_flat(np.asarray(obj["params"], dtype=float))
    return policy, cfg, {"iteration": obj["iteration"], "config_hash": obj["config_hash"]}


def write_manifest(path, command: str, cfg_digest: str, outputs: list) -> None:
    with open(path, "w") as f:
        json.dump(
            {"command": command, "config_hash": cfg_digest, "outputs": sorted(outputs)},
            f,
            indent=2,
        )
