"""Command-line front end.

Subcommands: train, eval-sweep, analyze, track-circle. Exit codes:
0 success, 1 runtime failure, 2 usage or config error.

The planar simulator cannot yaw, so `track-circle` emulates turning by
re-scoring: the policy's achieved forward speed is laid along the
commanded turn rate and the resulting planar track is compared against
the target circle. Ingested logs with real yaw rates are integrated as
recorded.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import metrics, reports, rollout, training
from .config import config_hash, load_config
from .errors import ConfigError, GaitlabError
from .metrics import circle_tracking_error, contact_schedule_from_log, velocity_sweep_report
from .rewards import RewardConfig, score_samples
from .sim import DomainRandomization, PlanarQuadruped


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaitlab")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a policy from an experiment config")
    t.add_argument("--config", required=True)
    t.add_argument("--alpha-en", type=float, default=None, help="override reward.alpha_en")
    t.add_argument("--seed", type=int, default=None, help="override root seed")
    t.add_argument("--out", default=None, help="override output directory")
    t.add_argument("--jobs", type=int, default=None, help="parallel rollout workers")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval-sweep", help="run seeded rollouts over a command grid")
    e.add_argument("--policy", required=True, help="checkpoint file")
    e.add_argument("--vmin", type=float, required=True)
    e.add_argument("--vmax", type=float, required=True)
    e.add_argument("--step", type=float, required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--episode-steps", type=int, default=1000)
    e.add_argument("--svg", action="store_true", help="also render SVG gait diagrams")
    e.add_argument("--ramp", action="store_true", help="single run with ramped command")
    e.add_argument("--accel", type=float, default=0.5, help="ramp acceleration, m/s^2")
    e.set_defaults(func=cmd_eval_sweep)

    a = sub.add_parser("analyze", help="re-score and classify a stored rollout")
    a.add_argument("--log", required=True)
    a.add_argument("--config", default=None, help="reward constants (defaults otherwise)")
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("track-circle", help="circle-tracking error of a policy or log")
    c.add_argument("--policy", required=True)
    c.add_argument("--radius", type=float, default=2.0)
    c.add_argument("--speed", type=float, default=1.0)
    c.add_argument("--out", required=True)
    c.add_argument("--log", default=None, help="score an ingested log instead of rolling out")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--episode-steps", type=int, default=1000)
    c.set_defaults(func=cmd_track_circle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except GaitlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _apply_overrides(cfg, args):
    if args.alpha_en is not None:
        cfg = dataclasses.replace(
            cfg, reward=dataclasses.replace(cfg.reward, alpha_en=args.alpha_en)
        )
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.out)
    if args.jobs is not None:
        cfg = dataclasses.replace(
            cfg, train=dataclasses.replace(cfg.train, jobs=args.jobs)
        )
    return cfg


def cmd_train(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)

    def progress(row):
        print(
            f"iter {row['iteration']:4d}  mean {row['mean_return']:8.3f}  "
            f"best {row['best_return']:8.3f}  probe {row['probe_return']:8.3f}  "
            f"range ±{row['curriculum_lin_range']:.2f}",
            flush=True,
        )

    result = training.train(cfg, progress=progress)
    outputs = []

    best_ckpt = out / "checkpoint_best.json"
    reports.write_checkpoint(best_ckpt, result.policy, cfg, result.best_iteration)
    final_ckpt = out / "checkpoint_final.json"
    reports.write_checkpoint(final_ckpt, result.final_policy, cfg, cfg.train.iterations)
    history_csv = out / "training_history.csv"
    reports.write_training_history_csv(result.history, history_csv)
    outputs += [str(best_ckpt), str(final_ckpt), str(history_csv)]

    sim = PlanarQuadruped(cfg.robot)
    dr = DomainRandomization.nominal()
    for i, v in enumerate(cfg.train.eval_commands):
        res = training.evaluate(
            result.policy,
            sim,
            dr,
            (v, 0.0),
            training.derive_seed(cfg.seed, "final", i),
            cfg.reward,
            episode_length=cfg.train.episode_length,
            record=True,
            config_digest=digest,
        )
        log_path = out / f"rollout_cmd_{v:.2f}.jsonl"
        rollout.write_log(res.log, log_path)
        outputs.append(str(log_path))

    reports.write_manifest(out / "manifest.json", "train", digest, outputs)
    print(f"done: best probe return {result.best_probe_return:.3f} "
          f"at iteration {result.best_iteration}")
    return 0


def command_grid(vmin: float, vmax: float, step: float) -> list:
    if step <= 0:
        raise ConfigError("--step must be positive")
    if vmax < vmin:
        raise ConfigError("--vmax must be >= --vmin")
    n = int(math.floor((vmax - vmin) / step + 1e-9)) + 1
    return [vmin + k * step for k in range(n)]


_SWEEP_ENV = {}


def _sweep_init(ckpt_path, episode_steps, out_dir):
    policy, cfg, _ = reports.read_checkpoint(ckpt_path)
    _SWEEP_ENV.update(
        policy=policy,
        cfg=cfg,
        sim=PlanarQuadruped(cfg.robot),
        episode_steps=episode_steps,
        out=Path(out_dir),
        digest=config_hash(cfg),
    )


def _sweep_one(task):
    idx, v, seed = task
    env = _SWEEP_ENV
    res = training.evaluate(
        env["policy"],
        env["sim"],
        DomainRandomization.nominal(),
        (v, 0.0),
        seed,
        env["cfg"].reward,
        episode_length=env["episode_steps"],
        record=True,
        config_digest=env["digest"],
    )
    path = env["out"] / f"rollout_cmd_{v:.2f}.jsonl"
    rollout.write_log(res.log, path)
    return idx, str(path)


def cmd_eval_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _sweep_init(args.policy, args.episode_steps, out)
    cfg = _SWEEP_ENV["cfg"]
    digest = _SWEEP_ENV["digest"]
    outputs = []

    if args.ramp:
        # One continuous run: command ramps from vmin to vmax at --accel,
        # then holds for the remaining steps.
        dt = cfg.robot.dt_control
        ramp_steps = int(math.ceil((args.vmax - args.vmin) / (args.accel * dt)))
        total = max(args.episode_steps, ramp_steps + int(2.0 / dt))
        ks = np.arange(total + 1)
        cmd_vx = np.minimum(args.vmin + args.accel * ks * dt, args.vmax)
        res = training.evaluate(
            _SWEEP_ENV["policy"],
            _SWEEP_ENV["sim"],
            DomainRandomization.nominal(),
            (args.vmin, 0.0),
            training.derive_seed(args.seed, "ramp"),
            cfg.reward,
            episode_length=total,
            record=True,
            cmd_profile=(cmd_vx, np.zeros(total + 1)),
            config_digest=digest,
        )
        log_path = out / "rollout_ramp.jsonl"
        rollout.write_log(res.log, log_path)
        cs = contact_schedule_from_log(res.log)
        reports.write_gait_diagram_csv(cs, out / "gait_ramp.csv")
        outputs += [str(log_path), str(out / "gait_ramp.csv")]
        if args.svg:
            reports.render_gait_diagram_svg(cs, out / "gait_ramp.svg", "ramp")
            outputs.append(str(out / "gait_ramp.svg"))
        reports.write_manifest(out / "manifest.json", "eval-sweep --ramp", digest, outputs)
        return 0

    grid = command_grid(args.vmin, args.vmax, args.step)
    tasks = [
        (i, v, training.derive_seed(args.seed, "sweep", i)) for i, v in enumerate(grid)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=args.jobs,
            initializer=_sweep_init,
            initargs=(args.policy, args.episode_steps, out),
        ) as ex:
            results = list(ex.map(_sweep_one, tasks, chunksize=1))
    else:
        results = [_sweep_one(t) for t in tasks]

    logs = []
    for (idx, path), (_, v, _s) in zip(results, tasks):
        log = rollout.read_log(path)
        logs.append(log)
        outputs.append(path)
        cs = contact_schedule_from_log(log, metrics.steady_state_window(log))
        diagram = out / f"gait_cmd_{v:.2f}.csv"
        reports.write_gait_diagram_csv(cs, diagram)
        outputs.append(str(diagram))
        if args.svg:
            svg = out / f"gait_cmd_{v:.2f}.svg"
            reports.render_gait_diagram_svg(cs, svg, f"cmd {v:.2f} m/s")
            outputs.append(str(svg))

    rows = velocity_sweep_report(logs)
    report_path = out / "report.csv"
    reports.write_sweep_report_csv(rows, report_path)
    outputs.append(str(report_path))
    reports.write_manifest(out / "manifest.json", "eval-sweep", digest, outputs)
    for row in rows:
        label = row.gait.gait.value if row.gait else "?"
        cot = f"{row.point.cot:8.2f}" if row.point else "     n/a"
        print(f"cmd {row.command_vx:5.2f} m/s  cot {cot} J/m  gait {label}")
    return 0


def cmd_analyze(args) -> int:
    log = rollout.read_log(args.log)
    reward_cfg = (
        load_config(args.config).reward if args.config else RewardConfig()
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    breakdowns = score_samples(log.samples, reward_cfg)
    times = [s.t for s in log.samples]
    reports.write_reward_breakdown_csv(times, breakdowns, out / "rewards.csv")
    row = metrics.analyze_log(log)
    reports.write_sweep_report_csv([row], out / "summary.csv")
    cs = contact_schedule_from_log(log)
    reports.write_gait_diagram_csv(cs, out / "gait.csv")
    reports.write_manifest(
        out / "manifest.json",
        "analyze",
        log.config_hash,
        [str(out / "rewards.csv"), str(out / "summary.csv"), str(out / "gait.csv")],
    )
    if row.point:
        print(
            f"cot {row.point.cot:.3f} J/m  achieved {row.point.achieved_speed:.3f} m/s"
        )
    if row.gait:
        print(f"gait {row.gait.gait.value}")
    if row.error:
        print(f"partial: {row.error}")
    return 0


def _integrate_track(speeds, yaw_rates, dt: float) -> np.ndarray:
    """Unicycle integration of forward speed and yaw rate from the origin."""
    n = len(speeds)
    pos = np.zeros((n, 2))
    x = y = 0.0
    heading = 0.0
    for k in range(n):
        heading += yaw_rates[k] * dt
        x += speeds[k] * math.cos(heading) * dt
        y += speeds[k] * math.sin(heading) * dt
        pos[k, 0] = x
        pos[k, 1] = y
    return pos


def cmd_track_circle(args) -> int:
    if args.radius <= 0:
        raise ConfigError("--radius must be positive")
    omega = args.speed / args.radius
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.log:
        log = rollout.read_log(args.log)
        digest = log.config_hash
        speeds = [s.vx for s in log.samples]
        measured_wz = [s.wz for s in log.samples]
        if any(abs(w) > 0 for w in measured_wz):
            yaw = measured_wz
        else:
            yaw = [omega] * len(speeds)
        dt = log.dt_control
    else:
        policy, cfg, _ = reports.read_checkpoint(args.policy)
        digest = config_hash(cfg)
        sim = PlanarQuadruped(cfg.robot)
        res = training.evaluate(
            policy,
            sim,
            DomainRandomization.nominal(),
            (args.speed, omega),
            training.derive_seed(args.seed, "circle"),
            cfg.reward,
            episode_length=args.episode_steps,
            record=True,
            config_digest=digest,
        )
        rollout.write_log(res.log, out / "rollout_circle.jsonl")
        speeds = [s.vx for s in res.log.samples]
        yaw = [omega] * len(speeds)
        dt = cfg.robot.dt_control

    positions = _integrate_track(speeds, yaw, dt)
    center = (0.0, args.radius)
    errors, accumulated = circle_tracking_error(positions, center, args.radius)
    times = [k * dt for k in range(len(errors))]
    reports.write_circle_error_csv(times, errors, out / "circle_error.csv")
    with open(out / "track_positions.csv", "w", newline="") as f:
        f.write("t,x,y\n")
        for t, (x, y) in zip(times, positions):
            f.write(f"{t!r},{x!r},{y!r}\n")
    reports.write_manifest(
        out / "manifest.json",
        "track-circle",
        digest,
        [str(out / "circle_error.csv"), str(out / "track_positions.csv")],
    )
    print(f"accumulated circle error {accumulated:.4f} m over {len(errors)} steps")
    return 0


if __name__ == "__main__":
    sys.exit(main())
