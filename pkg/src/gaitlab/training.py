"""Episodic policy search on simulator rollouts.

The optimizer is a mirrored-sampling evolution strategy with centered-rank
fitness shaping: each iteration draws antithetic perturbation pairs around
the mean parameters, evaluates every candidate on the same freshly sampled
commands and domain randomization (common random numbers), and ascends the
rank-weighted gradient estimate. Everything derives from the root seed, so
identical configs produce identical runs, independent of worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .config import ExperimentConfig, build_curriculum, config_hash
from .curriculum import Curriculum, sample_commands, update_curriculum
from .errors import GaitlabError
from .policy import Policy
from .rewards import RewardConfig, StepSample, breakdown_arrays
from .rollout import RolloutLog
from .sim import CONTACT_FORCE_THRESHOLD, DomainRandomization, PlanarQuadruped

STATUS_COMPLETE = 0
STATUS_COLLISION = 1
STATUS_DIVERGED = 2
_STATUS_NAMES = {0: "complete", 1: "collision", 2: "diverged"}


def derive_seed(*parts) -> int:
    """Stable child seed from a tuple of ints/strings."""
    ints = []
    for p in parts:
        if isinstance(p, str):
            ints.extend(p.encode())
        else:
            ints.append(int(p) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(ints).generate_state(1, np.uint64)[0])


@dataclass
class EvalResult:
    episode_return: float
    steps: int
    status: int
    log: RolloutLog | None = None

    @property
    def terminated_early(self) -> bool:
        return self.status != STATUS_COMPLETE


def evaluate(
    policy: Policy,
    sim: PlanarQuadruped,
    dr: DomainRandomization,
    cmd,
    seed: int,
    reward_cfg: RewardConfig,
    episode_length: int = 1000,
    record: bool = False,
    cmd_profile=None,
    config_digest: str = "",
) -> EvalResult:
    """Roll one episode and accumulate the per-step reward.

    The return is sum_t r_total(t) * dt_control. Deterministic given the
    seed: the rng drives friction/mass resampling then one noise draw per
    control step, in that order. cmd_profile optionally overrides the
    constant command with per-step (vx, wz) arrays, e.g. for ramps.
    """
    model = sim.model
    rng = np.random.default_rng(seed)
    state, ep = sim.reset_episode(
        dr, rng, command_sampler=lambda _: cmd, episode_length=episode_length
    )
    t_len = episode_length
    if cmd_profile is not None:
        cmd_vx_arr, cmd_wz_arr = cmd_profile
        cmd_vx_arr = np.asarray(cmd_vx_arr, dtype=float)
        cmd_wz_arr = np.asarray(cmd_wz_arr, dtype=float)
        if cmd_vx_arr.shape != (t_len + 1,) or cmd_wz_arr.shape != (t_len + 1,):
            raise ValueError("cmd_profile arrays must have length episode_length + 1")
    else:
        cmd_vx_arr = np.full(t_len + 1, float(cmd[0]))
        cmd_wz_arr = np.full(t_len + 1, float(cmd[1]))

    noise = np.empty((t_len + 1, K.NOISE_DIM))
    for k in range(t_len + 1):
        noise[k] = rng.uniform(-1.0, 1.0, K.NOISE_DIM)

    out_t = np.zeros(t_len)
    out_vx = np.zeros(t_len)
    out_wz = np.zeros(t_len)
    out_pitch = np.zeros(t_len)
    out_height = np.zeros(t_len)
    out_q = np.zeros((t_len, 8))
    out_dq = np.zeros((t_len, 8))
    out_tau = np.zeros((t_len, 8))
    out_action = np.zeros((t_len, 8))
    out_contact = np.zeros((t_len, 4), dtype=np.uint8)
    out_collision = np.zeros(t_len, dtype=np.uint8)

    steps, status = K.run_episode(
        state.vec,
        ep.params,
        model.n_substeps,
        t_len,
        cmd_vx_arr,
        cmd_wz_arr,
        noise,
        ep.noise_amp,
        policy.w1,
        policy.b1,
        policy.w2,
        policy.b2,
        policy.w3,
        policy.b3,
        policy.obs_shift,
        policy.obs_scale,
        policy.history_len,
        policy.nominal_targets,
        policy.action_scale,
        out_t,
        out_vx,
        out_wz,
        out_pitch,
        out_height,
        out_q,
        out_dq,
        out_tau,
        out_action,
        out_contact,
        out_collision,
    )

    n = steps
    br = breakdown_arrays(
        reward_cfg,
        cmd_vx_arr[:n],
        np.zeros(n),
        cmd_wz_arr[:n],
        out_vx[:n],
        np.zeros(n),
        out_wz[:n],
        out_tau[:n],
        out_dq[:n],
        out_action[:n],
        np.vstack([policy.nominal_targets, out_action[: n - 1]]) if n else np.zeros((0, 8)),
        out_pitch[:n],
        out_collision[:n],
    )
    episode_return = float(np.sum(br["r_total"]) * model.dt_control)

    log = None
    if record:
        log = RolloutLog(
            config_hash=config_digest,
            command={"vx": float(cmd[0]), "vy": 0.0, "wz": float(cmd[1])},
            seed=int(seed),
            dt_control=model.dt_control,
            meta={
                "friction": ep.friction,
                "added_mass": ep.added_mass,
                "status": _STATUS_NAMES[status],
                "steps": int(n),
                "ramp": cmd_profile is not None,
            },
        )
        prev = policy.nominal_targets
        for k in range(n):
            sample = StepSample(
                t=float(out_t[k]),
                cmd_vx=float(cmd_vx_arr[k]),
                cmd_vy=0.0,
                cmd_wz=float(cmd_wz_arr[k]),
                vx=float(out_vx[k]),
                vy=0.0,
                wz=float(out_wz[k]),
                joint_torques=out_tau[k].copy(),
                joint_velocities=out_dq[k].copy(),
                joint_positions=out_q[k].copy(),
                prev_action=np.asarray(prev, dtype=float).copy(),
                action=out_action[k].copy(),
                foot_contact=out_contact[k] > 0,
                trunk_pitch=float(out_pitch[k]),
                trunk_height=float(out_height[k]),
                collision_flag=bool(out_collision[k]),
            )
            log.samples.append(sample)
            prev = out_action[k]
    return EvalResult(episode_return=episode_return, steps=int(n), status=int(status), log=log)


def rollout_slow(
    policy: Policy,
    sim: PlanarQuadruped,
    dr: DomainRandomization,
    cmd,
    seed: int,
    episode_length: int,
):
    """Step-by-step rollout through the public control_step API.

    Exists to pin the fast kernel path: both must produce identical
    trajectories from the same seed.
    """
    from .policy import ObservationBuilder, frame_from_sample, frame_from_values

    rng = np.random.default_rng(seed)
    state, ep = sim.reset_episode(
        dr, rng, command_sampler=lambda _: cmd, episode_length=episode_length
    )
    builder = ObservationBuilder(policy.history_len)
    eta = rng.uniform(-1.0, 1.0, K.NOISE_DIM)
    q_n = state.joint_angles + ep.noise_amp[0:8] * eta[0:8]
    dq_n = state.joint_velocities + ep.noise_amp[8:16] * eta[8:16]
    pitch_n = state.pitch + ep.noise_amp[16] * eta[16]
    frame = frame_from_values(
        pitch_n, cmd[0], cmd[1], q_n, dq_n, policy.nominal_targets
    )
    prev_targets = policy.nominal_targets
    samples = []
    for _ in range(episode_length):
        obs = builder.observe(frame)
        targets = policy.act(obs)
        state, sample = sim.control_step(
            state, targets, ep, rng, prev_action=prev_targets, cmd=cmd
        )
        samples.append(sample)
        prev_targets = targets
        if sample.collision_flag:
            break
        frame = frame_from_sample(sample, cmd)
    return state, samples


@dataclass
class ESStats:
    iteration: int
    mean_fitness: float
    best_fitness: float
    sigma: float
    lr: float


def evolve(
    fitness_fn,
    x0: np.ndarray,
    *,
    pairs: int,
    sigma: float,
    lr: float,
    iterations: int,
    seed: int = 0,
    sigma_decay: float = 1.0,
    lr_decay: float = 1.0,
    make_context=None,
    map_fn=None,
    after_iteration=None,
) -> tuple[np.ndarray, list]:
    """Antithetic ES with centered-rank shaping; maximizes fitness_fn.

    fitness_fn(params, ctx) -> float. make_context(iteration) builds the
    common-random-numbers context shared by every candidate of one
    iteration. map_fn(eval_one, tasks) allows parallel evaluation; results
    are reduced in candidate order either way.
    """
    theta = np.array(x0, dtype=float)
    dim = theta.size
    rng = np.random.default_rng(derive_seed(seed, "es"))
    if map_fn is None:
        map_fn = lambda fn, tasks: [fn(t) for t in tasks]
    history = []
    for it in range(iterations):
        ctx = make_context(it) if make_context is not None else None
        eps = rng.standard_normal((pairs, dim))
        candidates = []
        signs = []
        for j in range(pairs):
            candidates.append(theta + sigma * eps[j])
            signs.append(1.0)
            candidates.append(theta - sigma * eps[j])
            signs.append(-1.0)
        fits = np.asarray(
            list(map_fn(fitness_fn, [(c, ctx) for c in candidates])), dtype=float
        )
        if not np.all(np.isfinite(fits)):
            bad = int(np.flatnonzero(~np.isfinite(fits))[0])
            raise GaitlabError(
                f"training diverged: non-finite fitness for candidate {bad} "
                f"at iteration {it}"
            )
        order = np.argsort(np.argsort(fits, kind="stable"), kind="stable")
        utilities = order / (len(fits) - 1) - 0.5
        grad = np.zeros(dim)
        for i in range(2 * pairs):
            grad += utilities[i] * signs[i] * eps[i // 2]
        grad /= 2 * pairs
        theta = theta + (lr / sigma) * grad
        if not np.all(np.isfinite(theta)):
            raise GaitlabError(
                f"training diverged: non-finite parameters at iteration {it}"
            )
        stats = ESStats(
            iteration=it,
            mean_fitness=float(np.mean(fits)),
            best_fitness=float(np.max(fits)),
            sigma=sigma,
            lr=lr,
        )
        history.append(stats)
        if after_iteration is not None:
            after_iteration(it, theta, stats)
        sigma *= sigma_decay
        lr *= lr_decay
    return theta, history


# --- worker plumbing for parallel population evaluation ---

_WORKER_ENV = {}


def _worker_init(cfg: ExperimentConfig):
    _WORKER_ENV["sim"] = PlanarQuadruped(cfg.robot)
    _WORKER_ENV["cfg"] = cfg
    _WORKER_ENV["template"] = Policy.build(
        cfg.robot,
        history_len=cfg.train.history_len,
        hidden=cfg.train.hidden,
        action_scale=cfg.train.action_scale,
    )


def _fitness_task(task):
    params, ctx = task
    cfg: ExperimentConfig = _WORKER_ENV["cfg"]
    sim = _WORKER_ENV["sim"]
    policy = _WORKER_ENV["template"].from_flat(params)
    total = 0.0
    for cmd, env_seed in ctx:
        res = evaluate(
            policy,
            sim,
            cfg.domain_randomization,
            cmd,
            env_seed,
            cfg.reward,
            episode_length=cfg.train.episode_length,
        )
        total += res.episode_return
    return total / len(ctx)


@dataclass
class TrainResult:
    policy: Policy  # best by held-out probe evaluation
    final_policy: Policy
    history: list = field(default_factory=list)
    curriculum: Curriculum | None = None
    best_iteration: int = -1
    best_probe_return: float = float("-inf")
    config_digest: str = ""


def probe_policy(policy: Policy, cfg: ExperimentConfig, sim=None) -> float:
    """Deterministic score on the fixed eval command grid, no randomization."""
    sim = sim or PlanarQuadruped(cfg.robot)
    dr = DomainRandomization.nominal()
    total = 0.0
    for i, v in enumerate(cfg.train.eval_commands):
        res = evaluate(
            policy,
            sim,
            dr,
            (v, 0.0),
            derive_seed(cfg.seed, "probe", i),
            cfg.reward,
            episode_length=cfg.train.episode_length,
        )
        total += res.episode_return
    return total / len(cfg.train.eval_commands)


def train(cfg: ExperimentConfig, progress=None) -> TrainResult:
    """Run the full training loop described by the experiment config."""
    tc = cfg.train
    sim = PlanarQuadruped(cfg.robot)
    template = Policy.build(
        cfg.robot,
        history_len=tc.history_len,
        hidden=tc.hidden,
        action_scale=tc.action_scale,
    )
    digest = config_hash(cfg)
    curriculum_box = [build_curriculum(cfg)]

    def make_context(iteration):
        cmd_rng = np.random.default_rng(derive_seed(cfg.seed, "cmd", iteration))
        ctx = []
        for e in range(tc.episodes_per_eval):
            cmd = sample_commands(curriculum_box[0], cmd_rng)
            ctx.append((cmd, derive_seed(cfg.seed, "env", iteration, e)))
        return ctx

    result = TrainResult(
        policy=template,
        final_policy=template,
        curriculum=curriculum_box[0],
        config_digest=digest,
    )
    t0 = time.monotonic()

    def after_iteration(it, theta, stats):
        mean_reward = stats.mean_fitness
        curriculum_box[0] = update_curriculum(curriculum_box[0], mean_reward)
        cand = template.from_flat(theta)
        probe = probe_policy(cand, cfg, sim)
        if probe > result.best_probe_return:
            result.best_probe_return = probe
            result.best_iteration = it
            result.policy = cand
        result.history.append(
            {
                "iteration": it,
                "mean_return": stats.mean_fitness,
                "best_return": stats.best_fitness,
                "probe_return": probe,
                "curriculum_lin_range": curriculum_box[0].lin_range,
                "wall_time_s": time.monotonic() - t0,
            }
        )
        if progress is not None:
            progress(result.history[-1])

    executor = None
    try:
        if tc.jobs > 1:
            executor = ProcessPoolExecutor(
                max_workers=tc.jobs, initializer=_worker_init, initargs=(cfg,)
            )
            map_fn = lambda fn, tasks: list(executor.map(fn, tasks, chunksize=1))
        else:
            _worker_init(cfg)
            map_fn = None
        theta, _ = evolve(
            _fitness_task,
            template.to_flat(),
            pairs=tc.population // 2,
            sigma=tc.sigma,
            lr=tc.lr,
            iterations=tc.iterations,
            seed=cfg.seed,
            sigma_decay=tc.sigma_decay,
            lr_decay=tc.lr_decay,
            make_context=make_context,
            map_fn=map_fn,
            after_iteration=after_iteration,
        )
    finally:
        if executor is not None:
            executor.shutdown()
    result.final_policy = template.from_flat(theta)
    result.curriculum = curriculum_box[0]
    return result
