"""Compiled inner loops: planar rigid-body physics, MLP forward, episode rollout.

The planar quadruped is a trunk (x, z, pitch) with four independent
two-link legs. Leg joints integrate double-pendulum dynamics about their
hip pivot; the trunk feels gravity plus the ground forces at the feet.
Leg swing does not back-react on the trunk, which keeps the trunk exactly
ballistic in free flight and is the documented desk-scale reduction.

Everything here is deterministic: no RNG, no fastmath, float64 only.
State and parameter vectors use the index constants below; sim.py owns
the user-facing dataclasses.
"""

import math

import numpy as np
from numba import njit

# --- state vector layout ---
X, Z, TH, VX, VZ, OM = 0, 1, 2, 3, 4, 5
Q0 = 6  # 8 joint angles: (hip, knee) x (FL, FR, RL, RR)
DQ0 = 14  # 8 joint velocities
FN0 = 22  # 4 normal forces
FT0 = 26  # 4 tangential forces
EN = 30  # accumulated rectified energy
TIME = 31
CONE = 32  # running max of |Ft| - mu*N (diagnostic, <= 0 when cone holds)
STATE_DIM = 33

# --- parameter vector layout ---
(
    P_TRUNK_I,
    P_HIPF,
    P_HIPR,
    P_M1,
    P_L1,
    P_LC1,
    P_I1,
    P_M2,
    P_L2,
    P_LC2,
    P_I2,
    P_TAU_MAX,
    P_DQ_MAX,
    P_HIP_LO,
    P_HIP_HI,
    P_KNEE_LO,
    P_KNEE_HI,
    P_KP,
    P_KD,
    P_FOOT_R,
    P_KC,
    P_CC,
    P_MU,
    P_VREG,
    P_G,
    P_MTOT,
    P_DT,
    P_MIN_TRUNK_Z,
) = range(28)
PARAM_DIM = 28

FRAME_DIM = 28  # sin/cos pitch, cmd_vx, cmd_wz, q(8), dq(8), prev_action(8)
NOISE_DIM = 18  # q(8), dq(8), pitch, vx


@njit(cache=True)
def substep(s, p, targets):
    """One semi-implicit Euler physics step, in place."""
    dt = p[P_DT]
    th = s[TH]
    om = s[OM]
    sin_th = math.sin(th)
    cos_th = math.cos(th)
    g = p[P_G]
    m1 = p[P_M1]
    l1 = p[P_L1]
    lc1 = p[P_LC1]
    m2 = p[P_M2]
    l2 = p[P_L2]
    lc2 = p[P_LC2]
    kp = p[P_KP]
    kd = p[P_KD]
    tau_max = p[P_TAU_MAX]
    dq_max = p[P_DQ_MAX]
    mu = p[P_MU]
    vreg = p[P_VREG]

    m11_const = p[P_I1] + m1 * lc1 * lc1 + m2 * l1 * l1
    m22 = p[P_I2] + m2 * lc2 * lc2
    g1_const = (m1 * lc1 + m2 * l1) * g
    g2_const = m2 * lc2 * g

    fx_sum = 0.0
    fz_sum = 0.0
    tq_sum = 0.0
    energy = 0.0

    for leg in range(4):
        hipx = p[P_HIPF] if leg < 2 else p[P_HIPR]
        iq = Q0 + 2 * leg
        idq = DQ0 + 2 * leg
        q1 = s[iq]
        q2 = s[iq + 1]
        dq1 = s[idq]
        dq2 = s[idq + 1]

        tau1 = kp * (targets[2 * leg] - q1) - kd * dq1
        tau2 = kp * (targets[2 * leg + 1] - q2) - kd * dq2
        if tau1 > tau_max:
            tau1 = tau_max
        elif tau1 < -tau_max:
            tau1 = -tau_max
        if tau2 > tau_max:
            tau2 = tau_max
        elif tau2 < -tau_max:
            tau2 = -tau_max

        a1 = th + q1
        a2 = a1 + q2
        sa1 = math.sin(a1)
        ca1 = math.cos(a1)
        sa2 = math.sin(a2)
        ca2 = math.cos(a2)
        da1 = om + dq1
        da2 = da1 + dq2

        hx = s[X] + hipx * cos_th
        hz = s[Z] + hipx * sin_th
        foot_x = hx + l1 * sa1 + l2 * sa2
        foot_z = hz - l1 * ca1 - l2 * ca2

        # ground contact: spring-damper normal, regularized Coulomb tangent
        pen = p[P_FOOT_R] - foot_z
        fn = 0.0
        ft = 0.0
        if pen > 0.0:
            vfx = s[VX] - om * hipx * sin_th + da1 * l1 * ca1 + da2 * l2 * ca2
            vfz = s[VZ] + om * hipx * cos_th + da1 * l1 * sa1 + da2 * l2 * sa2
            fn = p[P_KC] * pen - p[P_CC] * vfz
            if fn < 0.0:
                fn = 0.0
            ft = -mu * fn * math.tanh(vfx / vreg)
        s[FN0 + leg] = fn
        s[FT0 + leg] = ft
        viol = abs(ft) - mu * fn
        if viol > s[CONE]:
            s[CONE] = viol

        fx_sum += ft
        fz_sum += fn
        rx = foot_x - s[X]
        rz = foot_z - s[Z]
        tq_sum += rx * fn - rz * ft

        # double-pendulum EOM in absolute angles, hip pivot held fixed
        delta = a1 - a2
        cd = math.cos(delta)
        sd = math.sin(delta)
        m12 = m2 * l1 * lc2 * cd
        h = m2 * l1 * lc2 * sd
        q1_rhs = (
            tau1
            - tau2
            + l1 * ca1 * ft
            + l1 * sa1 * fn
            - g1_const * sa1
            - h * da2 * da2
        )
        q2_rhs = tau2 + l2 * ca2 * ft + l2 * sa2 * fn - g2_const * sa2 + h * da1 * da1
        det = m11_const * m22 - m12 * m12
        aa1 = (m22 * q1_rhs - m12 * q2_rhs) / det
        aa2 = (m11_const * q2_rhs - m12 * q1_rhs) / det

        energy += (abs(tau1) * abs(dq1) + abs(tau2) * abs(dq2)) * dt

        # velocity-Verlet position update: exact for constant acceleration
        qdd1 = aa1
        qdd2 = aa2 - aa1
        nq1 = q1 + dq1 * dt + 0.5 * qdd1 * dt * dt
        nq2 = q2 + dq2 * dt + 0.5 * qdd2 * dt * dt
        ndq1 = dq1 + qdd1 * dt
        ndq2 = dq2 + qdd2 * dt
        if ndq1 > dq_max:
            ndq1 = dq_max
        elif ndq1 < -dq_max:
            ndq1 = -dq_max
        if ndq2 > dq_max:
            ndq2 = dq_max
        elif ndq2 < -dq_max:
            ndq2 = -dq_max
        if nq1 < p[P_HIP_LO]:
            nq1 = p[P_HIP_LO]
            ndq1 = 0.0
        elif nq1 > p[P_HIP_HI]:
            nq1 = p[P_HIP_HI]
            ndq1 = 0.0
        if nq2 < p[P_KNEE_LO]:
            nq2 = p[P_KNEE_LO]
            ndq2 = 0.0
        elif nq2 > p[P_KNEE_HI]:
            nq2 = p[P_KNEE_HI]
            ndq2 = 0.0
        s[iq] = nq1
        s[iq + 1] = nq2
        s[idq] = ndq1
        s[idq + 1] = ndq2

    mtot = p[P_MTOT]
    ax = fx_sum / mtot
    az = fz_sum / mtot - g
    al = tq_sum / p[P_TRUNK_I]
    s[X] += s[VX] * dt + 0.5 * ax * dt * dt
    s[Z] += s[VZ] * dt + 0.5 * az * dt * dt
    s[TH] += s[OM] * dt + 0.5 * al * dt * dt
    s[VX] += ax * dt
    s[VZ] += az * dt
    s[OM] += al * dt
    s[EN] += energy
    s[TIME] += dt


@njit(cache=True)
def tick(s, p, targets, n_substeps):
    """Run one control period of physics. Returns False if state diverged."""
    for _ in range(n_substeps):
        substep(s, p, targets)
    ok = True
    for i in range(DQ0 + 8):
        v = s[i]
        if not math.isfinite(v) or abs(v) > 1e7:
            ok = False
    return ok


@njit(cache=True)
def collided(s, p):
    """Trunk or any knee at ground level: a non-foot part touched down."""
    if s[Z] < p[P_MIN_TRUNK_Z]:
        return True
    th = s[TH]
    for leg in range(4):
        hipx = p[P_HIPF] if leg < 2 else p[P_HIPR]
        a1 = th + s[Q0 + 2 * leg]
        knee_z = s[Z] + hipx * math.sin(th) - p[P_L1] * math.cos(a1)
        if knee_z < p[P_FOOT_R]:
            return True
    return False


@njit(cache=True)
def mlp_forward(x, w1, b1, w2, b2, w3, b3, out):
    """Two tanh hidden layers, tanh output in [-1, 1]."""
    n0 = x.shape[0]
    n1 = b1.shape[0]
    n2 = b2.shape[0]
    n3 = b3.shape[0]
    h1 = np.empty(n1)
    for i in range(n1):
        acc = b1[i]
        for j in range(n0):
            acc += w1[i, j] * x[j]
        h1[i] = math.tanh(acc)
    h2 = np.empty(n2)
    for i in range(n2):
        acc = b2[i]
        for j in range(n1):
            acc += w2[i, j] * h1[j]
        h2[i] = math.tanh(acc)
    for i in range(n3):
        acc = b3[i]
        for j in range(n2):
            acc += w3[i, j] * h2[j]
        out[i] = math.tanh(acc)


@njit(cache=True)
def fill_frame(frame, pitch, cmd_vx, cmd_wz, q, dq, prev_action):
    """Observation frame layout shared by the Python and kernel paths."""
    frame[0] = math.sin(pitch)
    frame[1] = math.cos(pitch)
    frame[2] = cmd_vx
    frame[3] = cmd_wz
    for i in range(8):
        frame[4 + i] = q[i]
        frame[12 + i] = dq[i]
        frame[20 + i] = prev_action[i]


@njit(cache=True)
def run_episode(
    s,
    p,
    n_substeps,
    ep_len,
    cmd_vx,
    cmd_wz,
    noise,
    noise_amp,
    w1,
    b1,
    w2,
    b2,
    w3,
    b3,
    obs_shift,
    obs_scale,
    hist_len,
    nominal_targets,
    action_scale,
    out_t,
    out_vx,
    out_wz_,
    out_pitch,
    out_height,
    out_q,
    out_dq,
    out_tau,
    out_action,
    out_contact,
    out_collision,
):
    """Roll one episode: observe, act, tick, record; stop on collision.

    cmd_vx/cmd_wz are per-step command arrays of length ep_len + 1 (the
    last entry only feeds the final unused observation frame). noise has
    ep_len + 1 rows: row 0 corrupts the initial measurement, row k+1 the
    measurement after tick k. Returns (steps_executed, status) with
    status 0 = ran out of steps, 1 = collision, 2 = diverged.
    """
    frame = np.zeros(FRAME_DIM)
    hist = np.zeros((hist_len, FRAME_DIM)) if hist_len > 0 else np.zeros((1, FRAME_DIM))
    obs_dim = FRAME_DIM * (hist_len + 1)
    obs = np.zeros(obs_dim)
    action_out = np.empty(8)
    targets = np.empty(8)
    prev_targets = np.empty(8)
    qn = np.empty(8)
    dqn = np.empty(8)
    for i in range(8):
        prev_targets[i] = nominal_targets[i]

    # initial measurement (noise row 0)
    for i in range(8):
        qn[i] = s[Q0 + i] + noise_amp[i] * noise[0, i]
        dqn[i] = s[DQ0 + i] + noise_amp[8 + i] * noise[0, 8 + i]
    pitch_n = s[TH] + noise_amp[16] * noise[0, 16]
    fill_frame(frame, pitch_n, cmd_vx[0], cmd_wz[0], qn, dqn, prev_targets)

    status = 0
    steps = 0
    for k in range(ep_len):
        # observation = current frame then most-recent-first history
        for i in range(FRAME_DIM):
            obs[i] = frame[i]
        for hh in range(hist_len):
            base = FRAME_DIM * (hh + 1)
            for i in range(FRAME_DIM):
                obs[base + i] = hist[hh, i]
        for i in range(obs_dim):
            obs[i] = (obs[i] - obs_shift[i]) * obs_scale[i]

        mlp_forward(obs, w1, b1, w2, b2, w3, b3, action_out)
        for i in range(8):
            targets[i] = nominal_targets[i] + action_scale * action_out[i]

        ok = tick(s, p, targets, n_substeps)

        # record the step outcome
        out_t[k] = k * (p[P_DT] * n_substeps)
        nrow = k + 1
        for i in range(8):
            qn[i] = s[Q0 + i] + noise_amp[i] * noise[nrow, i]
            dqn[i] = s[DQ0 + i] + noise_amp[8 + i] * noise[nrow, 8 + i]
            out_q[k, i] = qn[i]
            out_dq[k, i] = dqn[i]
            kp = p[P_KP]
            kd = p[P_KD]
            tau = kp * (targets[i] - s[Q0 + i]) - kd * s[DQ0 + i]
            if tau > p[P_TAU_MAX]:
                tau = p[P_TAU_MAX]
            elif tau < -p[P_TAU_MAX]:
                tau = -p[P_TAU_MAX]
            out_tau[k, i] = tau
            out_action[k, i] = targets[i]
        pitch_n = s[TH] + noise_amp[16] * noise[nrow, 16]
        vx_n = s[VX] + noise_amp[17] * noise[nrow, 17]
        out_vx[k] = vx_n
        out_wz_[k] = 0.0
        out_pitch[k] = pitch_n
        out_height[k] = s[Z]
        for leg in range(4):
            out_contact[k, leg] = 1 if s[FN0 + leg] > 1.0 else 0
        hit = collided(s, p)
        out_collision[k] = 1 if hit else 0
        steps = k + 1

        if not ok:
            status = 2
            break
        if hit:
            status = 1
            break

        # shift history and push the frame we just acted on
        for hh in range(hist_len - 1, 0, -1):
            for i in range(FRAME_DIM):
                hist[hh, i] = hist[hh - 1, i]
        if hist_len > 0:
            for i in range(FRAME_DIM):
                hist[0, i] = frame[i]
        fill_frame(frame, pitch_n, cmd_vx[k + 1], cmd_wz[k + 1], qn, dqn, targets)

    return steps, status
