"""Compiled inner loops for backup rollouts and simulation stepping.

The per-tick safety evaluation integrates a full backup rollout (default
1500 RK4 steps of the 8-state model), so these loops are numba-compiled to
stay inside the real-time budget.  Plain-python reference implementations
of the same math live in dynamics.py / constraints.py / backup.py; tests
cross-check the two routes.

Packed layouts
--------------
Constraint pack (see constraints.pack_constraints):
    kinds:  int64[n]      0 load_min, 1 load_max, 2 alt_floor, 3 alt_ceiling,
                          4 geofence
    params: float64[n,4]  kind-specific (geofence: pgN, pgE, ngN, ngE)
    scales: float64[n]

Turn-controller pack (backup.TurnParams.pack):
    [phi_star, psi_ctrl_target, H_star, K_phi, K_psi, K_H, K_theta,
     satP_lo, satP_hi, satz_lo, satz_hi, dirsign]

Inside a rollout the heading channel x[2] is integrated without wrapping,
so it is the unwrapped heading; callers seed x[2] with their unwrapped
value and wrap afterwards.
"""

import math

import numpy as np
from numba import njit

PHI_CTRL_MAX = math.pi / 2 - 0.02  # roll magnitude used inside the control law
COS_THETA_MIN = 1e-6


# ---------------------------------------------------------------------------
# Fixed-wing
# ---------------------------------------------------------------------------


@njit(cache=True)
def fw_deriv_arr(x, u_P, u_z, V_T, g, tau_P, tau_z, out):
    ct = math.cos(x[1])
    st = math.sin(x[1])
    sp = math.sin(x[0])
    cp = math.cos(x[0])
    out[0] = x[6] + (x[7] * g / V_T) * sp * (st / ct)
    out[1] = (g / V_T) * (x[7] * cp - ct)
    out[2] = x[7] * g * sp / (V_T * ct)
    out[3] = V_T * ct * math.cos(x[2])
    out[4] = V_T * ct * math.sin(x[2])
    out[5] = V_T * st
    out[6] = (u_P - x[6]) / tau_P
    out[7] = (u_z - x[7]) / tau_z


@njit(cache=True)
def fw_turn_u(x, tp):
    """Coordinated-turn backup law on a packed parameter vector."""
    dirsign = tp[11]
    err = tp[1] - x[2]
    phibar = dirsign * min(tp[0], tp[4] * dirsign * err)
    u_P = tp[3] * (phibar - x[0])
    if u_P < tp[7]:
        u_P = tp[7]
    elif u_P > tp[8]:
        u_P = tp[8]
    phi = x[0]
    if phi > PHI_CTRL_MAX:
        phi = PHI_CTRL_MAX
    elif phi < -PHI_CTRL_MAX:
        phi = -PHI_CTRL_MAX
    u_z = (1.0 / math.cos(phi)) * (1.0 + tp[5] * (tp[2] - x[5]) - tp[6] * x[1])
    if u_z < tp[9]:
        u_z = tp[9]
    elif u_z > tp[10]:
        u_z = tp[10]
    return u_P, u_z


@njit(cache=True)
def fw_margins(x, kinds, prm, scales, V_T, eps_v, ttc_max, out):
    """Normalized margin of every constraint at state x; returns (min, argmin)."""
    hmin = 1e300
    arg = -1
    for i in range(kinds.shape[0]):
        k = kinds[i]
        if k == 0:
            m = (x[7] - prm[i, 0]) / scales[i]
        elif k == 1:
            m = (prm[i, 0] - x[7]) / scales[i]
        elif k == 2:
            m = (x[5] - prm[i, 0]) / scales[i]
        elif k == 3:
            m = (prm[i, 0] - x[5]) / scales[i]
        else:
            raw = prm[i, 2] * (x[3] - prm[i, 0]) + prm[i, 3] * (x[4] - prm[i, 1])
            closing = -V_T * math.cos(x[1]) * (
                math.cos(x[2]) * prm[i, 2] + math.sin(x[2]) * prm[i, 3]
            )
            d = closing if closing > eps_v else eps_v
            ttc = raw / d
            if ttc > ttc_max:
                ttc = ttc_max
            m = raw / scales[i]
            if ttc < m:
                m = ttc
        out[i] = m
        if m < hmin:
            hmin = m
            arg = i
    return hmin, arg


@njit(cache=True)
def _fw_cl_deriv(x, tp, V_T, g, tau_P, tau_z, out):
    """Closed-loop derivative under the turn law, trig shared between the
    controller and the model (same expressions as fw_turn_u/fw_deriv_arr)."""
    ct = math.cos(x[1])
    st = math.sin(x[1])
    sp = math.sin(x[0])
    cp = math.cos(x[0])
    # controller
    dirsign = tp[11]
    err = tp[1] - x[2]
    phibar = dirsign * min(tp[0], tp[4] * dirsign * err)
    u_P = tp[3] * (phibar - x[0])
    if u_P < tp[7]:
        u_P = tp[7]
    elif u_P > tp[8]:
        u_P = tp[8]
    if x[0] > PHI_CTRL_MAX:
        cpc = math.cos(PHI_CTRL_MAX)
    elif x[0] < -PHI_CTRL_MAX:
        cpc = math.cos(-PHI_CTRL_MAX)
    else:
        cpc = cp
    u_z = (1.0 / cpc) * (1.0 + tp[5] * (tp[2] - x[5]) - tp[6] * x[1])
    if u_z < tp[9]:
        u_z = tp[9]
    elif u_z > tp[10]:
        u_z = tp[10]
    # model
    out[0] = x[6] + (x[7] * g / V_T) * sp * (st / ct)
    out[1] = (g / V_T) * (x[7] * cp - ct)
    out[2] = x[7] * g * sp / (V_T * ct)
    out[3] = V_T * ct * math.cos(x[2])
    out[4] = V_T * ct * math.sin(x[2])
    out[5] = V_T * st
    out[6] = (u_P - x[6]) / tau_P
    out[7] = (u_z - x[7]) / tau_z


@njit(cache=True)
def fw_domain_ok(x):
    for j in range(8):
        if not math.isfinite(x[j]):
            return False
    return abs(x[1]) < math.pi / 2 - COS_THETA_MIN


@njit(cache=True)
def fw_backup_rollout(
    x0,
    tp,
    kinds,
    prm,
    scales,
    V_T,
    g,
    tau_P,
    tau_z,
    n_steps,
    dt,
    eps_v,
    ttc_max,
    states_out,
    want_states,
):
    """Closed-loop backup rollout with constraint sampling at every step.

    x0[2] must carry the unwrapped heading.  Returns
    (h_path_min, argmin_constraint, psi_terminal, ok) where ok = False means
    the trajectory left the model domain (the partial minimum is returned).
    """
    x = x0.copy()
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    xs = np.empty(8)
    hvals = np.empty(kinds.shape[0])

    if want_states:
        states_out[0] = x
    h_path, arg_path = fw_margins(x, kinds, prm, scales, V_T, eps_v, ttc_max, hvals)

    for k in range(n_steps):
        _fw_cl_deriv(x, tp, V_T, g, tau_P, tau_z, k1)
        for j in range(8):
            xs[j] = x[j] + 0.5 * dt * k1[j]
        _fw_cl_deriv(xs, tp, V_T, g, tau_P, tau_z, k2)
        for j in range(8):
            xs[j] = x[j] + 0.5 * dt * k2[j]
        _fw_cl_deriv(xs, tp, V_T, g, tau_P, tau_z, k3)
        for j in range(8):
            xs[j] = x[j] + dt * k3[j]
        _fw_cl_deriv(xs, tp, V_T, g, tau_P, tau_z, k4)
        for j in range(8):
            x[j] += (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        if not fw_domain_ok(x):
            return h_path, arg_path, x[2], False
        if want_states:
            states_out[k + 1] = x
        h, arg = fw_margins(x, kinds, prm, scales, V_T, eps_v, ttc_max, hvals)
        if h < h_path:
            h_path = h
            arg_path = arg
    return h_path, arg_path, x[2], True


@njit(cache=True)
def fw_rk4_step(x, u_P, u_z, V_T, g, tau_P, tau_z, dt):
    """One RK4 step of the fixed-wing model under constant input (no wrap)."""
    k1 = np.empty(8)
    k2 = np.empty(8)
    k3 = np.empty(8)
    k4 = np.empty(8)
    xs = np.empty(8)
    fw_deriv_arr(x, u_P, u_z, V_T, g, tau_P, tau_z, k1)
    for j in range(8):
        xs[j] = x[j] + 0.5 * dt * k1[j]
    fw_deriv_arr(xs, u_P, u_z, V_T, g, tau_P, tau_z, k2)
    for j in range(8):
        xs[j] = x[j] + 0.5 * dt * k2[j]
    fw_deriv_arr(xs, u_P, u_z, V_T, g, tau_P, tau_z, k3)
    for j in range(8):
        xs[j] = x[j] + dt * k3[j]
    fw_deriv_arr(xs, u_P, u_z, V_T, g, tau_P, tau_z, k4)
    out = np.empty(8)
    for j in range(8):
        out[j] = x[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    return out


# ---------------------------------------------------------------------------
# Quadrotor
# ---------------------------------------------------------------------------


@njit(cache=True)
def _quat_rot(q, out):
    """Rotation matrix of a scalar-first quaternion, written into out (3x3)."""
    qw, qx, qy, qz = q[0], q[1], q[2], q[3]
    out[0, 0] = 1.0 - 2.0 * (qy * qy + qz * qz)
    out[0, 1] = 2.0 * (qx * qy - qw * qz)
    out[0, 2] = 2.0 * (qx * qz + qw * qy)
    out[1, 0] = 2.0 * (qx * qy + qw * qz)
    out[1, 1] = 1.0 - 2.0 * (qx * qx + qz * qz)
    out[1, 2] = 2.0 * (qy * qz - qw * qx)
    out[2, 0] = 2.0 * (qx * qz - qw * qy)
    out[2, 1] = 2.0 * (qy * qz + qw * qx)
    out[2, 2] = 1.0 - 2.0 * (qx * qx + qy * qy)


@njit(cache=True)
def quad_deriv_arr(x, u, m, g, J, J_inv, out):
    # p_dot
    out[0] = x[7]
    out[1] = x[8]
    out[2] = x[9]
    # q_dot = 0.5 q (x) (0, w)
    qw, qx, qy, qz = x[3], x[4], x[5], x[6]
    wx, wy, wz = x[10], x[11], x[12]
    out[3] = 0.5 * (-qx * wx - qy * wy - qz * wz)
    out[4] = 0.5 * (qw * wx + qy * wz - qz * wy)
    out[5] = 0.5 * (qw * wy - qx * wz + qz * wx)
    out[6] = 0.5 * (qw * wz + qx * wy - qy * wx)
    # v_dot = -g e_z + (tau/m) R e_z
    tau = u[0]
    rz0 = 2.0 * (qx * qz + qw * qy)
    rz1 = 2.0 * (qy * qz - qw * qx)
    rz2 = 1.0 - 2.0 * (qx * qx + qy * qy)
    out[7] = (tau / m) * rz0
    out[8] = (tau / m) * rz1
    out[9] = (tau / m) * rz2 - g
    # w_dot = J_inv (M - w x J w)
    Jw0 = J[0, 0] * wx + J[0, 1] * wy + J[0, 2] * wz
    Jw1 = J[1, 0] * wx + J[1, 1] * wy + J[1, 2] * wz
    Jw2 = J[2, 0] * wx + J[2, 1] * wy + J[2, 2] * wz
    c0 = wy * Jw2 - wz * Jw1
    c1 = wz * Jw0 - wx * Jw2
    c2 = wx * Jw1 - wy * Jw0
    m0 = u[1] - c0
    m1 = u[2] - c1
    m2 = u[3] - c2
    out[10] = J_inv[0, 0] * m0 + J_inv[0, 1] * m1 + J_inv[0, 2] * m2
    out[11] = J_inv[1, 0] * m0 + J_inv[1, 1] * m1 + J_inv[1, 2] * m2
    out[12] = J_inv[2, 0] * m0 + J_inv[2, 1] * m1 + J_inv[2, 2] * m2


@njit(cache=True)
def quad_track_velocity(x, v_ref, m, g, J, kv, kR, kw, tau_max, a_h_max, M_max, out_u):
    """Geometric velocity-tracking law: thrust along current body z toward the
    acceleration that drives v -> v_ref, attitude driven to align body z with
    that acceleration.  Thrust and moments are saturated."""
    # commanded specific force (world frame), gravity compensated
    ax = kv * (v_ref[0] - x[7])
    ay = kv * (v_ref[1] - x[8])
    az = kv * (v_ref[2] - x[9]) + g
    # cap horizontal demand so the tilt stays achievable under tau_max
    ah = math.sqrt(ax * ax + ay * ay)
    if ah > a_h_max:
        ax *= a_h_max / ah
        ay *= a_h_max / ah
    if az < 1.0:  # keep the demanded force upward-pointing
        az = 1.0
    an = math.sqrt(ax * ax + ay * ay + az * az)
    amax = tau_max / m
    if an > amax:
        ax *= amax / an
        ay *= amax / an
        az *= amax / an
        an = amax

    R = np.empty((3, 3))
    _quat_rot(x[3:7], R)
    # thrust: projection of the demanded force onto the current body z
    tau = m * (ax * R[0, 2] + ay * R[1, 2] + az * R[2, 2])
    if tau < 0.0:
        tau = 0.0
    elif tau > tau_max:
        tau = tau_max

    # desired frame: b3 along demand, b2 = normalize(b3 x e1), b1 = b2 x b3
    # (b3 never degenerates toward e1 because az is floored above)
    b3x, b3y, b3z = ax / an, ay / an, az / an
    b2x = 0.0
    b2y = b3z
    b2z = -b3y
    bn = math.sqrt(b2x * b2x + b2y * b2y + b2z * b2z)
    if bn < 1e-9:
        b2x, b2y, b2z = 0.0, 1.0, 0.0
        bn = 1.0
    b2x /= bn
    b2y /= bn
    b2z /= bn
    b1x = b2y * b3z - b2z * b3y
    b1y = b2z * b3x - b2x * b3z
    b1z = b2x * b3y - b2y * b3x

    # attitude error e_R = 0.5 vee(Rd^T R - R^T Rd)
    # Rd columns: b1, b2, b3
    m00 = b1x * R[0, 0] + b1y * R[1, 0] + b1z * R[2, 0]
    m01 = b1x * R[0, 1] + b1y * R[1, 1] + b1z * R[2, 1]
    m02 = b1x * R[0, 2] + b1y * R[1, 2] + b1z * R[2, 2]
    m10 = b2x * R[0, 0] + b2y * R[1, 0] + b2z * R[2, 0]
    m11 = b2x * R[0, 1] + b2y * R[1, 1] + b2z * R[2, 1]
    m12 = b2x * R[0, 2] + b2y * R[1, 2] + b2z * R[2, 2]
    m20 = b3x * R[0, 0] + b3y * R[1, 0] + b3z * R[2, 0]
    m21 = b3x * R[0, 1] + b3y * R[1, 1] + b3z * R[2, 1]
    m22 = b3x * R[0, 2] + b3y * R[1, 2] + b3z * R[2, 2]
    eR0 = 0.5 * (m21 - m12)
    eR1 = 0.5 * (m02 - m20)
    eR2 = 0.5 * (m10 - m01)

    wx, wy, wz = x[10], x[11], x[12]
    Jw0 = J[0, 0] * wx + J[0, 1] * wy + J[0, 2] * wz
    Jw1 = J[1, 0] * wx + J[1, 1] * wy + J[1, 2] * wz
    Jw2 = J[2, 0] * wx + J[2, 1] * wy + J[2, 2] * wz
    M0 = -kR * eR0 - kw * wx + (wy * Jw2 - wz * Jw1)
    M1 = -kR * eR1 - kw * wy + (wz * Jw0 - wx * Jw2)
    M2 = -kR * eR2 - kw * wz + (wx * Jw1 - wy * Jw0)
    if M0 > M_max:
        M0 = M_max
    elif M0 < -M_max:
        M0 = -M_max
    if M1 > M_max:
        M1 = M_max
    elif M1 < -M_max:
        M1 = -M_max
    if M2 > M_max:
        M2 = M_max
    elif M2 < -M_max:
        M2 = -M_max

    out_u[0] = tau
    out_u[1] = M0
    out_u[2] = M1
    out_u[3] = M2


@njit(cache=True)
def quad_backup_vref(x, box, delta, vr_max, out_v):
    """Per-axis reference velocity: zero in the interior, inward retreat with
    magnitude (delta_i - h_i) when inside the activation band (saturated)."""
    for i in range(3):
        d = x[i] - box[i]
        h_i = box[3 + i] * box[3 + i] - d * d
        if h_i >= delta[i]:
            out_v[i] = 0.0
        else:
            mag = delta[i] - h_i
            if mag > vr_max:
                mag = vr_max
            out_v[i] = -mag if d > 0.0 else mag


@njit(cache=True)
def quad_margins(x, box, scales, out):
    """Normalized box margins per axis; returns (min, argmin)."""
    hmin = 1e300
    arg = -1
    for i in range(3):
        d = x[i] - box[i]
        m = (box[3 + i] * box[3 + i] - d * d) / scales[i]
        out[i] = m
        if m < hmin:
            hmin = m
            arg = i
    return hmin, arg


@njit(cache=True)
def quad_backup_set_margin(x, box, scales, eps):
    """min of the normalized speed margin (eps - |v|)/eps and box margins."""
    sp = math.sqrt(x[7] * x[7] + x[8] * x[8] + x[9] * x[9])
    hb = (eps - sp) / eps
    tmp = np.empty(3)
    h, _ = quad_margins(x, box, scales, tmp)
    if h < hb:
        hb = h
    return hb


@njit(cache=True)
def _quad_renorm(x):
    n = math.sqrt(x[3] * x[3] + x[4] * x[4] + x[5] * x[5] + x[6] * x[6])
    if n > 0.0:
        x[3] /= n
        x[4] /= n
        x[5] /= n
        x[6] /= n


@njit(cache=True)
def _quad_cl_deriv(x, m, g, J, J_inv, box, delta, vr_max, kv, kR, kw, tau_max, a_h_max, M_max, u_tmp, v_tmp, out):
    quad_backup_vref(x, box, delta, vr_max, v_tmp)
    quad_track_velocity(x, v_tmp, m, g, J, kv, kR, kw, tau_max, a_h_max, M_max, u_tmp)
    quad_deriv_arr(x, u_tmp, m, g, J, J_inv, out)


@njit(cache=True)
def quad_backup_rollout(
    x0, m, g, J, J_inv, box, delta, scales, eps, vr_max, kv, kR, kw,
    tau_max, a_h_max, M_max, n_steps, dt, states_out, want_states,
):
    """Closed-loop rollout under the velocity-regulation backup.

    Returns (h_path_min, argmin_axis, h_b_terminal, ok).
    """
    x = x0.copy()
    k1 = np.empty(13)
    k2 = np.empty(13)
    k3 = np.empty(13)
    k4 = np.empty(13)
    xs = np.empty(13)
    u_tmp = np.empty(4)
    v_tmp = np.empty(3)
    hv = np.empty(3)

    if want_states:
        states_out[0] = x
    h_path, arg_path = quad_margins(x, box, scales, hv)

    for k in range(n_steps):
        _quad_cl_deriv(x, m, g, J, J_inv, box, delta, vr_max, kv, kR, kw, tau_max, a_h_max, M_max, u_tmp, v_tmp, k1)
        for j in range(13):
            xs[j] = x[j] + 0.5 * dt * k1[j]
        _quad_cl_deriv(xs, m, g, J, J_inv, box, delta, vr_max, kv, kR, kw, tau_max, a_h_max, M_max, u_tmp, v_tmp, k2)
        for j in range(13):
            xs[j] = x[j] + 0.5 * dt * k2[j]
        _quad_cl_deriv(xs, m, g, J, J_inv, box, delta, vr_max, kv, kR, kw, tau_max, a_h_max, M_max, u_tmp, v_tmp, k3)
        for j in range(13):
            xs[j] = x[j] + dt * k3[j]
        _quad_cl_deriv(xs, m, g, J, J_inv, box, delta, vr_max, kv, kR, kw, tau_max, a_h_max, M_max, u_tmp, v_tmp, k4)
        for j in range(13):
            x[j] += (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        _quad_renorm(x)
        for j in range(13):
            if not math.isfinite(x[j]):
                return h_path, arg_path, -1.0, False
        if want_states:
            states_out[k + 1] = x
        h, arg = quad_margins(x, box, scales, hv)
        if h < h_path:
            h_path = h
            arg_path = arg
    hb = quad_backup_set_margin(x, box, scales, eps)
    return h_path, arg_path, hb, True


@njit(cache=True)
def quad_rk4_step(x, u, m, g, J, J_inv, dt):
    """One RK4 step of the quadrotor under constant input, with renormalize."""
    k1 = np.empty(13)
    k2 = np.empty(13)
    k3 = np.empty(13)
    k4 = np.empty(13)
    xs = np.empty(13)
    quad_deriv_arr(x, u, m, g, J, J_inv, k1)
    for j in range(13):
        xs[j] = x[j] + 0.5 * dt * k1[j]
    quad_deriv_arr(xs, u, m, g, J, J_inv, k2)
    for j in range(13):
        xs[j] = x[j] + 0.5 * dt * k2[j]
    quad_deriv_arr(xs, u, m, g, J, J_inv, k3)
    for j in range(13):
        xs[j] = x[j] + dt * k3[j]
    quad_deriv_arr(xs, u, m, g, J, J_inv, k4)
    out = np.empty(13)
    for j in range(13):
        out[j] = x[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    _quad_renorm(out)
    return out
