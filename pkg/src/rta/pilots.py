"""Scripted adversarial pilot models.

Each scenario drives the aircraft with a deterministic piecewise command
law: steps, pitch-tracking ramps, and state-feedback assault laws (bank
toward the fence, hold a bank angle).  Pilot inputs from the flight tests
are not published, so these scripts reproduce the described behavior
classes, not recorded stick traces.

A pilot law maps (state, time, context) to the desired input vector of
its model (fixed wing: [u_P_d, u_z_d]; quadrotor: [tau_d, M_d]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from . import _kernels


@dataclass
class PilotContext:
    """What a pilot law may look at besides the state: model parameters and
    the geofence geometry (to aim at or bank toward the fence)."""

    model: object
    fence_p_g: Optional[np.ndarray] = None
    fence_n_g: Optional[np.ndarray] = None
    quad_backup: Optional[object] = None  # QuadBackupParams for tracking laws


@dataclass
class PilotPhase:
    t0: float
    t1: float
    law: str
    params: Dict[str, float] = field(default_factory=dict)


class PilotScript:
    """Ordered, non-overlapping phases covering the scenario duration."""

    def __init__(self, name: str, phases: List[PilotPhase]):
        if not phases:
            raise ValueError("pilot script needs at least one phase")
        for a, b in zip(phases, phases[1:]):
            if b.t0 != a.t1:
                raise ValueError(
                    f"pilot phases must be contiguous: phase ending {a.t1} "
                    f"followed by phase starting {b.t0}"
                )
        if phases[0].t0 != 0.0:
            raise ValueError("first pilot phase must start at t = 0")
        for ph in phases:
            if ph.law not in LAWS:
                raise ValueError(f"unknown pilot law {ph.law!r}")
            if ph.t1 <= ph.t0:
                raise ValueError("phase end must exceed phase start")
        self.name = name
        self.phases = phases

    @property
    def t_end(self) -> float:
        return self.phases[-1].t1

    def covers(self, duration: float) -> bool:
        return self.t_end >= duration - 1e-9

    def command(self, x: np.ndarray, t: float, ctx: PilotContext) -> np.ndarray:
        for ph in self.phases:
            if ph.t0 <= t < ph.t1 or (ph is self.phases[-1] and t >= ph.t0):
                return LAWS[ph.law](x, t - ph.t0, ph.params, ctx)
        return LAWS[self.phases[0].law](x, 0.0, self.phases[0].params, ctx)


# ---------------------------------------------------------------------------
# Fixed-wing laws
# ---------------------------------------------------------------------------


def _law_trim(x, t, p, ctx):
    return np.array([0.0, 1.0])


def _law_const(x, t, p, ctx):
    return np.array([p.get("u_P", 0.0), p.get("u_z", 1.0)])


def _law_nz_step(x, t, p, ctx):
    """Constant load-factor request, wings held level."""
    u_P = -p.get("K_roll", 2.0) * x[0]
    return np.array([u_P, p["u_z"]])


def _law_pitch_track(x, t, p, ctx):
    """Track a target pitch angle with the load-factor channel, wings level.

    Inverts theta_dot = (g/V)(N_z cos(phi) - cos(theta)) for the N_z that
    yields theta_dot = K (theta_target - theta).
    """
    prm = ctx.model.params
    theta_t = p["theta"]
    K = p.get("K", 0.6)
    cphi = max(math.cos(x[0]), 0.2)
    u_z = (math.cos(x[1]) + (prm.V_T / prm.g) * K * (theta_t - x[1])) / cphi
    u_P = -p.get("K_roll", 2.0) * x[0]
    return np.array([u_P, u_z])


def _toward_fence_sign(x, ctx) -> float:
    """Roll direction that swings the heading toward the fence (compass
    sense: +1 right/clockwise)."""
    o_n, o_e = -ctx.fence_n_g[0], -ctx.fence_n_g[1]  # across-fence direction
    d_n, d_e = math.cos(x[2]), math.sin(x[2])
    cross = d_n * o_e - d_e * o_n  # > 0: fence direction is clockwise of nose
    return 1.0 if cross >= 0.0 else -1.0


def _law_bank_toward_fence(x, t, p, ctx):
    """Hold a bank toward (phi > 0) or away from (phi < 0) the geofence.

    The load channel defaults to the coordinated value; a "theta" param
    switches it to pitch tracking so sustained phases hold a climb or
    descent angle instead of drifting.
    """
    if ctx.fence_n_g is None:
        raise ValueError("bank_toward_fence needs a geofence in the safety spec")
    phi_t = _toward_fence_sign(x, ctx) * p.get("phi", math.radians(45.0))
    u_P = p.get("K_roll", 2.0) * (phi_t - x[0])
    if "theta" in p:
        prm = ctx.model.params
        K = p.get("K", 0.6)
        cphi = max(math.cos(x[0]), 0.2)
        u_z = (math.cos(x[1]) + (prm.V_T / prm.g) * K * (p["theta"] - x[1])) / cphi
    else:
        u_z = p.get("u_z", 1.0 / max(math.cos(x[0]), 0.5))
    return np.array([u_P, u_z])


def _law_bank_hold(x, t, p, ctx):
    """Hold a signed bank angle, coordinated load factor."""
    phi_t = p["phi"]
    u_P = p.get("K_roll", 2.0) * (phi_t - x[0])
    u_z = p.get("u_z", 1.0 / max(math.cos(x[0]), 0.5))
    return np.array([u_P, u_z])


def _law_bank_hold_pitch(x, t, p, ctx):
    """Hold a bank angle while tracking a pitch target (dive/climb at an
    angle while turning)."""
    prm = ctx.model.params
    phi_t = p["phi"]
    theta_t = p.get("theta", 0.0)
    K = p.get("K", 0.6)
    u_P = p.get("K_roll", 2.0) * (phi_t - x[0])
    cphi = max(math.cos(x[0]), 0.2)
    u_z = (math.cos(x[1]) + (prm.V_T / prm.g) * K * (theta_t - x[1])) / cphi
    return np.array([u_P, u_z])


def _law_bank_hold_pitch_toward(x, t, p, ctx):
    """Bank toward the fence while tracking a pitch target (hard turn-in
    with the nose down: the second-assault law)."""
    if ctx.fence_n_g is None:
        raise ValueError("bank_hold_pitch_toward needs a geofence in the safety spec")
    q = dict(p)
    q["phi"] = _toward_fence_sign(x, ctx) * p.get("phi", math.radians(45.0))
    return _law_bank_hold_pitch(x, t, q, ctx)


# ---------------------------------------------------------------------------
# Simplified-model laws (input is the scalar u_z)
# ---------------------------------------------------------------------------


def _law_s_trim(x, t, p, ctx):
    return np.array([1.0])


def _law_s_nz_step(x, t, p, ctx):
    return np.array([p["u_z"]])


# ---------------------------------------------------------------------------
# Quadrotor laws
# ---------------------------------------------------------------------------


def _law_quad_track(x, t, p, ctx):
    """Track a constant velocity with the same geometric law the backup
    uses; this is the 'pilot keeps pushing' input."""
    qp = ctx.quad_backup
    v_ref = np.array([p.get("vx", 0.0), p.get("vy", 0.0), p.get("vz", 0.0)])
    u = np.empty(4)
    _kernels.quad_track_velocity(
        np.asarray(x, dtype=float), v_ref, qp.vehicle.m, qp.vehicle.g, qp.vehicle.J,
        qp.k_v, qp.k_R, qp.k_w, qp.tau_max, qp.a_h_max, qp.M_max, u,
    )
    return u


def _law_quad_hover(x, t, p, ctx):
    return _law_quad_track(x, t, {"vx": 0.0, "vy": 0.0, "vz": 0.0}, ctx)


LAWS: Dict[str, Callable] = {
    "trim": _law_trim,
    "const": _law_const,
    "nz_step": _law_nz_step,
    "pitch_track": _law_pitch_track,
    "bank_toward_fence": _law_bank_toward_fence,
    "bank_hold": _law_bank_hold,
    "bank_hold_pitch": _law_bank_hold_pitch,
    "bank_hold_pitch_toward": _law_bank_hold_pitch_toward,
    "s_trim": _law_s_trim,
    "s_nz_step": _law_s_nz_step,
    "quad_track": _law_quad_track,
    "quad_hover": _law_quad_hover,
}
