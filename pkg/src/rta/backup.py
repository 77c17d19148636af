"""Backup maneuvers and backup safe sets.

Fixed wing: a coordinated 180-degree turn at constant altitude.  The
steady turn at roll angle phi* satisfies

    P = 0,  N_z* = 1 / cos(phi*),  psi_dot = (g / V_T) tan(phi*),
    R = V_T^2 / (g tan(phi*))

and the tracking law is

    u_P = sat( K_phi (phibar - phi) ),
    phibar = min{ phi*, K_psi (psi* - psi) }        (mirrored for left turns)
    u_z = sat( (1/cos phi) (1 + K_H (H* - H) - K_theta theta) )

with every command clamped to its saturation box.  The backup set is
"turn complete": h_b = +/-(psi - psi*), evaluated on unwrapped heading.

Quadrotor: regulate velocity to zero inside the box, with a per-axis
inward reference when inside the activation band:

    v_ref_i = 0                 if h_i >= delta_i
              -(delta_i - h_i)  otherwise   (pointing away from the near wall)

tracked by a geometric thrust/attitude law; backup set
h_b = min(eps - |v|, h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .constraints import ConstraintSpec
from .dynamics import FixedWingInput, FixedWingState, QuadParams
from .units import G_STANDARD

# Default completion-window extension: the turn controller aims this far
# past the 180-degree point so the completion threshold is crossed at full
# turn rate instead of being approached asymptotically.
CTRL_OVERSHOOT = 0.7  # rad

PHI_UPRIGHT_MAX = math.pi / 2


@dataclass
class TurnParams:
    """Coordinated-turn backup parameters.

    psi_star is the heading target the control law drives toward; when the
    policy latches an episode it sets psi_star = completion heading plus
    CTRL_OVERSHOOT in the turn direction, while the backup-set threshold
    stays at the completion heading.  Headings are compared without
    wrapping, so callers supply unwrapped psi.
    """

    phi_star: float = math.radians(60.0)
    H_star: float = 0.0
    psi_star: float = 0.0
    direction: str = "right"
    K_phi: float = 3.0
    K_psi: float = 2.0
    K_H: float = 0.008    # per meter of altitude error
    K_theta: float = 6.0
    sat_P: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    sat_z: Tuple[float, float] = (0.2, 4.0)

    def __post_init__(self):
        if not (0.0 < self.phi_star < math.pi / 2):
            raise ValueError("phi_star must lie strictly inside (0, pi/2)")
        if self.direction not in ("right", "left"):
            raise ValueError("direction must be 'right' or 'left'")
        for gain in (self.K_phi, self.K_psi, self.K_H, self.K_theta):
            if gain <= 0:
                raise ValueError("all gains must be positive")
        if not (self.sat_P[0] < self.sat_P[1] and self.sat_z[0] < self.sat_z[1]):
            raise ValueError("saturation bounds must be well-ordered")

    @property
    def dirsign(self) -> float:
        return 1.0 if self.direction == "right" else -1.0

    def pack(self) -> np.ndarray:
        """Parameter vector for the compiled rollout loops."""
        return np.array(
            [
                self.phi_star,
                self.psi_star,
                self.H_star,
                self.K_phi,
                self.K_psi,
                self.K_H,
                self.K_theta,
                self.sat_P[0],
                self.sat_P[1],
                self.sat_z[0],
                self.sat_z[1],
                self.dirsign,
            ]
        )


def turn_equilibrium(phi_star: float, V_T: float, g: float = G_STANDARD):
    """Steady coordinated-turn relations: (N_z*, psi_dot, turn radius)."""
    if not (0.0 < phi_star < math.pi / 2):
        raise ValueError("phi_star must lie strictly inside (0, pi/2)")
    N_z_star = 1.0 / math.cos(phi_star)
    psi_dot = (g / V_T) * math.tan(phi_star)
    R = V_T * V_T / (g * math.tan(phi_star))
    return N_z_star, psi_dot, R


def _state8(x) -> np.ndarray:
    if isinstance(x, FixedWingState):
        return x.as_array()
    return np.asarray(x, dtype=float)


def coordinated_turn_controller(x, tp: TurnParams) -> FixedWingInput:
    """Backup control law for the coordinated altitude-hold turn.

    Raises ValueError if the aircraft is not upright (|phi| >= pi/2); the
    law's feedforward 1/cos(phi) presumes upright flight.
    """
    xa = _state8(x)
    phi, theta, psi, H = xa[0], xa[1], xa[2], xa[5]
    if abs(phi) >= PHI_UPRIGHT_MAX:
        raise ValueError(f"upright assumption violated: |phi| = {abs(phi):.3f} rad")
    d = tp.dirsign
    phibar = d * min(tp.phi_star, tp.K_psi * d * (tp.psi_star - psi))
    u_P = min(max(tp.K_phi * (phibar - phi), tp.sat_P[0]), tp.sat_P[1])
    u_z = (1.0 / math.cos(phi)) * (1.0 + tp.K_H * (tp.H_star - H) - tp.K_theta * theta)
    u_z = min(max(u_z, tp.sat_z[0]), tp.sat_z[1])
    return FixedWingInput(u_P=u_P, u_z=u_z)


def choose_turn_direction(x, fence: ConstraintSpec) -> str:
    """Turn direction whose 180-degree turn-away needs the smaller heading
    change to reach the fence-parallel heading; exact ties go right."""
    if fence.kind != "geofence":
        raise ValueError("turn direction is chosen against a geofence constraint")
    xa = _state8(x)
    psi = xa[2]
    # heading direction and the outward (across-fence) direction, N/E plane
    d_n, d_e = math.cos(psi), math.sin(psi)
    n_g = fence.params["n_g"]
    o_n, o_e = -n_g[0], -n_g[1]
    # compass-positive (clockwise) angle from outward normal to heading
    cross = o_n * d_e - o_e * d_n
    return "right" if cross >= 0.0 else "left"


def turn_backup_set(x, tp: TurnParams) -> float:
    """Signed heading progress past the completion target, in rad.

    Positive once the turn is complete.  x may be a state (its psi field
    must be the episode-unwrapped heading) or a bare unwrapped heading.
    """
    if isinstance(x, (int, float)):
        psi = float(x)
    else:
        psi = _state8(x)[2]
    return tp.dirsign * (psi - tp.psi_star)


def clamp_load_factor(u_z: float, N_z_min: float, N_z_max: float) -> float:
    """Load-factor command clamp; the first-order lag cannot overshoot, so
    clamping the command enforces the state limit."""
    if not N_z_min < N_z_max:
        raise ValueError("load limits must be well-ordered")
    return min(max(u_z, N_z_min), N_z_max)


# ---------------------------------------------------------------------------
# Quadrotor backup
# ---------------------------------------------------------------------------


@dataclass
class QuadBackupParams:
    """Velocity-regulation backup for the position box.

    delta holds per-axis activation margins in the same squared-length
    units as the box constraint; epsilon is the small-velocity threshold
    of the backup set.  Saturations (vr_max, tau_max, M_max, a_h_max) are
    part of the tracking law, which is otherwise free-form.
    """

    box_center: np.ndarray = field(default_factory=lambda: np.zeros(3))
    box_half: np.ndarray = field(default_factory=lambda: np.array([75.0, 75.0, 30.0]))
    delta: np.ndarray = field(default_factory=lambda: np.array([1125.0, 1125.0, 180.0]))
    epsilon: float = 2.0   # m/s
    k_v: float = 4.0       # velocity-error gain
    k_R: float = 8.0       # attitude gain
    k_w: float = 1.0       # rate gain
    vr_max: float = 20.0   # m/s reference-velocity saturation
    tau_max_factor: float = 2.0  # thrust ceiling as a multiple of m g
    M_max: float = 1.0     # N m per axis
    vehicle: QuadParams = field(default_factory=QuadParams)

    def __post_init__(self):
        self.box_center = np.asarray(self.box_center, dtype=float)
        self.box_half = np.asarray(self.box_half, dtype=float)
        self.delta = np.asarray(self.delta, dtype=float)
        if np.any(self.box_half <= 0):
            raise ValueError("box half-lengths must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def box(self) -> np.ndarray:
        return np.concatenate([self.box_center, self.box_half])

    @property
    def tau_max(self) -> float:
        return self.tau_max_factor * self.vehicle.m * self.vehicle.g

    @property
    def a_h_max(self) -> float:
        # horizontal acceleration achievable with thrust ceiling and margin
        r = self.tau_max / self.vehicle.m
        return 0.95 * math.sqrt(max(r * r - self.vehicle.g**2, 1.0))


def quad_box_h(x, qp: QuadBackupParams) -> float:
    """Raw box constraint: min over axes of r_i^2 - (p_i - c_i)^2."""
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    d = xa[0:3] - qp.box_center
    return float(np.min(qp.box_half**2 - d**2))


def quad_backup_vref(x, qp: QuadBackupParams) -> np.ndarray:
    """Per-axis reference velocity of the backup maneuver."""
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    v_ref = np.zeros(3)
    for i in range(3):
        d = xa[i] - qp.box_center[i]
        h_i = qp.box_half[i] ** 2 - d * d
        if h_i < qp.delta[i]:
            mag = min(qp.delta[i] - h_i, qp.vr_max)
            v_ref[i] = -mag if d > 0 else mag
    return v_ref


def quad_backup_controller(x, qp: QuadBackupParams) -> Tuple[float, np.ndarray]:
    """Thrust and moments of the velocity-regulation backup at state x."""
    from . import _kernels

    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    v_ref = quad_backup_vref(xa, qp)
    u = np.empty(4)
    _kernels.quad_track_velocity(
        xa, v_ref, qp.vehicle.m, qp.vehicle.g, qp.vehicle.J,
        qp.k_v, qp.k_R, qp.k_w, qp.tau_max, qp.a_h_max, qp.M_max, u,
    )
    return float(u[0]), u[1:4].copy()


def quad_backup_set(x, qp: QuadBackupParams) -> float:
    """Backup set value min(eps - |v|, h): inside the box at small speed."""
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    speed = float(np.linalg.norm(xa[7:10]))
    return min(qp.epsilon - speed, quad_box_h(xa, qp))
