"""Continuous-time aircraft models and fixed-step integration.

Fixed-wing point-mass model (8 states), used for all manned-aircraft
scenarios.  Roll and load-factor responses are first-order lags; angle of
attack and sideslip are zero; airspeed V_T is a constant parameter.

    phi_dot   = P + (N_z g / V_T) sin(phi) tan(theta)
    theta_dot = (g / V_T) (N_z cos(phi) - cos(theta))
    psi_dot   = N_z g sin(phi) / (V_T cos(theta))
    pN_dot    = V_T cos(theta) cos(psi)
    pE_dot    = V_T cos(theta) sin(psi)
    H_dot     = V_T sin(theta)
    P_dot     = (u_P - P) / tau_P
    Nz_dot    = (u_z - N_z) / tau_z

Wings-level restriction (phi = 0) gives the 3-state altitude/pitch model:

    H_dot     = V_T sin(theta)
    theta_dot = (g / V_T) (N_z - cos(theta))
    Nz_dot    = (u_z - N_z) / tau_z

Quadrotor rigid body (13 states, scalar-first unit quaternion):

    p_dot     = v
    q_dot     = (1/2) q (x) (0, omega)
    v_dot     = -g e_z + (tau / m) R(q) e_z
    omega_dot = J^-1 (M - omega x J omega)

State array layouts (the whole package uses these orderings):

    fixed_wing: [phi, theta, psi, p_n, p_e, H, P, N_z]
    simplified: [H, theta, N_z]
    quadrotor:  [px, py, pz, qw, qx, qy, qz, vx, vy, vz, wx, wy, wz]

All derivative evaluations are pure functions of their arguments and safe
to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .units import G_STANDARD, wrap_pi

COS_THETA_MIN = 1e-6  # pitch singularity guard: model invalid at cos(theta) = 0


class PitchSingularityError(ValueError):
    """Raised when |cos(theta)| falls below the validity threshold."""


class DomainExitError(RuntimeError):
    """A trajectory left the model's valid domain (singularity or non-finite)."""


# ---------------------------------------------------------------------------
# Parameter and state containers
# ---------------------------------------------------------------------------


@dataclass
class FixedWingParams:
    """Fixed-wing model constants. V_T is held constant per scenario."""

    V_T: float = 150.0     # true airspeed, m/s
    g: float = G_STANDARD  # m/s^2
    tau_P: float = 0.3     # roll-mode time constant, s
    tau_z: float = 0.5     # load-factor time constant, s

    def __post_init__(self):
        if not (self.V_T > 0 and self.tau_P > 0 and self.tau_z > 0):
            raise ValueError("V_T, tau_P, tau_z must all be positive")


@dataclass
class FixedWingState:
    phi: float = 0.0    # roll, rad
    theta: float = 0.0  # pitch, rad
    psi: float = 0.0    # yaw, rad, wrapped to (-pi, pi]
    p_n: float = 0.0    # north, m
    p_e: float = 0.0    # east, m
    H: float = 0.0      # altitude, m
    P: float = 0.0      # roll rate, rad/s
    N_z: float = 1.0    # load factor, g

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise ValueError("fixed-wing state must be finite")
        if abs(self.theta) >= math.pi / 2:
            raise PitchSingularityError(f"|theta| must be < pi/2, got {self.theta}")
        self.psi = wrap_pi(self.psi)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.phi, self.theta, self.psi, self.p_n, self.p_e, self.H, self.P, self.N_z]
        )

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "FixedWingState":
        return cls(*[float(v) for v in x])


@dataclass
class FixedWingInput:
    u_P: float = 0.0  # commanded roll rate, rad/s
    u_z: float = 1.0  # commanded load factor, g

    def as_array(self) -> np.ndarray:
        return np.array([self.u_P, self.u_z])


@dataclass
class SimplifiedState:
    """Altitude/pitch slice of the fixed-wing model (phi = 0, P = 0)."""

    H: float = 0.0
    theta: float = 0.0
    N_z: float = 1.0

    def __post_init__(self):
        if abs(self.theta) >= math.pi / 2:
            raise PitchSingularityError(f"|theta| must be < pi/2, got {self.theta}")

    def as_array(self) -> np.ndarray:
        return np.array([self.H, self.theta, self.N_z])

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "SimplifiedState":
        return cls(*[float(v) for v in x])


@dataclass
class QuadParams:
    m: float = 1.3                                   # kg
    J: np.ndarray = field(
        default_factory=lambda: np.diag([0.011, 0.012, 0.021])
    )                                                # kg m^2, body frame
    g: float = G_STANDARD

    def __post_init__(self):
        self.J = np.asarray(self.J, dtype=float)
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if self.J.shape != (3, 3) or not np.allclose(self.J, self.J.T):
            raise ValueError("inertia matrix must be symmetric 3x3")
        if np.any(np.linalg.eigvalsh(self.J) <= 0):
            raise ValueError("inertia matrix must be positive-definite")
        self.J_inv = np.linalg.inv(self.J)


@dataclass
class QuadState:
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    q: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)
        if abs(np.linalg.norm(self.q) - 1.0) > 1e-9:
            raise ValueError("quaternion must be unit norm within 1e-9")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.q, self.v, self.omega])

    @classmethod
    def from_array(cls, x: Sequence[float]) -> "QuadState":
        x = np.asarray(x, dtype=float)
        return cls(p=x[0:3], q=x[3:7], v=x[7:10], omega=x[10:13])


@dataclass
class RolloutResult:
    """Sampled closed-loop flow over [0, T]."""

    times: np.ndarray   # (n,), strictly increasing, times[0] = 0, times[-1] = T
    states: np.ndarray  # (n, state_dim)

    @property
    def terminal_state(self) -> np.ndarray:
        return self.states[-1]


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


def _as_array(x, cls) -> np.ndarray:
    if isinstance(x, cls):
        return x.as_array()
    return np.asarray(x, dtype=float)


def fixed_wing_deriv(x, u, p: FixedWingParams) -> np.ndarray:
    """Right-hand side of the 8-state fixed-wing model.

    Accepts a FixedWingState/FixedWingInput or bare arrays in the layouts
    documented above.  Raises PitchSingularityError near cos(theta) = 0.
    """
    xa = _as_array(x, FixedWingState)
    ua = _as_array(u, FixedWingInput)
    phi, theta, psi, _, _, _, P, N_z = xa
    u_P, u_z = ua
    ct = math.cos(theta)
    if abs(ct) < COS_THETA_MIN:
        raise PitchSingularityError(f"cos(theta) = {ct:.2e} below validity threshold")
    st, sp, cp = math.sin(theta), math.sin(phi), math.cos(phi)
    return np.array(
        [
            P + (N_z * p.g / p.V_T) * sp * (st / ct),
            (p.g / p.V_T) * (N_z * cp - ct),
            N_z * p.g * sp / (p.V_T * ct),
            p.V_T * ct * math.cos(psi),
            p.V_T * ct * math.sin(psi),
            p.V_T * st,
            (u_P - P) / p.tau_P,
            (u_z - N_z) / p.tau_z,
        ]
    )


def simplified_deriv(x, u_z: float, p: FixedWingParams) -> np.ndarray:
    """Right-hand side of the 3-state altitude/pitch model."""
    xa = _as_array(x, SimplifiedState)
    H, theta, N_z = xa
    ct = math.cos(theta)
    if abs(ct) < COS_THETA_MIN:
        raise PitchSingularityError(f"cos(theta) = {ct:.2e} below validity threshold")
    return np.array(
        [
            p.V_T * math.sin(theta),
            (p.g / p.V_T) * (N_z - ct),
            (u_z - N_z) / p.tau_z,
        ]
    )


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of scalar-first quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_rotate_ez(q: np.ndarray) -> np.ndarray:
    """Third column of R(q): the body z axis expressed in the world frame."""
    qw, qx, qy, qz = q
    return np.array(
        [
            2.0 * (qx * qz + qw * qy),
            2.0 * (qy * qz - qw * qx),
            1.0 - 2.0 * (qx * qx + qy * qy),
        ]
    )


def quad_deriv(x, u, p: QuadParams) -> np.ndarray:
    """Right-hand side of the 13-state quadrotor model.

    u = [tau, Mx, My, Mz]: collective thrust along body z plus body moments.
    """
    xa = _as_array(x, QuadState)
    ua = np.asarray(u, dtype=float)
    q = xa[3:7]
    v = xa[7:10]
    w = xa[10:13]
    tau, M = ua[0], ua[1:4]
    q_dot = 0.5 * quat_mul(q, np.array([0.0, w[0], w[1], w[2]]))
    v_dot = np.array([0.0, 0.0, -p.g]) + (tau / p.m) * quat_rotate_ez(q)
    w_dot = p.J_inv @ (M - np.cross(w, p.J @ w))
    return np.concatenate([v, q_dot, v_dot, w_dot])


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def integrate_step(
    deriv_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    x: np.ndarray,
    u,
    dt: float,
    post_step: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Classical RK4 advance of x by dt under constant input u.

    post_step applies model-specific fixups (quaternion renormalization,
    yaw re-wrap) after the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = np.asarray(x, dtype=float)
    k1 = deriv_fn(x, u)
    k2 = deriv_fn(x + 0.5 * dt * k1, u)
    k3 = deriv_fn(x + 0.5 * dt * k2, u)
    k4 = deriv_fn(x + dt * k3, u)
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if post_step is not None:
        x_next = post_step(x_next)
    return x_next


# ---------------------------------------------------------------------------
# Model wrappers used by the rollout engine and scenario harness
# ---------------------------------------------------------------------------


class FixedWingModel:
    kind = "fixed_wing"
    state_dim = 8
    input_dim = 2
    state_names = ("phi", "theta", "psi", "p_n", "p_e", "H", "P", "N_z")
    input_names = ("u_P", "u_z")

    def __init__(self, params: Optional[FixedWingParams] = None):
        self.params = params or FixedWingParams()

    def deriv(self, x: np.ndarray, u) -> np.ndarray:
        return fixed_wing_deriv(x, u, self.params)

    def post_step(self, x: np.ndarray) -> np.ndarray:
        x[2] = wrap_pi(x[2])
        return x

    def domain_ok(self, x: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(x)) and abs(x[1]) < math.pi / 2 - COS_THETA_MIN)


class SimplifiedModel:
    kind = "simplified"
    state_dim = 3
    input_dim = 1
    state_names = ("H", "theta", "N_z")
    input_names = ("u_z",)

    def __init__(self, params: Optional[FixedWingParams] = None):
        self.params = params or FixedWingParams()

    def deriv(self, x: np.ndarray, u) -> np.ndarray:
        u_z = float(np.atleast_1d(u)[0])
        return simplified_deriv(x, u_z, self.params)

    def post_step(self, x: np.ndarray) -> np.ndarray:
        return x

    def domain_ok(self, x: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(x)) and abs(x[1]) < math.pi / 2 - COS_THETA_MIN)


class QuadModel:
    kind = "quadrotor"
    state_dim = 13
    input_dim = 4
    state_names = (
        "px", "py", "pz", "qw", "qx", "qy", "qz",
        "vx", "vy", "vz", "wx", "wy", "wz",
    )
    input_names = ("tau", "Mx", "My", "Mz")

    def __init__(self, params: Optional[QuadParams] = None):
        self.params = params or QuadParams()

    def deriv(self, x: np.ndarray, u) -> np.ndarray:
        return quad_deriv(x, u, self.params)

    def post_step(self, x: np.ndarray) -> np.ndarray:
        n = np.linalg.norm(x[3:7])
        if n > 0:
            x[3:7] /= n
        return x

    def domain_ok(self, x: np.ndarray) -> bool:
        return bool(np.all(np.isfinite(x)))


def rollout(
    x0: np.ndarray,
    controller: Callable[[np.ndarray, float], np.ndarray],
    model,
    T: float,
    dt: float,
) -> RolloutResult:
    """Simulate the closed loop x_dot = f(x) + g(x) k(x) and record every sample.

    The controller is folded into the derivative, so it is evaluated at
    every integrator stage (the true closed-loop flow, matching the
    compiled rollout loops); its time argument is the step-start time.
    T/dt must be an integer within rounding.  Aborts with DomainExitError
    if the state leaves the model's valid domain.
    """
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T/dt = {T / dt} is not an integer within rounding")
    x = np.array(x0, dtype=float)
    times = np.empty(n + 1)
    states = np.empty((n + 1, x.size))
    times[0] = 0.0
    states[0] = x
    for k in range(n):
        t = k * dt

        def deriv_cl(xs, _u, _t=t):
            return model.deriv(xs, controller(xs, _t))

        try:
            x = integrate_step(deriv_cl, x, None, dt, post_step=model.post_step)
        except PitchSingularityError as exc:
            raise DomainExitError(
                f"{model.kind} trajectory hit a singularity at t = {t:.3f} s: {exc}"
            ) from exc
        if not model.domain_ok(x):
            raise DomainExitError(
                f"{model.kind} state left the valid domain at t = {t + dt:.3f} s"
            )
        times[k + 1] = (k + 1) * dt
        states[k + 1] = x
    times[n] = T
    return RolloutResult(times=times, states=states)
