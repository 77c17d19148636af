"""Implicit safety margin, blending, and the blended safety filter.

The implicit margin of a state is computed by rolling out the closed loop
under the backup controller for a horizon T and taking

    h_I = min( h_b(flow(T)),  min over sampled t in [0, T] of h(flow(t)) )

with every rollout sample (both endpoints included) entering the inner
minimum.  No gradients of h_I are ever computed.  The filter output blends
the desired and backup commands,

    u = (1 - lambda(h_I)) k_d(x, t) + lambda(h_I) k_b(x),
    lambda(h) = exp(-beta max(0, h)),

then clamps per channel to the input box, with the load-factor channel
additionally clamped to the configured load limits.

Margin units: a policy's backup_set evaluator is expected to return values
commensurable with the constraint margins (seconds for the fixed wing).
The turn policy therefore scales raw heading progress (rad) by a
completion gain; with the default blending sharpness this makes a
comfortably completed turn contribute a margin far above the free-flight
threshold, so far from constraints lambda underflows to zero as required.

When lambda < LAMBDA_SNAP the blend is snapped to the desired command
exactly (the convex combination would otherwise perturb the pilot's
command at the 1e-7 level arbitrarily far from any constraint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import _kernels
from .backup import (
    CTRL_OVERSHOOT,
    QuadBackupParams,
    TurnParams,
    choose_turn_direction,
)
from .constraints import (
    EPS_V,
    TTC_MAX,
    SafetySpec,
    combine,
    margins_by_name,
    pack_box,
    pack_constraints,
)
from .dynamics import DomainExitError, RolloutResult, rollout
from .units import ang_diff

LAMBDA_SNAP = 1e-6      # below this the pilot command passes through exactly
H_I_INVALID = -1e9      # sentinel when the backup rollout exits the model domain

# completion-progress scaling for the turn backup set, margin units per rad
COMPLETION_MARGIN_GAIN = 240.0

# episode latch hysteresis on lambda
LAMBDA_ENGAGE = 0.01
LAMBDA_RELEASE = 1e-3

# hold-course candidate: heading slack treated as already-completed progress,
# and the closing-component threshold below which holding course is a valid
# degenerate turn-away (the 180-degree turn would point back at the fence)
HOLD_DONE = 0.25
HOLD_CLOSING_MAX = 0.05


@dataclass
class BlendConfig:
    beta: float = 1.0  # blending sharpness, 1 / margin-unit

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def blend_lambda(h: float, cfg: BlendConfig) -> float:
    """Backup authority in [0, 1]: exp(-beta max(0, h))."""
    return math.exp(-cfg.beta * max(0.0, h))


@dataclass
class ControlLimits:
    """Per-channel input box, plus the load-factor clamp."""

    lo: np.ndarray
    hi: np.ndarray
    load_channel: Optional[int] = None
    load_limits: Optional[Tuple[float, float]] = None

    def __post_init__(self):
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if np.any(self.lo >= self.hi):
            raise ValueError("limit box must be well-ordered")

    def clamp(self, u: np.ndarray) -> np.ndarray:
        out = np.clip(np.asarray(u, dtype=float), self.lo, self.hi)
        if self.load_channel is not None and self.load_limits is not None:
            lo, hi = self.load_limits
            out[self.load_channel] = min(max(out[self.load_channel], lo), hi)
        return out

    @classmethod
    def fixed_wing(
        cls,
        sat_P: Tuple[float, float] = (-math.pi / 2, math.pi / 2),
        sat_z: Tuple[float, float] = (-1.0, 6.0),
        load: Optional[Tuple[float, float]] = (0.2, 4.0),
    ) -> "ControlLimits":
        return cls(
            lo=np.array([sat_P[0], sat_z[0]]),
            hi=np.array([sat_P[1], sat_z[1]]),
            load_channel=1,
            load_limits=load,
        )

    @classmethod
    def quad(cls, tau_max: float, M_max: float) -> "ControlLimits":
        return cls(
            lo=np.array([0.0, -M_max, -M_max, -M_max]),
            hi=np.array([tau_max, M_max, M_max, M_max]),
        )


@dataclass
class FilterDecision:
    u_out: np.ndarray
    lam: float
    h_I: float
    h_now: float
    active_constraint: str
    u_desired: np.ndarray
    u_backup: np.ndarray
    h_by_name: Dict[str, float]
    hb_terminal: float
    flagged: bool = False  # backup rollout left the model domain

    @property
    def backup_engaged_fraction(self) -> float:
        return self.lam


# ---------------------------------------------------------------------------
# Backup policies
# ---------------------------------------------------------------------------


class GenericBackupPolicy:
    """Backup policy from plain callables; integrated with the generic
    (uncompiled) rollout engine."""

    def __init__(
        self,
        controller: Callable[[np.ndarray, float], np.ndarray],
        backup_set: Callable[[np.ndarray], float],
        horizon: float,
        rollout_dt: float,
    ):
        if horizon <= 0 or not (0 < rollout_dt <= horizon):
            raise ValueError("need T > 0 and rollout_dt in (0, T]")
        self.controller = controller
        self.backup_set = backup_set
        self.horizon = horizon
        self.rollout_dt = rollout_dt


class TurnBackupPolicy:
    """Coordinated-turn backup policy for the fixed-wing model.

    turn_params.psi_star is the 180-degree completion heading; the control
    law is given a target ctrl_overshoot further along so the completion
    threshold is crossed at speed.  backup_set returns margin-scaled
    heading progress past completion.
    """

    def __init__(
        self,
        turn_params: TurnParams,
        horizon: float = 30.0,
        rollout_dt: float = 0.02,
        completion_gain: float = COMPLETION_MARGIN_GAIN,
        ctrl_overshoot: float = CTRL_OVERSHOOT,
    ):
        if horizon <= 0 or not (0 < rollout_dt <= horizon):
            raise ValueError("need T > 0 and rollout_dt in (0, T]")
        self.turn_params = turn_params
        self.horizon = horizon
        self.rollout_dt = rollout_dt
        self.completion_gain = completion_gain
        self.ctrl_overshoot = ctrl_overshoot
        ctrl = TurnParams(
            phi_star=turn_params.phi_star,
            H_star=turn_params.H_star,
            psi_star=turn_params.psi_star + turn_params.dirsign * ctrl_overshoot,
            direction=turn_params.direction,
            K_phi=turn_params.K_phi,
            K_psi=turn_params.K_psi,
            K_H=turn_params.K_H,
            K_theta=turn_params.K_theta,
            sat_P=turn_params.sat_P,
            sat_z=turn_params.sat_z,
        )
        self._tp_ctrl_packed = ctrl.pack()

    def controller(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        u_P, u_z = _kernels.fw_turn_u(np.asarray(x, dtype=float), self._tp_ctrl_packed)
        return np.array([u_P, u_z])

    def backup_set(self, x) -> float:
        psi = float(x) if isinstance(x, (int, float)) else float(np.asarray(x)[2])
        return self.completion_gain * self.turn_params.dirsign * (
            psi - self.turn_params.psi_star
        )


class QuadBackupPolicy:
    """Velocity-regulation backup policy for the quadrotor.

    backup_set normalizes the small-velocity margin by epsilon and the box
    margins by the configured constraint scales so all quad margins are
    commensurable.
    """

    def __init__(
        self,
        params: QuadBackupParams,
        spec: SafetySpec,
        horizon: float = 3.0,
        rollout_dt: float = 0.02,
    ):
        if horizon <= 0 or not (0 < rollout_dt <= horizon):
            raise ValueError("need T > 0 and rollout_dt in (0, T]")
        self.params = params
        self.horizon = horizon
        self.rollout_dt = rollout_dt
        self.box, self.scales = pack_box(spec)

    def controller(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        from .backup import quad_backup_controller

        tau, M = quad_backup_controller(x, self.params)
        return np.array([tau, M[0], M[1], M[2]])

    def backup_set(self, x) -> float:
        return float(
            _kernels.quad_backup_set_margin(
                np.asarray(x, dtype=float), self.box, self.scales, self.params.epsilon
            )
        )


# ---------------------------------------------------------------------------
# Implicit safety margin
# ---------------------------------------------------------------------------


def implicit_h(
    x,
    policy,
    spec: SafetySpec,
    model,
    psi_unwrapped: Optional[float] = None,
    want_rollout: bool = True,
):
    """Implicit safety margin by backup rollout.

    Returns (h_I, RolloutResult or None).  h_I is the min of the terminal
    backup-set margin and the constraint margin at every rollout sample.
    A rollout that exits the model's valid domain yields the H_I_INVALID
    sentinel with whatever partial information was gathered.

    For the fixed-wing turn policy, psi_unwrapped supplies the episode's
    unwrapped heading (defaults to the state's wrapped value).
    """
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    n = int(round(policy.horizon / policy.rollout_dt))

    if isinstance(policy, TurnBackupPolicy) and model.kind == "fixed_wing":
        kinds, prm, scales = pack_constraints(spec)
        x0 = xa.copy()
        if psi_unwrapped is not None:
            x0[2] = psi_unwrapped
        states = np.empty((n + 1, 8)) if want_rollout else np.empty((1, 8))
        p = model.params
        h_path, _, psi_T, ok = _kernels.fw_backup_rollout(
            x0, policy._tp_ctrl_packed, kinds, prm, scales,
            p.V_T, p.g, p.tau_P, p.tau_z, n, policy.rollout_dt,
            EPS_V, TTC_MAX, states, want_rollout,
        )
        ro = None
        if want_rollout and ok:
            times = np.arange(n + 1) * policy.rollout_dt
            times[-1] = policy.horizon
            ro = RolloutResult(times=times, states=states)
        if not ok:
            return H_I_INVALID, ro
        h_I = min(policy.backup_set(psi_T), h_path)
        return h_I, ro

    if isinstance(policy, QuadBackupPolicy) and model.kind == "quadrotor":
        qp = policy.params
        veh = qp.vehicle
        states = np.empty((n + 1, 13)) if want_rollout else np.empty((1, 13))
        h_path, _, hb, ok = _kernels.quad_backup_rollout(
            xa, veh.m, veh.g, veh.J, veh.J_inv,
            policy.box, qp.delta, policy.scales, qp.epsilon, qp.vr_max,
            qp.k_v, qp.k_R, qp.k_w, qp.tau_max, qp.a_h_max, qp.M_max,
            n, policy.rollout_dt, states, want_rollout,
        )
        ro = None
        if want_rollout and ok:
            times = np.arange(n + 1) * policy.rollout_dt
            times[-1] = policy.horizon
            ro = RolloutResult(times=times, states=states)
        if not ok:
            return H_I_INVALID, ro
        return min(hb, h_path), ro

    # generic path: python rollout, margins via combine()
    try:
        ro = rollout(xa, policy.controller, model, policy.horizon, policy.rollout_dt)
    except DomainExitError:
        return H_I_INVALID, None
    h_path = min(combine(spec, s, model)[0] for s in ro.states)
    h_I = min(policy.backup_set(ro.terminal_state), h_path)
    return h_I, (ro if want_rollout else None)


# ---------------------------------------------------------------------------
# Blended filter
# ---------------------------------------------------------------------------


def blended_filter(
    x,
    t: float,
    k_d: Callable[[np.ndarray, float], np.ndarray],
    policy,
    spec: SafetySpec,
    cfg: BlendConfig,
    limits: ControlLimits,
    model=None,
    psi_unwrapped: Optional[float] = None,
) -> FilterDecision:
    """One evaluation of the blended safety filter.

    Pure function of its inputs; sessions may evaluate it concurrently.
    """
    xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
    u_d = np.asarray(k_d(xa, t), dtype=float)
    if not np.all(np.isfinite(u_d)):
        raise ValueError("desired controller output must be finite")

    h_I, _ = implicit_h(
        xa, policy, spec, model, psi_unwrapped=psi_unwrapped, want_rollout=False
    )
    flagged = h_I <= H_I_INVALID
    lam = blend_lambda(h_I, cfg)

    ctrl_x = xa
    if psi_unwrapped is not None:
        ctrl_x = xa.copy()
        ctrl_x[2] = psi_unwrapped
    u_b = np.asarray(policy.controller(ctrl_x, t), dtype=float)

    if lam < LAMBDA_SNAP:
        u_blend = u_d
    else:
        u_blend = (1.0 - lam) * u_d + lam * u_b
    u_out = limits.clamp(u_blend)

    h_now, active = combine(spec, xa, model)
    hvals = margins_by_name(spec, xa, model)
    hb_term = h_I  # reported only when it binds; recompute cheaply for turn policy
    if isinstance(policy, TurnBackupPolicy):
        hb_term = policy.backup_set(psi_unwrapped if psi_unwrapped is not None else xa[2])
    return FilterDecision(
        u_out=u_out,
        lam=lam,
        h_I=h_I,
        h_now=h_now,
        active_constraint=active,
        u_desired=u_d,
        u_backup=u_b,
        h_by_name=hvals,
        hb_terminal=hb_term,
        flagged=flagged,
    )


# ---------------------------------------------------------------------------
# Episode-latching runtimes (one per simulation or live session)
# ---------------------------------------------------------------------------


@dataclass
class TurnEpisode:
    psi_star: float      # backup-set threshold heading, unwrapped frame
    psi_ctrl: float      # control-law target heading
    H_star: float
    direction: str
    flavor: str = "turn"  # "turn" (180-degree reversal) or "hold" (keep course)


class FixedWingFilterRuntime:
    """Owns the per-episode state of the fixed-wing filter: the unwrapped
    heading tracker and the latched turn target.

    While disengaged, each tick evaluates fresh candidate maneuvers and
    blends against the one with the largest implicit margin:

      * a 180-degree turn-away (target = current heading + pi in the
        chosen direction), holding altitude near the projected level-off
        point (current altitude plus a few seconds of climb rate, clamped
        inside the altitude band) so a backup engaged mid-climb levels
        off at the apex instead of diving back;
      * when there is a geofence and the aircraft is not closing on it,
        the degenerate zero-length turn-away: hold course and altitude
        (the full reversal would point back at the fence).

    When lambda crosses LAMBDA_ENGAGE the winning candidate is latched and
    held until lambda falls below LAMBDA_RELEASE; re-engagement
    re-latches.

    decide() runs an inlined compiled path; blended_filter() is the
    reference implementation and tests pin the two against each other.
    """

    def __init__(
        self,
        model,
        spec: SafetySpec,
        blend: BlendConfig,
        limits: ControlLimits,
        turn_template: TurnParams,
        horizon: float = 30.0,
        rollout_dt: float = 0.02,
        completion_gain: float = COMPLETION_MARGIN_GAIN,
        ctrl_overshoot: float = CTRL_OVERSHOOT,
        h_star_margin: float = 60.0,
        h_star_lookahead: float = 6.0,
    ):
        self.model = model
        self.spec = spec
        self.blend = blend
        self.limits = limits
        self.turn_template = turn_template
        self.horizon = horizon
        self.rollout_dt = rollout_dt
        self.completion_gain = completion_gain
        self.ctrl_overshoot = ctrl_overshoot
        self.h_star_margin = h_star_margin
        self.h_star_lookahead = h_star_lookahead
        self._fence = next((c for c in spec.constraints if c.kind == "geofence"), None)
        self._H_min = next(
            (float(c.params["H_min"]) for c in spec.constraints if c.kind == "alt_floor"),
            None,
        )
        self._H_max = next(
            (float(c.params["H_max"]) for c in spec.constraints if c.kind == "alt_ceiling"),
            None,
        )
        # cached kernel inputs, mutated per tick
        self._kinds, self._prm, self._scales = pack_constraints(spec)
        self._tp = turn_template.pack()
        self._n_steps = int(round(horizon / rollout_dt))
        self._margins = np.empty(len(spec.constraints))
        self._no_states = np.empty((1, 8))
        self._turn_radius = model.params.V_T**2 / (
            model.params.g * math.tan(turn_template.phi_star)
        )
        self.reset()

    def reset(self):
        self.episode: Optional[TurnEpisode] = None
        self._psi_prev: Optional[float] = None
        self.psi_unwrapped: float = 0.0

    def _clamp_H_star(self, H: float) -> float:
        lo = self._H_min + self.h_star_margin if self._H_min is not None else -math.inf
        hi = self._H_max - self.h_star_margin if self._H_max is not None else math.inf
        if lo > hi:  # degenerate band; hold the middle
            return 0.5 * (lo + hi)
        return min(max(H, lo), hi)

    def _candidate_H_star(self, xa: np.ndarray) -> float:
        climb = self.model.params.V_T * math.sin(xa[1])
        return self._clamp_H_star(xa[5] + self.h_star_lookahead * climb)

    def _hold_eligible(self, xa: np.ndarray) -> bool:
        """Holding course is a valid degenerate turn-away only when not
        closing on the fence (the full reversal would point back at it) and
        with at least a turn radius of clearance: any closer, pilot
        authority could rotate the nose in faster than a turn-away can
        recover, so the full reversal must stay priced into the margin."""
        if self._fence is None:
            return False
        n_g = self._fence.params["n_g"]
        p_g = self._fence.params["p_g"]
        closing = -(math.cos(xa[2]) * n_g[0] + math.sin(xa[2]) * n_g[1])
        dist = n_g[0] * (xa[3] - p_g[0]) + n_g[1] * (xa[4] - p_g[1])
        return closing < HOLD_CLOSING_MAX and dist >= self._turn_radius

    def _candidates(self, xa: np.ndarray, psi_u: float):
        """Candidate (or latched) backup targets at this state, as tuples
        (psi_star, psi_ctrl, H_star, dirsign, flavor)."""
        if self.episode is not None:
            ep = self.episode
            d = 1.0 if ep.direction == "right" else -1.0
            return [(ep.psi_star, ep.psi_ctrl, ep.H_star, d, ep.flavor)]
        if self._fence is not None:
            direction = choose_turn_direction(xa, self._fence)
        else:
            direction = self.turn_template.direction
        d = 1.0 if direction == "right" else -1.0
        H_star = self._candidate_H_star(xa)
        cands = [
            (psi_u + d * math.pi, psi_u + d * (math.pi + self.ctrl_overshoot), H_star, d, "turn")
        ]
        if self._hold_eligible(xa):
            cands.append((psi_u - d * HOLD_DONE, psi_u, H_star, d, "hold"))
        return cands

    def _rollout_candidate(self, x0: np.ndarray, cand) -> Tuple[float, bool]:
        psi_star, psi_ctrl, H_star, d, _ = cand
        tp = self._tp
        tp[1] = psi_ctrl
        tp[2] = H_star
        tp[11] = d
        p = self.model.params
        h_path, _, psi_T, ok = _kernels.fw_backup_rollout(
            x0, tp, self._kinds, self._prm, self._scales,
            p.V_T, p.g, p.tau_P, p.tau_z, self._n_steps, self.rollout_dt,
            EPS_V, TTC_MAX, self._no_states, False,
        )
        if not ok:
            return H_I_INVALID, False
        hb_T = self.completion_gain * d * (psi_T - psi_star)
        return min(hb_T, h_path), True

    def _policy_for(self, cand, horizon=None, rollout_dt=None) -> TurnBackupPolicy:
        psi_star, psi_ctrl, H_star, d, _ = cand
        tpl = self.turn_template
        params = TurnParams(
            phi_star=tpl.phi_star,
            H_star=H_star,
            psi_star=psi_star,
            direction="right" if d > 0 else "left",
            K_phi=tpl.K_phi,
            K_psi=tpl.K_psi,
            K_H=tpl.K_H,
            K_theta=tpl.K_theta,
            sat_P=tpl.sat_P,
            sat_z=tpl.sat_z,
        )
        return TurnBackupPolicy(
            params,
            horizon=self.horizon if horizon is None else horizon,
            rollout_dt=self.rollout_dt if rollout_dt is None else rollout_dt,
            completion_gain=self.completion_gain,
            ctrl_overshoot=d * (psi_ctrl - psi_star),
        )

    def best_policy(
        self,
        xa: np.ndarray,
        horizon: Optional[float] = None,
        rollout_dt: Optional[float] = None,
    ) -> Tuple[TurnBackupPolicy, float]:
        """Highest-margin candidate policy for a state and its h_I at the
        runtime's own horizon; the probe and tests use this to evaluate
        states outside a simulation loop."""
        xa = np.asarray(xa, dtype=float)
        x0 = xa.copy()
        best = None
        best_h = -math.inf
        for cand in self._candidates(xa, xa[2]):
            h_I, _ = self._rollout_candidate(x0, cand)
            if h_I > best_h:
                best_h = h_I
                best = cand
        return self._policy_for(best, horizon, rollout_dt), best_h

    def make_policy(
        self,
        xa: np.ndarray,
        horizon: Optional[float] = None,
        rollout_dt: Optional[float] = None,
    ) -> TurnBackupPolicy:
        return self.best_policy(xa, horizon, rollout_dt)[0]

    def decide(self, x, t: float, u_d: np.ndarray) -> FilterDecision:
        xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
        if self._psi_prev is None:
            self.psi_unwrapped = xa[2]
        else:
            self.psi_unwrapped += ang_diff(xa[2], self._psi_prev)
        self._psi_prev = xa[2]
        psi_u = self.psi_unwrapped

        x0 = xa.copy()
        x0[2] = psi_u
        h_I = -math.inf
        cand = None
        any_ok = False
        for c in self._candidates(xa, psi_u):
            h_c, ok_c = self._rollout_candidate(x0, c)
            any_ok = any_ok or ok_c
            if h_c > h_I:
                h_I = h_c
                cand = c
        if not any_ok:
            h_I = H_I_INVALID
        flagged = not any_ok
        psi_star, psi_ctrl, H_star, d, flavor = cand
        lam = blend_lambda(h_I, self.blend)

        u_d = np.asarray(u_d, dtype=float)
        if not np.all(np.isfinite(u_d)):
            raise ValueError("desired controller output must be finite")
        tp = self._tp
        tp[1] = psi_ctrl
        tp[2] = H_star
        tp[11] = d
        u_P_b, u_z_b = _kernels.fw_turn_u(x0, tp)
        u_b = np.array([u_P_b, u_z_b])
        if lam < LAMBDA_SNAP:
            u_blend = u_d
        else:
            u_blend = (1.0 - lam) * u_d + lam * u_b
        u_out = self.limits.clamp(u_blend)

        p = self.model.params
        h_now, arg0 = _kernels.fw_margins(
            xa, self._kinds, self._prm, self._scales, p.V_T, EPS_V, TTC_MAX, self._margins
        )
        names = self.spec.names
        dec = FilterDecision(
            u_out=u_out,
            lam=lam,
            h_I=h_I,
            h_now=h_now,
            active_constraint=names[arg0],
            u_desired=u_d,
            u_backup=u_b,
            h_by_name={nm: float(v) for nm, v in zip(names, self._margins)},
            hb_terminal=self.completion_gain * d * (psi_u - psi_star),
            flagged=flagged,
        )
        if self.episode is None and lam >= LAMBDA_ENGAGE:
            self.episode = TurnEpisode(
                psi_star=psi_star, psi_ctrl=psi_ctrl, H_star=H_star,
                direction="right" if d > 0 else "left", flavor=flavor,
            )
        elif self.episode is not None and lam < LAMBDA_RELEASE:
            self.episode = None
        return dec

    def decide_reference(self, x, t: float, u_d: np.ndarray) -> FilterDecision:
        """Same decision through the general blended_filter path (no latch
        update); used to pin the inlined path in tests."""
        xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
        policy, _ = self.best_policy(xa)
        return blended_filter(
            xa, t, lambda _x, _t: u_d, policy, self.spec, self.blend,
            self.limits, model=self.model, psi_unwrapped=xa[2],
        )


class AltitudeHoldFilterRuntime:
    """Filter runtime for the 3-state altitude/pitch model.

    The backup maneuver levels off and holds altitude (the wings-level
    slice of the coordinated turn, with no heading to manage); its backup
    set is level flight re-established: margin-scaled (theta_window -
    |theta|).  H* latches like the fixed-wing runtime.  Rollouts run on
    the generic python engine, so this runtime suits short test scenarios
    rather than the real-time service.
    """

    def __init__(
        self,
        model,
        spec: SafetySpec,
        blend: BlendConfig,
        limits: ControlLimits,
        K_H: float = 0.008,
        K_theta: float = 6.0,
        sat_z: Tuple[float, float] = (0.2, 4.0),
        theta_window: float = 0.1,
        horizon: float = 20.0,
        rollout_dt: float = 0.05,
        completion_gain: float = COMPLETION_MARGIN_GAIN,
        h_star_margin: float = 60.0,
    ):
        self.model = model
        self.spec = spec
        self.blend = blend
        self.limits = limits
        self.K_H = K_H
        self.K_theta = K_theta
        self.sat_z = sat_z
        self.theta_window = theta_window
        self.horizon = horizon
        self.rollout_dt = rollout_dt
        self.completion_gain = completion_gain
        self.h_star_margin = h_star_margin
        self._H_min = next(
            (float(c.params["H_min"]) for c in spec.constraints if c.kind == "alt_floor"),
            None,
        )
        self._H_max = next(
            (float(c.params["H_max"]) for c in spec.constraints if c.kind == "alt_ceiling"),
            None,
        )
        self.reset()

    def reset(self):
        self.H_star: Optional[float] = None  # latched while engaged

    def _clamp_H_star(self, H: float) -> float:
        lo = self._H_min + self.h_star_margin if self._H_min is not None else -math.inf
        hi = self._H_max - self.h_star_margin if self._H_max is not None else math.inf
        return min(max(H, lo), hi)

    def make_policy(self, xa: np.ndarray) -> GenericBackupPolicy:
        H_star = self.H_star if self.H_star is not None else self._clamp_H_star(xa[0])

        def controller(x, t):
            u_z = 1.0 + self.K_H * (H_star - x[0]) - self.K_theta * x[1]
            return np.array([min(max(u_z, self.sat_z[0]), self.sat_z[1])])

        def backup_set(x):
            return self.completion_gain * (self.theta_window - abs(x[1]))

        return GenericBackupPolicy(controller, backup_set, self.horizon, self.rollout_dt)

    def decide(self, x, t: float, u_d: np.ndarray) -> FilterDecision:
        xa = np.asarray(x, dtype=float) if not hasattr(x, "as_array") else x.as_array()
        policy = self.make_policy(xa)
        dec = blended_filter(
            xa, t, lambda _x, _t: u_d, policy, self.spec, self.blend,
            self.limits, model=self.model,
        )
        if self.H_star is None and dec.lam >= LAMBDA_ENGAGE:
            self.H_star = self._clamp_H_star(xa[0])
        elif self.H_star is not None and dec.lam < LAMBDA_RELEASE:
            self.H_star = None
        return dec


class QuadFilterRuntime:
    """Quadrotor filter runtime; the velocity-regulation backup is a pure
    state feedback, so there is nothing to latch."""

    def __init__(
        self,
        model,
        spec: SafetySpec,
        blend: BlendConfig,
        limits: ControlLimits,
        backup_params: QuadBackupParams,
        horizon: float = 3.0,
        rollout_dt: float = 0.02,
    ):
        self.model = model
        self.spec = spec
        self.blend = blend
        self.limits = limits
        self.policy = QuadBackupPolicy(
            backup_params, spec, horizon=horizon, rollout_dt=rollout_dt
        )

    def reset(self):
        pass

    def decide(self, x, t: float, u_d: np.ndarray) -> FilterDecision:
        return blended_filter(
            x, t, lambda _x, _t: u_d, self.policy, self.spec, self.blend,
            self.limits, model=self.model,
        )
