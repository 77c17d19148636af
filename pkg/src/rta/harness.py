"""Closed-loop scenario engine: runs scripted-pilot scenarios under the
blended filter, records traces, scores safety reports, and probes the
empirical invariance of the implicit safe set.

Trace CSV columns (fixed wing):

    t_s,phi_rad,theta_rad,psi_rad,pN_m,pE_m,H_ft,P_radps,Nz_g,
    uP_d_radps,uz_d_g,uP_out_radps,uz_out_g,lambda,h_I,h_min,active_constraint

Altitude and load columns are in feet and g (matching the flight-test
plots); everything else is SI.  Numbers are written with full round-trip
precision, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import _kernels
from .constraints import SafetySpec, margins_by_name, tol_inv, violation_tolerances
from .dynamics import integrate_step
from .filtering import implicit_h
from .scenarios import (
    ScenarioConfig,
    build_pilot,
    build_runtime,
    builtin_scenarios,
    initial_state,
)
from .units import m_to_ft, wrap_pi

LAMBDA_OCCUPANCY = 0.01  # intervention-occupancy threshold on lambda


@dataclass
class SimTrace:
    model_kind: str
    constraint_names: List[str]
    t: np.ndarray                      # (n,)
    states: np.ndarray                 # (n, state_dim), SI
    u_d: np.ndarray                    # (n, input_dim)
    u_out: np.ndarray                  # (n, input_dim)
    lam: np.ndarray                    # (n,)
    h_I: np.ndarray                    # (n,)
    h_min: np.ndarray                  # (n,) combined margin at the tick
    active: List[str]                  # (n,)
    h_by_name: Dict[str, np.ndarray]   # per-constraint margins
    filter_on: np.ndarray              # (n,) bool
    aborted: bool = False
    abort_time: Optional[float] = None

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class SafetyReport:
    scenario: str
    tol_inv: float                     # margin-unit tolerance (implicit-set checks)
    tol_by_constraint: Dict[str, float]  # per-constraint violation tolerance
    min_h_by_constraint: Dict[str, float]
    min_h_combined: float
    min_h_I: float
    max_lambda: float
    intervention_fraction: float       # fraction of ticks with lambda > 0.01
    max_input_violation: float         # worst excess of u_out beyond the box
    authority_return: List[dict] = field(default_factory=list)
    aborted: bool = False
    filter_disabled_at: Optional[float] = None
    failures: List[str] = field(default_factory=list)
    passed: bool = True
    wall_time_s: float = 0.0

    def summary(self) -> str:
        lines = [
            f"scenario: {self.scenario}",
            f"status: {'PASS' if self.passed else 'FAIL'}"
            + (f"  ({'; '.join(self.failures)})" if self.failures else ""),
            f"tol_inv: {self.tol_inv:.6g} margin-units",
            f"min combined margin: {self.min_h_combined:.6g}",
            f"min h_I: {self.min_h_I:.6g}",
            f"max lambda: {self.max_lambda:.6g}",
            f"intervention occupancy (lambda > {LAMBDA_OCCUPANCY}): "
            f"{self.intervention_fraction:.4f}",
            f"max input-limit violation: {self.max_input_violation:.6g}",
        ]
        for name, v in self.min_h_by_constraint.items():
            lines.append(
                f"  min margin[{name}]: {v:.6g} (tol {self.tol_by_constraint[name]:.4g})"
            )
        for ev in self.authority_return:
            lines.append(
                f"  turn-away at t={ev['t_away']:.1f} s: lambda < 0.05 "
                f"{'by t=%.1f s' % ev['recovered_by'] if ev['ok'] else 'NOT within 10 s'}"
            )
        if self.aborted:
            lines.append("trajectory left the model domain: partial trace")
        if self.filter_disabled_at is not None:
            lines.append(
                f"filter scripted OFF at t={self.filter_disabled_at} s "
                "(pilot-overtake stand-in; safety scored before that time)"
            )
        lines.append(f"wall time: {self.wall_time_s:.2f} s")
        return "\n".join(lines)


def _step_state(model, x: np.ndarray, u: np.ndarray, dt: float) -> np.ndarray:
    """One sim step on the model's compiled path where available."""
    if model.kind == "fixed_wing":
        p = model.params
        x2 = _kernels.fw_rk4_step(x, u[0], u[1], p.V_T, p.g, p.tau_P, p.tau_z, dt)
        x2[2] = wrap_pi(x2[2])
        return x2
    if model.kind == "quadrotor":
        p = model.params
        return _kernels.quad_rk4_step(x, u, p.m, p.g, p.J, p.J_inv, dt)
    return integrate_step(model.deriv, x, u, dt, post_step=model.post_step)


def run_scenario(cfg: ScenarioConfig, pilot_fn=None) -> Tuple[SimTrace, SafetyReport]:
    """Simulate the scenario under the blended filter, tick by tick.

    Deterministic for a fixed config (the dynamics and scripted pilots are
    deterministic; the seed only matters for sampling-based tools).  If the
    state leaves the model domain the run aborts with a partial trace and
    a flagged report.

    pilot_fn, when given, replaces the configured pilot script with a bare
    (state, t) -> input callable; the live-replay equivalence tests feed
    recorded input sequences through it.
    """
    t_start = time.perf_counter()
    model, spec, limits, runtime = build_runtime(cfg)
    if pilot_fn is None:
        pilot, ctx = build_pilot(cfg, model, spec)
        if not pilot.covers(cfg.run.duration):
            raise ValueError(
                f"pilot script '{pilot.name}' ends at {pilot.t_end} s "
                f"but the run lasts {cfg.run.duration} s"
            )
    else:
        pilot, ctx = None, None
    dt = cfg.run.sim_dt
    n = int(round(cfg.run.duration / dt))
    disable_at = cfg.run.filter_disable_at

    dim = model.state_dim
    m = model.input_dim
    names = spec.names
    tr = SimTrace(
        model_kind=model.kind,
        constraint_names=list(names),
        t=np.empty(n),
        states=np.empty((n, dim)),
        u_d=np.empty((n, m)),
        u_out=np.empty((n, m)),
        lam=np.empty(n),
        h_I=np.empty(n),
        h_min=np.empty(n),
        active=[],
        h_by_name={nm: np.empty(n) for nm in names},
        filter_on=np.empty(n, dtype=bool),
    )

    x = initial_state(cfg)
    k = 0
    for k in range(n):
        t = k * dt
        if pilot_fn is None:
            u_d = np.asarray(pilot.command(x, t, ctx), dtype=float)
        else:
            u_d = np.asarray(pilot_fn(x, t), dtype=float)
        filter_on = disable_at is None or t < disable_at
        if filter_on:
            dec = runtime.decide(x, t, u_d)
            u_out, lam, h_I = dec.u_out, dec.lam, dec.h_I
            h_now, active, hvals = dec.h_now, dec.active_constraint, dec.h_by_name
        else:
            u_out = limits.clamp(u_d)
            lam, h_I = 0.0, math.nan
            hvals = margins_by_name(spec, x, model)
            active = min(hvals, key=lambda nm: hvals[nm])
            h_now = hvals[active]

        tr.t[k] = t
        tr.states[k] = x
        tr.u_d[k] = u_d
        tr.u_out[k] = u_out
        tr.lam[k] = lam
        tr.h_I[k] = h_I
        tr.h_min[k] = h_now
        tr.active.append(active)
        tr.filter_on[k] = filter_on
        for nm in names:
            tr.h_by_name[nm][k] = hvals[nm]

        x = _step_state(model, x, u_out, dt)
        if not model.domain_ok(x):
            tr.aborted = True
            tr.abort_time = t + dt
            break

    if tr.aborted:
        last = k + 1
        tr.t = tr.t[:last]
        tr.states = tr.states[:last]
        tr.u_d = tr.u_d[:last]
        tr.u_out = tr.u_out[:last]
        tr.lam = tr.lam[:last]
        tr.h_I = tr.h_I[:last]
        tr.h_min = tr.h_min[:last]
        tr.filter_on = tr.filter_on[:last]
        for nm in names:
            tr.h_by_name[nm] = tr.h_by_name[nm][:last]

    report = score_trace(cfg, spec, model, limits, tr)
    report.wall_time_s = time.perf_counter() - t_start
    return tr, report


def score_trace(cfg, spec: SafetySpec, model, limits, tr: SimTrace) -> SafetyReport:
    tol = tol_inv(spec, cfg.run.sim_dt, model)
    tol_by = violation_tolerances(spec, cfg.run.sim_dt, model)
    scored = tr.filter_on  # safety judged while the filter is on
    if not scored.any():
        scored = np.ones(len(tr), dtype=bool)

    min_by = {nm: float(tr.h_by_name[nm][scored].min()) for nm in spec.names}
    lam_valid = tr.lam[~np.isnan(tr.lam)]
    over_hi = np.max(tr.u_out - limits.hi[None, :], initial=0.0)
    over_lo = np.max(limits.lo[None, :] - tr.u_out, initial=0.0)
    if limits.load_channel is not None and limits.load_limits is not None:
        ch = limits.load_channel
        over_hi = max(over_hi, float(np.max(tr.u_out[:, ch] - limits.load_limits[1], initial=0.0)))
        over_lo = max(over_lo, float(np.max(limits.load_limits[0] - tr.u_out[:, ch], initial=0.0)))

    rep = SafetyReport(
        scenario=cfg.name,
        tol_inv=tol,
        tol_by_constraint=tol_by,
        min_h_by_constraint=min_by,
        min_h_combined=float(tr.h_min[scored].min()),
        min_h_I=float(np.nanmin(tr.h_I)) if len(tr.h_I) else math.nan,
        max_lambda=float(lam_valid.max()) if len(lam_valid) else 0.0,
        intervention_fraction=float((lam_valid > LAMBDA_OCCUPANCY).mean()) if len(lam_valid) else 0.0,
        max_input_violation=float(max(over_hi, over_lo)),
        aborted=tr.aborted,
        filter_disabled_at=cfg.run.filter_disable_at,
    )

    for t_away in cfg.run.turn_away_times:
        win = (tr.t >= t_away) & (tr.t <= t_away + 10.0) & tr.filter_on
        lam_win = tr.lam[win]
        t_win = tr.t[win]
        below = lam_win < 0.05
        ok = bool(below.any())
        rep.authority_return.append(
            {
                "t_away": t_away,
                "ok": ok,
                "recovered_by": float(t_win[np.argmax(below)]) if ok else math.inf,
            }
        )

    for nm in spec.names:
        if min_by[nm] < -tol_by[nm]:
            rep.failures.append(
                f"{nm} margin {min_by[nm]:.4g} below its tolerance ({-tol_by[nm]:.4g})"
            )
    if rep.max_input_violation > 0.0:
        rep.failures.append(f"input limits violated by {rep.max_input_violation:.4g}")
    if rep.aborted:
        rep.failures.append("trajectory left the model domain")
    for ev in rep.authority_return:
        if not ev["ok"]:
            rep.failures.append(f"lambda did not return below 0.05 after t={ev['t_away']}")
    rep.passed = not rep.failures
    return rep


# ---------------------------------------------------------------------------
# Trace CSV
# ---------------------------------------------------------------------------

_FW_HEADER = (
    "t_s,phi_rad,theta_rad,psi_rad,pN_m,pE_m,H_ft,P_radps,Nz_g,"
    "uP_d_radps,uz_d_g,uP_out_radps,uz_out_g,lambda,h_I,h_min,active_constraint"
)
_SIMPLIFIED_HEADER = "t_s,H_ft,theta_rad,Nz_g,uz_d_g,uz_out_g,lambda,h_I,h_min,active_constraint"
_QUAD_HEADER = (
    "t_s,px_m,py_m,pz_m,qw,qx,qy,qz,vx_mps,vy_mps,vz_mps,wx_radps,wy_radps,wz_radps,"
    "tau_d_N,Mx_d_Nm,My_d_Nm,Mz_d_Nm,tau_out_N,Mx_out_Nm,My_out_Nm,Mz_out_Nm,"
    "lambda,h_I,h_min,active_constraint"
)

TRACE_HEADERS = {
    "fixed_wing": _FW_HEADER,
    "simplified": _SIMPLIFIED_HEADER,
    "quadrotor": _QUAD_HEADER,
}


def _trace_row_values(tr: SimTrace, k: int) -> List:
    s = tr.states[k]
    if tr.model_kind == "fixed_wing":
        vals = [
            tr.t[k], s[0], s[1], s[2], s[3], s[4], m_to_ft(s[5]), s[6], s[7],
            tr.u_d[k, 0], tr.u_d[k, 1], tr.u_out[k, 0], tr.u_out[k, 1],
        ]
    elif tr.model_kind == "simplified":
        vals = [tr.t[k], m_to_ft(s[0]), s[1], s[2], tr.u_d[k, 0], tr.u_out[k, 0]]
    else:
        vals = [tr.t[k], *s, *tr.u_d[k], *tr.u_out[k]]
    vals += [tr.lam[k], tr.h_I[k], tr.h_min[k]]
    return vals


def export_trace(tr: SimTrace, path: str) -> None:
    """Write the trace CSV; identical traces produce byte-identical files."""
    header = TRACE_HEADERS[tr.model_kind]
    try:
        with open(path, "w") as f:
            f.write(header + "\n")
            for k in range(len(tr)):
                vals = _trace_row_values(tr, k)
                f.write(",".join(repr(float(v)) for v in vals))
                f.write("," + tr.active[k] + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path!r}: {exc}") from exc


def import_trace(path: str) -> Dict[str, np.ndarray]:
    """Read a trace CSV back into arrays keyed by column name (file units)."""
    try:
        with open(path) as f:
            header = f.readline().strip().split(",")
            rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    except OSError as exc:
        raise OSError(f"cannot read trace from {path!r}: {exc}") from exc
    out: Dict[str, np.ndarray] = {}
    for i, col in enumerate(header):
        if col == "active_constraint":
            out[col] = np.array([r[i] for r in rows], dtype=object)
        else:
            out[col] = np.array([float(r[i]) for r in rows])
    return out


def render_report(tr: SimTrace, report: SafetyReport, spec: SafetySpec, out_dir: str) -> List[str]:
    """Write a plain-text summary and per-panel data series (altitude vs t,
    load-factor trio, lambda vs t, ground track / pitch), mirroring the
    flight-test plot layout.  Returns the paths written."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []

    def w(name: str, header: str, cols: List[np.ndarray]):
        p = os.path.join(out_dir, name)
        with open(p, "w") as f:
            f.write(header + "\n")
            for k in range(len(cols[0])):
                f.write(",".join(repr(float(c[k])) for c in cols) + "\n")
        written.append(p)

    p = os.path.join(out_dir, "report.txt")
    with open(p, "w") as f:
        f.write(report.summary() + "\n")
    written.append(p)

    has_fence = any(c.kind == "geofence" for c in spec.constraints)
    if tr.model_kind == "quadrotor":
        speed = np.linalg.norm(tr.states[:, 7:10], axis=1)
        w("panel_a_position.csv", "t_s,px_m,py_m,pz_m",
          [tr.t, tr.states[:, 0], tr.states[:, 1], tr.states[:, 2]])
        w("panel_b_speed.csv", "t_s,speed_mps", [tr.t, speed])
        w("panel_c_margin.csv", "t_s,h_min", [tr.t, tr.h_min])
        w("panel_d_lambda.csv", "t_s,lambda", [tr.t, tr.lam])
        return written

    if tr.model_kind == "simplified":
        H_ft = np.array([m_to_ft(v) for v in tr.states[:, 0]])
        theta = tr.states[:, 1]
        Nz = tr.states[:, 2]
        uzd, uzo = tr.u_d[:, 0], tr.u_out[:, 0]
    else:
        H_ft = np.array([m_to_ft(v) for v in tr.states[:, 5]])
        theta = tr.states[:, 1]
        Nz = tr.states[:, 7]
        uzd, uzo = tr.u_d[:, 1], tr.u_out[:, 1]

    panels = []
    if has_fence:
        panels.append(("panel_a_ground_track.csv", "pN_m,pE_m",
                       [tr.states[:, 3], tr.states[:, 4]]))
        panels.append(("panel_b_safety_margin.csv", "t_s,h_min", [tr.t, tr.h_min]))
        panels.append(("panel_c_roll.csv", "t_s,phi_deg",
                       [tr.t, np.degrees(tr.states[:, 0])]))
        panels.append(("panel_d_load_factor.csv", "t_s,uz_d_g,uz_out_g,Nz_g",
                       [tr.t, uzd, uzo, Nz]))
        panels.append(("panel_e_roll_rate.csv", "t_s,uP_d_radps,uP_out_radps,P_radps",
                       [tr.t, tr.u_d[:, 0], tr.u_out[:, 0], tr.states[:, 6]]))
        panels.append(("panel_f_lambda.csv", "t_s,lambda", [tr.t, tr.lam]))
    else:
        panels.append(("panel_a_altitude.csv", "t_s,H_ft", [tr.t, H_ft]))
        panels.append(("panel_b_load_factor.csv", "t_s,uz_d_g,uz_out_g,Nz_g",
                       [tr.t, uzd, uzo, Nz]))
        panels.append(("panel_c_pitch.csv", "t_s,theta_deg", [tr.t, np.degrees(theta)]))
        panels.append(("panel_d_lambda.csv", "t_s,lambda", [tr.t, tr.lam]))
    for name, header, cols in panels:
        w(name, header, cols)
    return written


# ---------------------------------------------------------------------------
# Invariance probe
# ---------------------------------------------------------------------------


@dataclass
class ProbeReport:
    scenario: str
    samples: int
    candidates_tried: int
    margin0: float
    tol: float
    violations: int
    worst_path_margin: float
    worst_terminal_backup_margin: float
    fine_check_agreement: float
    fine_disagreements_bounded: bool
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def summary(self) -> str:
        lines = [
            f"invariance probe: {self.scenario}",
            f"status: {'PASS' if self.passed else 'FAIL'}"
            + (f"  ({'; '.join(self.failures)})" if self.failures else ""),
            f"samples: {self.samples} (tried {self.candidates_tried}), "
            f"margin0 = {self.margin0}, tol_inv = {self.tol:.6g}",
            f"violations: {self.violations}",
            f"worst constraint margin along backup flow: {self.worst_path_margin:.6g}",
            f"worst terminal backup-set margin: {self.worst_terminal_backup_margin:.6g}",
            f"fine-step (dt/10) h_I sign agreement: {self.fine_check_agreement:.4f}",
            f"fine-step disagreements confined to |h_I| < 2 tol: "
            f"{self.fine_disagreements_bounded}",
        ]
        return "\n".join(lines)


def _sample_fixed_wing_state(cfg, spec: SafetySpec, model, rng) -> np.ndarray:
    """Random state in the scenario's operational envelope (before h_I
    filtering).

    With a geofence, headings are sampled on the fence-closing side (within
    80 degrees of the across-fence direction): the completion-heading
    backup set carries no position condition, so its containment in the
    constraint set -- a precondition of the invariance theorem -- holds
    exactly for the closing states where the turn-away is the load-bearing
    safeguard.  Receding states are covered by the hold-course candidate
    at a turn radius or more of clearance.
    """
    x0 = initial_state(cfg)
    H_lo = next(
        (float(c.params["H_min"]) + 50.0 for c in spec.constraints if c.kind == "alt_floor"),
        x0[5] - 800.0,
    )
    H_hi = next(
        (float(c.params["H_max"]) - 50.0 for c in spec.constraints if c.kind == "alt_ceiling"),
        x0[5] + 800.0,
    )
    fence = next((c for c in spec.constraints if c.kind == "geofence"), None)
    p_n = rng.uniform(-2000.0, 2000.0)
    p_e = rng.uniform(-2000.0, 2000.0)
    psi = rng.uniform(-math.pi, math.pi)
    if fence is not None:
        # approach corridor, 200 m .. 8 km inside the fence, closing heading
        n_g = fence.params["n_g"]
        p_g = fence.params["p_g"]
        depth = rng.uniform(200.0, 8000.0)
        lateral = rng.uniform(-3000.0, 3000.0)
        tangent = np.array([-n_g[1], n_g[0]])
        p_n = p_g[0] + n_g[0] * depth + tangent[0] * lateral
        p_e = p_g[1] + n_g[1] * depth + tangent[1] * lateral
        across = math.atan2(-n_g[1], -n_g[0])
        psi = wrap_pi(across + rng.uniform(-math.radians(80.0), math.radians(80.0)))
    return np.array(
        [
            rng.uniform(-math.radians(45.0), math.radians(45.0)),
            rng.uniform(-math.radians(10.0), math.radians(10.0)),
            psi,
            p_n,
            p_e,
            rng.uniform(min(H_lo, H_hi), max(H_lo, H_hi)),
            rng.uniform(-0.3, 0.3),
            rng.uniform(0.8, 2.0),
        ]
    )


def invariance_probe(
    cfg: ScenarioConfig,
    samples: int = 500,
    seed: int = 0,
    margin0: float = 0.5,
    probe_horizon_factor: float = 2.0,
) -> ProbeReport:
    """Empirical forward-invariance check of the implicit safe set.

    Samples scenario-envelope states with h_I >= margin0, rolls the pure
    backup closed loop out to probe_horizon_factor * T, and requires every
    constraint margin >= -tol_inv along the way plus a terminal backup-set
    margin >= -tol_inv.  A dt/10 re-evaluation of h_I must agree in sign
    for >= 99% of samples, with disagreements confined to |h_I| < 2 tol.
    """
    if samples < 1:
        raise ValueError("sample_count must be >= 1")
    if margin0 < 0:
        raise ValueError(
            f"margin0 must be nonnegative (got {margin0}): sampling 'safely "
            "inside' states with a negative margin is contradictory"
        )
    if cfg.model.kind != "fixed_wing":
        raise ValueError("the invariance probe currently samples fixed-wing scenarios")

    model, spec, limits, runtime = build_runtime(cfg)
    rng = np.random.default_rng(seed)
    tol = tol_inv(spec, cfg.backup.rollout_dt, model)

    accepted = 0
    tried = 0
    violations = 0
    worst_path = math.inf
    worst_hb = math.inf
    agree = 0
    disagreements_ok = True
    max_tries = 400 * samples

    from .constraints import pack_constraints
    from .constraints import EPS_V, TTC_MAX

    kinds, prm, scales = pack_constraints(spec)
    p = model.params
    dummy = np.empty((1, 8))

    while accepted < samples and tried < max_tries:
        tried += 1
        x = _sample_fixed_wing_state(cfg, spec, model, rng)
        policy, h_I = runtime.best_policy(x)
        if h_I < margin0:
            continue
        accepted += 1

        # pure-backup probe rollout, extended past the policy horizon
        n_probe = int(round(probe_horizon_factor * policy.horizon / policy.rollout_dt))
        h_path, _, psi_T, ok = _kernels.fw_backup_rollout(
            x, policy._tp_ctrl_packed, kinds, prm, scales,
            p.V_T, p.g, p.tau_P, p.tau_z, n_probe, policy.rollout_dt,
            EPS_V, TTC_MAX, dummy, False,
        )
        hb_T = policy.backup_set(psi_T)
        worst_path = min(worst_path, h_path)
        worst_hb = min(worst_hb, hb_T)
        if not ok or h_path < -tol or hb_T < -tol:
            violations += 1

        # re-evaluate the same maneuver at a 10x finer rollout step
        from .filtering import TurnBackupPolicy

        fine = TurnBackupPolicy(
            policy.turn_params, horizon=policy.horizon,
            rollout_dt=policy.rollout_dt / 10.0,
            completion_gain=policy.completion_gain,
            ctrl_overshoot=policy.ctrl_overshoot,
        )
        h_fine, _ = implicit_h(x, fine, spec, model, psi_unwrapped=x[2], want_rollout=False)
        if (h_I >= 0) == (h_fine >= 0):
            agree += 1
        elif abs(h_I) >= 2.0 * tol:
            disagreements_ok = False

    rep = ProbeReport(
        scenario=cfg.name,
        samples=accepted,
        candidates_tried=tried,
        margin0=margin0,
        tol=tol,
        violations=violations,
        worst_path_margin=worst_path,
        worst_terminal_backup_margin=worst_hb,
        fine_check_agreement=agree / max(accepted, 1),
        fine_disagreements_bounded=disagreements_ok,
    )
    if accepted < samples:
        rep.failures.append(
            f"only {accepted}/{samples} samples found with h_I >= {margin0}"
        )
    if violations:
        rep.failures.append(f"{violations} backup rollouts violated tol_inv")
    if rep.fine_check_agreement < 0.99:
        rep.failures.append(
            f"fine-step sign agreement {rep.fine_check_agreement:.4f} < 0.99"
        )
    if not disagreements_ok:
        rep.failures.append("a fine-step sign disagreement had |h_I| >= 2 tol")
    return rep


# ---------------------------------------------------------------------------
# Real-time benchmark
# ---------------------------------------------------------------------------


def benchmark(cfg: Optional[ScenarioConfig] = None, ticks: int = 2000) -> Dict[str, float]:
    """Measure per-tick cost (filter + integrate + telemetry serialization)
    on one core, plus the implicit-margin evaluation alone."""
    import json

    cfg = cfg or builtin_scenarios()["geofence_assault"]
    model, spec, limits, runtime = build_runtime(cfg)
    pilot, ctx = build_pilot(cfg, model, spec)
    dt = cfg.run.sim_dt
    x = initial_state(cfg)

    # warm the compiled paths
    runtime.decide(x, 0.0, np.asarray(pilot.command(x, 0.0, ctx), dtype=float))

    tick_ns = np.empty(ticks)
    h_only_ns = np.empty(ticks)
    t = 0.0
    for k in range(ticks):
        t0 = time.perf_counter_ns()
        u_d = np.asarray(pilot.command(x, t, ctx), dtype=float)
        dec = runtime.decide(x, t, u_d)
        x = _step_state(model, x, dec.u_out, dt)
        frame = {
            "type": "telemetry",
            "t": t,
            "state": {nm: float(v) for nm, v in zip(model.state_names, x)},
            "lambda": dec.lam,
            "h_I": dec.h_I,
            "h": {nm: float(v) for nm, v in dec.h_by_name.items()},
        }
        json.dumps(frame)
        tick_ns[k] = time.perf_counter_ns() - t0
        t += dt

        t0 = time.perf_counter_ns()
        policy = runtime.make_policy(x) if hasattr(runtime, "make_policy") else runtime.policy
        implicit_h(x, policy, spec, model, psi_unwrapped=x[2] if model.kind == "fixed_wing" else None,
                   want_rollout=False)
        h_only_ns[k] = time.perf_counter_ns() - t0

    ms = tick_ns / 1e6
    hms = h_only_ns / 1e6
    return {
        "ticks": float(ticks),
        "sim_dt_s": dt,
        "rollout_horizon_s": cfg.backup.horizon,
        "rollout_dt_s": cfg.backup.rollout_dt,
        "tick_ms_mean": float(ms.mean()),
        "tick_ms_p50": float(np.percentile(ms, 50)),
        "tick_ms_p99": float(np.percentile(ms, 99)),
        "tick_ms_max": float(ms.max()),
        "implicit_h_ms_p50": float(np.percentile(hms, 50)),
        "implicit_h_ms_p99": float(np.percentile(hms, 99)),
    }
