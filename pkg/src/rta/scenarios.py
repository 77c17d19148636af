"""Scenario configuration: strict schema, file loading, built-in scenarios.

A scenario file is a nested key-value document (YAML) with sections
model / safety / backup / blend / pilot / run (plus optional limits).
Field names mirror the package's type definitions; unknown keys are
errors.  Altitudes may be given in meters (H, H_min, H_max) or feet
(H_ft, H_min_ft, H_max_ft); angles in radians (phi, theta, psi,
phi_star) or degrees (phi_deg, ...).  Everything is SI internally.
"""

from __future__ import annotations

import math
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from .backup import QuadBackupParams, TurnParams
from .constraints import ConstraintSpec, SafetySpec
from .dynamics import (
    FixedWingModel,
    FixedWingParams,
    QuadModel,
    QuadParams,
    SimplifiedModel,
)
from .filtering import (
    COMPLETION_MARGIN_GAIN,
    AltitudeHoldFilterRuntime,
    BlendConfig,
    ControlLimits,
    FixedWingFilterRuntime,
    QuadFilterRuntime,
)
from .pilots import PilotContext, PilotPhase, PilotScript
from .units import ft_to_m

FT = 0.3048


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _one_of(name_m: str, val_m, val_ft, default=None):
    """Resolve a meters-or-feet field pair to meters."""
    if val_m is not None and val_ft is not None:
        raise ValueError(f"give {name_m} in meters or feet, not both")
    if val_m is not None:
        return float(val_m)
    if val_ft is not None:
        return ft_to_m(float(val_ft))
    return default


def _angle(name: str, val_rad, val_deg, default=None):
    if val_rad is not None and val_deg is not None:
        raise ValueError(f"give {name} in rad or deg, not both")
    if val_rad is not None:
        return float(val_rad)
    if val_deg is not None:
        return math.radians(float(val_deg))
    return default


class FixedWingParamsCfg(StrictModel):
    V_T: float = 150.0
    g: float = 9.80665
    tau_P: float = 0.3
    tau_z: float = 0.5


class QuadParamsCfg(StrictModel):
    m: float = 1.3
    J_diag: Tuple[float, float, float] = (0.011, 0.012, 0.021)
    g: float = 9.80665


class FixedWingInitCfg(StrictModel):
    phi: Optional[float] = None
    phi_deg: Optional[float] = None
    theta: Optional[float] = None
    theta_deg: Optional[float] = None
    psi: Optional[float] = None
    psi_deg: Optional[float] = None
    p_n: float = 0.0
    p_e: float = 0.0
    H: Optional[float] = None
    H_ft: Optional[float] = None
    P: float = 0.0
    N_z: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                _angle("phi", self.phi, self.phi_deg, 0.0),
                _angle("theta", self.theta, self.theta_deg, 0.0),
                _angle("psi", self.psi, self.psi_deg, 0.0),
                self.p_n,
                self.p_e,
                _one_of("H", self.H, self.H_ft, 0.0),
                self.P,
                self.N_z,
            ]
        )


class SimplifiedInitCfg(StrictModel):
    H: Optional[float] = None
    H_ft: Optional[float] = None
    theta: Optional[float] = None
    theta_deg: Optional[float] = None
    N_z: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                _one_of("H", self.H, self.H_ft, 0.0),
                _angle("theta", self.theta, self.theta_deg, 0.0),
                self.N_z,
            ]
        )


class QuadInitCfg(StrictModel):
    p: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    q: Tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    v: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    omega: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.q, self.v, self.omega]).astype(float)


class ModelCfg(StrictModel):
    kind: Literal["fixed_wing", "simplified", "quadrotor"]
    params: Optional[dict] = None
    initial_state: Optional[dict] = None

    @model_validator(mode="after")
    def _typed_sections(self):
        if self.kind in ("fixed_wing", "simplified"):
            self._params = FixedWingParamsCfg(**(self.params or {}))
            init_cls = FixedWingInitCfg if self.kind == "fixed_wing" else SimplifiedInitCfg
            self._init = init_cls(**(self.initial_state or {}))
        else:
            self._params = QuadParamsCfg(**(self.params or {}))
            self._init = QuadInitCfg(**(self.initial_state or {}))
        return self


class ConstraintCfg(StrictModel):
    name: str
    kind: Literal[
        "load_min", "load_max", "alt_floor", "alt_ceiling", "geofence",
        "box_x", "box_y", "box_z",
    ]
    N_z_min: Optional[float] = None
    N_z_max: Optional[float] = None
    H_min: Optional[float] = None
    H_min_ft: Optional[float] = None
    H_max: Optional[float] = None
    H_max_ft: Optional[float] = None
    p_g: Optional[Tuple[float, float]] = None
    n_g: Optional[Tuple[float, float]] = None
    center: Optional[float] = None
    half: Optional[float] = None
    scale: Optional[float] = None

    @model_validator(mode="after")
    def _unit_pairs_and_required(self):
        _one_of("H_min", self.H_min, self.H_min_ft)
        _one_of("H_max", self.H_max, self.H_max_ft)
        required = {
            "load_min": [self.N_z_min],
            "load_max": [self.N_z_max],
            "alt_floor": [self.H_min if self.H_min is not None else self.H_min_ft],
            "alt_ceiling": [self.H_max if self.H_max is not None else self.H_max_ft],
            "geofence": [self.p_g, self.n_g],
            "box_x": [self.center, self.half],
            "box_y": [self.center, self.half],
            "box_z": [self.center, self.half],
        }[self.kind]
        if any(v is None for v in required):
            raise ValueError(f"constraint {self.name!r} ({self.kind}) is missing parameters")
        return self

    def to_spec(self, model_params) -> ConstraintSpec:
        k = self.kind
        if k == "load_min":
            if self.N_z_min is None:
                raise ValueError(f"{self.name}: load_min needs N_z_min")
            return ConstraintSpec(self.name, k, {"N_z_min": self.N_z_min}, self.scale or 1.0)
        if k == "load_max":
            if self.N_z_max is None:
                raise ValueError(f"{self.name}: load_max needs N_z_max")
            return ConstraintSpec(self.name, k, {"N_z_max": self.N_z_max}, self.scale or 1.0)
        if k == "alt_floor":
            H = _one_of("H_min", self.H_min, self.H_min_ft)
            if H is None:
                raise ValueError(f"{self.name}: alt_floor needs H_min or H_min_ft")
            return ConstraintSpec(self.name, k, {"H_min": H}, self.scale or model_params.V_T)
        if k == "alt_ceiling":
            H = _one_of("H_max", self.H_max, self.H_max_ft)
            if H is None:
                raise ValueError(f"{self.name}: alt_ceiling needs H_max or H_max_ft")
            return ConstraintSpec(self.name, k, {"H_max": H}, self.scale or model_params.V_T)
        if k == "geofence":
            if self.p_g is None or self.n_g is None:
                raise ValueError(f"{self.name}: geofence needs p_g and n_g")
            return ConstraintSpec(self.name, k, {"p_g": self.p_g, "n_g": self.n_g}, self.scale or 1.0)
        if self.center is None or self.half is None:
            raise ValueError(f"{self.name}: box constraints need center and half")
        return ConstraintSpec(
            self.name, k, {"center": self.center, "half": self.half},
            self.scale or float(self.half) ** 2,
        )


class SafetyCfg(StrictModel):
    constraints: List[ConstraintCfg]


class TurnBackupCfg(StrictModel):
    phi_star: Optional[float] = None
    phi_star_deg: Optional[float] = None
    K_phi: float = 3.0
    K_psi: float = 2.0
    K_H: float = 0.008
    K_theta: float = 6.0
    sat_P: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    sat_z: Tuple[float, float] = (0.2, 4.0)
    direction_default: Literal["right", "left"] = "right"

    def template(self) -> TurnParams:
        return TurnParams(
            phi_star=_angle("phi_star", self.phi_star, self.phi_star_deg, math.radians(60.0)),
            H_star=0.0,
            psi_star=0.0,
            direction=self.direction_default,
            K_phi=self.K_phi,
            K_psi=self.K_psi,
            K_H=self.K_H,
            K_theta=self.K_theta,
            sat_P=self.sat_P,
            sat_z=self.sat_z,
        )


class QuadBackupCfg(StrictModel):
    box_center: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    box_half: Tuple[float, float, float] = (75.0, 75.0, 30.0)
    delta: Optional[Tuple[float, float, float]] = None
    epsilon: float = 2.0
    k_v: float = 4.0
    k_R: float = 8.0
    k_w: float = 1.0
    vr_max: float = 20.0
    tau_max_factor: float = 2.0
    M_max: float = 1.0

    def params(self, vehicle: QuadParams) -> QuadBackupParams:
        half = np.asarray(self.box_half, dtype=float)
        delta = np.asarray(self.delta, dtype=float) if self.delta else 0.2 * half**2
        return QuadBackupParams(
            box_center=np.asarray(self.box_center, dtype=float),
            box_half=half,
            delta=delta,
            epsilon=self.epsilon,
            k_v=self.k_v,
            k_R=self.k_R,
            k_w=self.k_w,
            vr_max=self.vr_max,
            tau_max_factor=self.tau_max_factor,
            M_max=self.M_max,
            vehicle=vehicle,
        )


class BackupCfg(StrictModel):
    kind: Literal["turn", "quad_velocity"] = "turn"
    horizon: float = 30.0
    rollout_dt: float = 0.02
    completion_gain: float = COMPLETION_MARGIN_GAIN
    ctrl_overshoot: float = 0.7
    h_star_margin: float = 60.0
    turn: Optional[TurnBackupCfg] = None
    quad: Optional[QuadBackupCfg] = None


class BlendCfg(StrictModel):
    beta: float = 1.0


class PilotPhaseCfg(StrictModel):
    t0: float
    t1: float
    law: str
    params: Dict[str, float] = {}


class PilotCfg(StrictModel):
    name: str
    phases: Optional[List[PilotPhaseCfg]] = None

    def script(self) -> PilotScript:
        if self.phases is None:
            raise ValueError(
                f"pilot {self.name!r} has no phases; built-in scenarios define "
                "them, scenario files must list them"
            )
        return PilotScript(
            self.name,
            [PilotPhase(p.t0, p.t1, p.law, dict(p.params)) for p in self.phases],
        )


class LimitsCfg(StrictModel):
    sat_P: Tuple[float, float] = (-math.pi / 2, math.pi / 2)
    sat_z: Tuple[float, float] = (-1.0, 6.0)
    load: Optional[Tuple[float, float]] = (0.2, 4.0)


class RunCfg(StrictModel):
    duration: float
    sim_dt: float = 0.01
    seed: int = 0
    filter_disable_at: Optional[float] = None
    turn_away_times: List[float] = []

    @field_validator("duration")
    @classmethod
    def _positive(cls, v):
        if v <= 0:
            raise ValueError("duration must be positive")
        return v


class ScenarioConfig(StrictModel):
    name: str
    model: ModelCfg
    safety: SafetyCfg
    backup: BackupCfg
    blend: BlendCfg = BlendCfg()
    pilot: PilotCfg
    run: RunCfg
    limits: LimitsCfg = LimitsCfg()

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.model.kind == "quadrotor" and self.backup.kind != "quad_velocity":
            raise ValueError("quadrotor scenarios need the quad_velocity backup")
        if self.model.kind != "quadrotor" and self.backup.kind == "quad_velocity":
            raise ValueError("quad_velocity backup needs the quadrotor model")
        if self.pilot.phases is not None:
            script = self.pilot.script()
            if not script.covers(self.run.duration):
                raise ValueError(
                    f"pilot script ends at {script.t_end} s but the run lasts "
                    f"{self.run.duration} s"
                )
        return self


def load_scenario(path: str) -> ScenarioConfig:
    """Parse and validate a scenario file (unknown keys are errors)."""
    with open(path) as f:
        data = yaml.safe_load(f)
    if not isinstance(data, dict):
        raise ValueError(f"{path}: scenario file must be a mapping")
    return ScenarioConfig(**data)


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.model_dump(exclude_none=True), sort_keys=False)


# ---------------------------------------------------------------------------
# Builders: config -> runtime objects
# ---------------------------------------------------------------------------


def build_model(cfg: ScenarioConfig):
    mc = cfg.model
    if mc.kind == "fixed_wing":
        p = mc._params
        return FixedWingModel(FixedWingParams(V_T=p.V_T, g=p.g, tau_P=p.tau_P, tau_z=p.tau_z))
    if mc.kind == "simplified":
        p = mc._params
        return SimplifiedModel(FixedWingParams(V_T=p.V_T, g=p.g, tau_P=p.tau_P, tau_z=p.tau_z))
    p = mc._params
    return QuadModel(QuadParams(m=p.m, J=np.diag(p.J_diag), g=p.g))


def build_spec(cfg: ScenarioConfig, model) -> SafetySpec:
    return SafetySpec([c.to_spec(model.params) for c in cfg.safety.constraints])


def build_limits(cfg: ScenarioConfig, backup_params=None) -> ControlLimits:
    if cfg.model.kind == "quadrotor":
        return ControlLimits.quad(tau_max=backup_params.tau_max, M_max=backup_params.M_max)
    if cfg.model.kind == "simplified":
        lz = cfg.limits.sat_z
        return ControlLimits(
            lo=np.array([lz[0]]), hi=np.array([lz[1]]),
            load_channel=0, load_limits=cfg.limits.load,
        )
    return ControlLimits.fixed_wing(
        sat_P=cfg.limits.sat_P, sat_z=cfg.limits.sat_z, load=cfg.limits.load
    )


def build_runtime(cfg: ScenarioConfig):
    """Model, safety spec, limits, and the per-session filter runtime."""
    model = build_model(cfg)
    spec = build_spec(cfg, model)
    blend = BlendConfig(beta=cfg.blend.beta)
    if cfg.model.kind == "quadrotor":
        qp = (cfg.backup.quad or QuadBackupCfg()).params(model.params)
        limits = build_limits(cfg, qp)
        runtime = QuadFilterRuntime(
            model, spec, blend, limits, qp,
            horizon=cfg.backup.horizon, rollout_dt=cfg.backup.rollout_dt,
        )
    elif cfg.model.kind == "fixed_wing":
        limits = build_limits(cfg)
        template = (cfg.backup.turn or TurnBackupCfg()).template()
        runtime = FixedWingFilterRuntime(
            model, spec, blend, limits, template,
            horizon=cfg.backup.horizon,
            rollout_dt=cfg.backup.rollout_dt,
            completion_gain=cfg.backup.completion_gain,
            ctrl_overshoot=cfg.backup.ctrl_overshoot,
            h_star_margin=cfg.backup.h_star_margin,
        )
    else:
        limits = build_limits(cfg)
        tb = cfg.backup.turn or TurnBackupCfg()
        runtime = AltitudeHoldFilterRuntime(
            model, spec, blend, limits,
            K_H=tb.K_H, K_theta=tb.K_theta, sat_z=tb.sat_z,
            horizon=cfg.backup.horizon, rollout_dt=cfg.backup.rollout_dt,
            completion_gain=cfg.backup.completion_gain,
            h_star_margin=cfg.backup.h_star_margin,
        )
    return model, spec, limits, runtime


def build_pilot(cfg: ScenarioConfig, model, spec: SafetySpec) -> Tuple[PilotScript, PilotContext]:
    fence = next((c for c in spec.constraints if c.kind == "geofence"), None)
    quad_backup = None
    if cfg.model.kind == "quadrotor":
        quad_backup = (cfg.backup.quad or QuadBackupCfg()).params(model.params)
    ctx = PilotContext(
        model=model,
        fence_p_g=None if fence is None else fence.params["p_g"],
        fence_n_g=None if fence is None else fence.params["n_g"],
        quad_backup=quad_backup,
    )
    script = BUILTIN_SCRIPTS[cfg.pilot.name] if cfg.pilot.phases is None else cfg.pilot.script()
    return script, ctx


def initial_state(cfg: ScenarioConfig) -> np.ndarray:
    return cfg.model._init.as_array()


# ---------------------------------------------------------------------------
# Built-in scenarios
# ---------------------------------------------------------------------------


def _phases(*rows) -> List[PilotPhaseCfg]:
    return [PilotPhaseCfg(t0=r[0], t1=r[1], law=r[2], params=(r[3] if len(r) > 3 else {})) for r in rows]


def _script(name, phase_cfgs) -> PilotScript:
    return PilotScript(name, [PilotPhase(p.t0, p.t1, p.law, dict(p.params)) for p in phase_cfgs])


_NULL_PHASES = _phases((0.0, 30.0, "trim"))

_GLIMIT_PHASES = _phases(
    (0.0, 5.0, "trim"),
    (5.0, 7.5, "nz_step", {"u_z": 7.0}),
    (7.5, 14.5, "nz_step", {"u_z": -1.0}),
    (14.5, 17.0, "nz_step", {"u_z": 7.0}),
    (17.0, 25.0, "pitch_track", {"theta": 0.0}),
)

_CEILING_FLOOR_PHASES = _phases(
    (0.0, 5.0, "trim"),
    (5.0, 45.0, "pitch_track", {"theta": math.radians(8.0)}),
    (45.0, 95.0, "pitch_track", {"theta": math.radians(-11.0)}),
    (95.0, 108.0, "pitch_track", {"theta": math.radians(5.0)}),
    (108.0, 110.0, "pitch_track", {"theta": 0.0}),
)

_GEOFENCE_PHASES = _phases(
    (0.0, 45.0, "const", {"u_P": 0.0, "u_z": 1.0}),
    (45.0, 115.0, "bank_toward_fence", {"phi": math.radians(45.0)}),
    (115.0, 120.0, "trim"),
)

_GEOFENCE_FLOOR_PHASES = _phases(
    (0.0, 15.0, "trim"),
    (15.0, 40.0, "pitch_track", {"theta": math.radians(4.0)}),
    (40.0, 135.0, "pitch_track", {"theta": math.radians(-5.0)}),
    (135.0, 150.0, "pitch_track", {"theta": math.radians(3.0)}),
)

_COMBINED_PHASES = _phases(
    (0.0, 10.0, "trim"),
    (10.0, 70.0, "pitch_track", {"theta": math.radians(-3.0)}),
    (70.0, 110.0, "bank_toward_fence", {"phi": math.radians(45.0)}),
    (110.0, 135.0, "bank_toward_fence", {"phi": math.radians(-30.0), "theta": math.radians(5.0)}),
    (135.0, 170.0, "bank_hold_pitch_toward", {"phi": math.radians(45.0), "theta": math.radians(-4.0)}),
    (170.0, 178.0, "nz_step", {"u_z": 7.0}),
    (178.0, 202.0, "bank_toward_fence", {"phi": math.radians(-30.0), "theta": math.radians(5.0)}),
    (202.0, 210.0, "pitch_track", {"theta": 0.0}),
)

_QUAD_PHASES = _phases(
    (0.0, 9.5, "quad_track", {"vx": 28.0}),
    (9.5, 12.0, "quad_hover"),
)

BUILTIN_SCRIPTS: Dict[str, PilotScript] = {
    "null_trim": _script("null_trim", _NULL_PHASES),
    "g_limit_assault": _script("g_limit_assault", _GLIMIT_PHASES),
    "ceiling_floor_assault": _script("ceiling_floor_assault", _CEILING_FLOOR_PHASES),
    "geofence_assault": _script("geofence_assault", _GEOFENCE_PHASES),
    "geofence_floor": _script("geofence_floor", _GEOFENCE_FLOOR_PHASES),
    "geofence_floor_gload": _script("geofence_floor_gload", _COMBINED_PHASES),
    "quad_geofence": _script("quad_geofence", _QUAD_PHASES),
}


def _fw_model(H_ft: float, psi_deg: float = 0.0) -> dict:
    return {
        "kind": "fixed_wing",
        "params": {"V_T": 150.0},
        "initial_state": {"H_ft": H_ft, "psi_deg": psi_deg},
    }


def builtin_scenarios() -> Dict[str, ScenarioConfig]:
    """The five flight-test scenario classes, the quadrotor geofence
    scenario, and a null (no-intervention) baseline."""
    scenarios = {}

    scenarios["null_trim"] = ScenarioConfig(
        name="null_trim",
        model=_fw_model(21000.0),
        safety={"constraints": [{"name": "floor", "kind": "alt_floor", "H_min": 500.0}]},
        backup={"kind": "turn"},
        blend={"beta": 1.0},
        pilot={"name": "null_trim"},
        run={"duration": 30.0},
    )

    # The sustained 4 g pull reaches a steep climb; arresting it is limited
    # by the 0.2 g load floor, so completing the backup turn takes ~45 s.
    # With no position constraint nearby the longer horizon costs nothing
    # and keeps the implicit set from flagging the (safe) climb.
    scenarios["g_limit_assault"] = ScenarioConfig(
        name="g_limit_assault",
        model=_fw_model(21000.0),
        safety={"constraints": [{"name": "floor", "kind": "alt_floor", "H_min": 500.0}]},
        backup={"kind": "turn", "horizon": 60.0},
        blend={"beta": 1.0},
        pilot={"name": "g_limit_assault"},
        run={"duration": 25.0},
        limits={"load": (0.2, 4.0)},
    )

    scenarios["ceiling_floor_assault"] = ScenarioConfig(
        name="ceiling_floor_assault",
        model=_fw_model(20950.0),
        safety={
            "constraints": [
                {"name": "floor", "kind": "alt_floor", "H_min_ft": 18700.0},
                {"name": "ceiling", "kind": "alt_ceiling", "H_max_ft": 22700.0},
            ]
        },
        backup={"kind": "turn"},
        blend={"beta": 2.5},
        pilot={"name": "ceiling_floor_assault"},
        run={"duration": 110.0, "turn_away_times": [45.0, 95.0]},
    )

    scenarios["geofence_assault"] = ScenarioConfig(
        name="geofence_assault",
        model=_fw_model(21000.0),
        safety={
            "constraints": [
                {"name": "fence", "kind": "geofence", "p_g": (6000.0, 0.0), "n_g": (-1.0, 0.0)}
            ]
        },
        backup={"kind": "turn"},
        blend={"beta": 1.0},
        pilot={"name": "geofence_assault"},
        run={"duration": 120.0},
    )

    scenarios["geofence_floor"] = ScenarioConfig(
        name="geofence_floor",
        model=_fw_model(21500.0),
        safety={
            "constraints": [
                {"name": "fence", "kind": "geofence", "p_g": (14000.0, 0.0), "n_g": (-1.0, 0.0)},
                {"name": "floor", "kind": "alt_floor", "H_min_ft": 18700.0},
            ]
        },
        backup={"kind": "turn"},
        blend={"beta": 1.0},
        pilot={"name": "geofence_floor"},
        run={"duration": 150.0, "filter_disable_at": 140.0},
    )

    scenarios["geofence_floor_gload"] = ScenarioConfig(
        name="geofence_floor_gload",
        model=_fw_model(20000.0),
        safety={
            "constraints": [
                {"name": "fence", "kind": "geofence", "p_g": (12000.0, 0.0), "n_g": (-1.0, 0.0)},
                {"name": "floor", "kind": "alt_floor", "H_min_ft": 18700.0},
            ]
        },
        backup={"kind": "turn"},
        # the steeper blending recovers pilot authority faster when loitering
        # within a turn radius of the fence, at the cost of some oscillation
        # while riding it
        blend={"beta": 1.3},
        pilot={"name": "geofence_floor_gload"},
        run={"duration": 210.0, "turn_away_times": [110.0, 178.0]},
        limits={"load": (0.2, 4.0)},
    )

    scenarios["quad_geofence"] = ScenarioConfig(
        name="quad_geofence",
        model={
            "kind": "quadrotor",
            "initial_state": {"p": (-50.0, 0.0, 0.0), "v": (28.0, 0.0, 0.0)},
        },
        safety={
            "constraints": [
                {"name": "box_x", "kind": "box_x", "center": 0.0, "half": 75.0},
                {"name": "box_y", "kind": "box_y", "center": 0.0, "half": 75.0},
                {"name": "box_z", "kind": "box_z", "center": 0.0, "half": 30.0},
            ]
        },
        backup={"kind": "quad_velocity", "horizon": 3.0, "rollout_dt": 0.02, "quad": {}},
        blend={"beta": 20.0},
        pilot={"name": "quad_geofence"},
        run={"duration": 12.0},
    )

    return scenarios
