"""Request/response and wire-frame models.

Web-socket frames are single JSON objects with a `type` field.

    client -> server: start {scenario, lockstep?, telemetry_divisor?}
                      input {uP_d, uz_d}   (rad/s, g)
                      pause | resume | reset
    server -> client: telemetry {t, state{...}, uP_d, uz_d, uP_out, uz_out,
                                 lambda, h_I, h{name: value}, active_constraint}
                      scenario_list {scenarios: [...]}
                      error {code, detail}

In lockstep mode (a test affordance) the session advances exactly one tick
per received input frame instead of free-running at wall-clock rate, so a
scripted client sees a bit-reproducible exchange.
"""

from __future__ import annotations

from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict

from ..scenarios import ScenarioConfig


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


# --- REST ------------------------------------------------------------------


class ScenarioInfo(StrictModel):
    name: str
    model: str
    duration: float
    sim_dt: float
    beta: float


class ScenarioListResponse(StrictModel):
    scenarios: List[ScenarioInfo]


class Overrides(StrictModel):
    sim_dt: Optional[float] = None
    rollout_dt: Optional[float] = None
    beta: Optional[float] = None
    duration: Optional[float] = None


class RunRequest(StrictModel):
    scenario: Optional[str] = None          # built-in name
    config: Optional[ScenarioConfig] = None  # or a full inline config
    overrides: Overrides = Overrides()
    include_trace: bool = True


class ReportBody(StrictModel):
    model_config = ConfigDict(extra="allow")
    scenario: str
    passed: bool
    failures: List[str]


class RunResponse(StrictModel):
    report: dict
    trace_csv: Optional[str] = None
    panel_files: Optional[Dict[str, str]] = None


class ProbeRequest(StrictModel):
    scenario: Optional[str] = None
    config: Optional[ScenarioConfig] = None
    samples: int = 500
    seed: int = 0
    margin0: float = 0.5


class ProbeResponse(StrictModel):
    report: dict
    summary: str


class BenchmarkRequest(StrictModel):
    scenario: Optional[str] = None
    ticks: int = 2000


class BenchmarkResponse(StrictModel):
    timing: Dict[str, float]


# --- wire frames -----------------------------------------------------------


class StartMsg(StrictModel):
    type: str = "start"
    scenario: str
    lockstep: bool = False
    telemetry_divisor: int = 1


class InputMsg(StrictModel):
    type: str = "input"
    uP_d: float
    uz_d: float


def telemetry_frame(model, t: float, x, dec, u_d, dropped: int) -> dict:
    return {
        "type": "telemetry",
        "t": t,
        "state": {nm: float(v) for nm, v in zip(model.state_names, x)},
        "uP_d": float(u_d[0]),
        "uz_d": float(u_d[1]),
        "uP_out": float(dec.u_out[0]),
        "uz_out": float(dec.u_out[1]),
        "lambda": dec.lam,
        "h_I": dec.h_I,
        "h": {nm: float(v) for nm, v in dec.h_by_name.items()},
        "active_constraint": dec.active_constraint,
        "dropped_frames": dropped,
    }


def error_frame(code: str, detail: str) -> dict:
    return {"type": "error", "code": code, "detail": detail}
