"""REST handler logic, shared by the HTTP routes and the thin CLI client
(which calls these functions in-process when no server address is given)."""

from __future__ import annotations

import dataclasses

from ..harness import benchmark, export_trace, invariance_probe, run_scenario
from ..scenarios import ScenarioConfig, builtin_scenarios
from .models import (
    BenchmarkRequest,
    BenchmarkResponse,
    ProbeRequest,
    ProbeResponse,
    RunRequest,
    RunResponse,
    ScenarioInfo,
    ScenarioListResponse,
)


def resolve_scenario(name_or_none, config_or_none) -> ScenarioConfig:
    if (name_or_none is None) == (config_or_none is None):
        raise ValueError("give exactly one of 'scenario' (built-in name) or 'config'")
    if config_or_none is not None:
        return config_or_none
    name = name_or_none
    cfgs = builtin_scenarios()
    if name.endswith("_live") and name[: -len("_live")] in cfgs:
        name = name[: -len("_live")]
    if name not in cfgs:
        raise KeyError(f"unknown scenario {name!r}; see list-scenarios")
    return cfgs[name]


def apply_overrides(cfg: ScenarioConfig, ov) -> ScenarioConfig:
    cfg = cfg.model_copy(deep=True)
    if ov.sim_dt is not None:
        cfg.run.sim_dt = ov.sim_dt
    if ov.rollout_dt is not None:
        cfg.backup.rollout_dt = ov.rollout_dt
    if ov.beta is not None:
        cfg.blend.beta = ov.beta
    if ov.duration is not None:
        cfg.run.duration = ov.duration
    return cfg


def list_scenarios() -> ScenarioListResponse:
    infos = [
        ScenarioInfo(
            name=name, model=cfg.model.kind, duration=cfg.run.duration,
            sim_dt=cfg.run.sim_dt, beta=cfg.blend.beta,
        )
        for name, cfg in builtin_scenarios().items()
    ]
    return ScenarioListResponse(scenarios=infos)


def run(req: RunRequest) -> RunResponse:
    import os
    import tempfile

    from ..harness import render_report
    from ..scenarios import build_runtime

    cfg = apply_overrides(resolve_scenario(req.scenario, req.config), req.overrides)
    trace, report = run_scenario(cfg)
    resp = RunResponse(report=dataclasses.asdict(report))
    if req.include_trace:
        with tempfile.TemporaryDirectory() as td:
            trace_path = os.path.join(td, "trace.csv")
            export_trace(trace, trace_path)
            with open(trace_path) as f:
                resp.trace_csv = f.read()
            _, spec, _, _ = build_runtime(cfg)
            panels = {}
            for p in render_report(trace, report, spec, td):
                with open(p) as f:
                    panels[os.path.basename(p)] = f.read()
            resp.panel_files = panels
    return resp


def probe(req: ProbeRequest) -> ProbeResponse:
    cfg = resolve_scenario(req.scenario, req.config)
    rep = invariance_probe(cfg, samples=req.samples, seed=req.seed, margin0=req.margin0)
    return ProbeResponse(report=dataclasses.asdict(rep), summary=rep.summary())


def run_benchmark(req: BenchmarkRequest) -> BenchmarkResponse:
    cfg = resolve_scenario(req.scenario, None) if req.scenario else None
    return BenchmarkResponse(timing=benchmark(cfg, ticks=req.ticks))
