"""Command-line client.

All scenario/probe/benchmark logic lives in the service layer; the CLI
builds a request, dispatches it (in-process by default, over HTTP when
--server is given), and writes the results.

    rta list-scenarios
    rta run --scenario geofence_assault --out results/
    rta run --scenario my_scenario.yaml --out results/ --beta 2.0
    rta probe-invariance --scenario geofence_assault --samples 500 --seed 1
    rta benchmark --ticks 2000
    rta serve --bind 127.0.0.1:8000
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .scenarios import load_scenario
from .service import handlers
from .service.models import (
    BenchmarkRequest,
    Overrides,
    ProbeRequest,
    RunRequest,
)


def _overrides(args) -> Overrides:
    return Overrides(
        sim_dt=getattr(args, "dt", None),
        beta=getattr(args, "beta", None),
        duration=getattr(args, "duration", None),
    )


def _scenario_request_fields(args):
    """(name, config) from a --scenario argument that may be a built-in
    name or a path to a scenario file."""
    s = args.scenario
    if s and (s.endswith(".yaml") or s.endswith(".yml") or os.path.exists(s)):
        return None, load_scenario(s)
    return s, None


def _post(server: str, path: str, payload: dict) -> dict:
    import urllib.request

    req = urllib.request.Request(
        server.rstrip("/") + path,
        data=json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


def _get(server: str, path: str) -> dict:
    import urllib.request

    with urllib.request.urlopen(server.rstrip("/") + path) as resp:
        return json.loads(resp.read())


def cmd_list_scenarios(args) -> int:
    if args.server:
        body = _get(args.server, "/scenarios")
    else:
        body = handlers.list_scenarios().model_dump()
    for s in body["scenarios"]:
        print(
            f"{s['name']:24s} model={s['model']:<10s} duration={s['duration']:>6.1f} s "
            f"dt={s['sim_dt']} beta={s['beta']}"
        )
    return 0


def cmd_run(args) -> int:
    name, config = _scenario_request_fields(args)
    req = RunRequest(
        scenario=name, config=config, overrides=_overrides(args), include_trace=True
    )
    if args.server:
        body = _post(args.server, "/run", json.loads(req.model_dump_json(exclude_none=True)))
    else:
        body = json.loads(handlers.run(req).model_dump_json())

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "trace.csv"), "w") as f:
        f.write(body["trace_csv"])
    for fname, content in (body.get("panel_files") or {}).items():
        with open(os.path.join(args.out, fname), "w") as f:
            f.write(content)
    with open(os.path.join(args.out, "report.json"), "w") as f:
        json.dump(body["report"], f, indent=2)

    rep = body["report"]
    print(f"scenario: {rep['scenario']}")
    print(f"status: {'PASS' if rep['passed'] else 'FAIL'}")
    for failure in rep["failures"]:
        print(f"  {failure}")
    print(f"max lambda: {rep['max_lambda']:.4g}")
    print(f"tol_inv: {rep['tol_inv']:.4g} margin-units")
    print(f"wrote {args.out}/trace.csv and panel series")
    return 0 if rep["passed"] else 1


def cmd_probe(args) -> int:
    name, config = _scenario_request_fields(args)
    req = ProbeRequest(scenario=name, config=config, samples=args.samples, seed=args.seed)
    if args.server:
        body = _post(args.server, "/probe", json.loads(req.model_dump_json(exclude_none=True)))
    else:
        body = handlers.probe(req).model_dump()
    print(body["summary"])
    return 0 if body["report"]["violations"] == 0 and not body["report"]["failures"] else 1


def cmd_benchmark(args) -> int:
    req = BenchmarkRequest(scenario=args.scenario, ticks=args.ticks)
    if args.server:
        body = _post(args.server, "/benchmark", json.loads(req.model_dump_json(exclude_none=True)))
    else:
        body = handlers.run_benchmark(req).model_dump()
    t = body["timing"]
    print(
        f"per-tick (filter + integrate + serialize), {int(t['ticks'])} ticks at "
        f"sim_dt={t['sim_dt_s']} s, rollout {t['rollout_horizon_s']} s / {t['rollout_dt_s']} s:"
    )
    print(f"  mean {t['tick_ms_mean']:.3f} ms  p50 {t['tick_ms_p50']:.3f} ms  "
          f"p99 {t['tick_ms_p99']:.3f} ms  max {t['tick_ms_max']:.3f} ms")
    print(f"implicit margin alone: p50 {t['implicit_h_ms_p50']:.3f} ms  "
          f"p99 {t['implicit_h_ms_p99']:.3f} ms")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    host, _, port = args.bind.rpartition(":")
    from .service.app import app

    uvicorn.run(app, host=host or "127.0.0.1", port=int(port), log_level="info")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="rta", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-scenarios", help="list built-in scenarios")
    p.add_argument("--server", help="base URL of a running service (default: in-process)")
    p.set_defaults(fn=cmd_list_scenarios)

    p = sub.add_parser("run", help="run a scenario and write trace + report")
    p.add_argument("--scenario", required=True, help="built-in name or scenario file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dt", type=float, help="simulation step override (s)")
    p.add_argument("--beta", type=float, help="blending sharpness override")
    p.add_argument("--duration", type=float, help="run duration override (s)")
    p.add_argument("--server", help="base URL of a running service")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("probe-invariance", help="sample-based invariance check")
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--server", help="base URL of a running service")
    p.set_defaults(fn=cmd_probe)

    p = sub.add_parser("benchmark", help="per-tick timing on one core")
    p.add_argument("--scenario", default=None)
    p.add_argument("--ticks", type=int, default=2000)
    p.add_argument("--server", help="base URL of a running service")
    p.set_defaults(fn=cmd_benchmark)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--bind", default="127.0.0.1:8000", help="addr:port")
    p.set_defaults(fn=cmd_serve)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
