"""FastAPI application: REST endpoints over the scenario engine and the
live-session web-socket endpoint.

One logical tick loop runs per session.  In real-time mode the loop is
pinned to the wall clock at the scenario's sim_dt (telemetry every Nth
tick); frames are pushed through a bounded queue that drops the oldest
frame on overflow so serialization never blocks the tick deadline.  In
lockstep mode (test affordance) the session advances exactly one tick per
`input` frame and replies synchronously with that tick's telemetry.

A protocol violation closes the offending session only; the server and
other sessions keep running.
"""

from __future__ import annotations

import asyncio
import json
import logging
from typing import Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import ValidationError

from ..scenarios import builtin_scenarios
from . import handlers
from .models import (
    BenchmarkRequest,
    BenchmarkResponse,
    InputMsg,
    ProbeRequest,
    ProbeResponse,
    RunRequest,
    RunResponse,
    ScenarioListResponse,
    StartMsg,
    error_frame,
)
from .sessions import LiveSession

log = logging.getLogger("rta.service")

TELEMETRY_QUEUE_MAX = 64

app = FastAPI(title="runtime-assurance flight service", version="0.1.0")


@app.get("/scenarios", response_model=ScenarioListResponse)
def get_scenarios():
    return handlers.list_scenarios()


@app.post("/run", response_model=RunResponse)
def post_run(req: RunRequest):
    try:
        return handlers.run(req)
    except (KeyError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


@app.post("/probe", response_model=ProbeResponse)
def post_probe(req: ProbeRequest):
    try:
        return handlers.probe(req)
    except (KeyError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


@app.post("/benchmark", response_model=BenchmarkResponse)
def post_benchmark(req: BenchmarkRequest):
    try:
        return handlers.run_benchmark(req)
    except (KeyError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc))


class _SessionConnection:
    """Per-connection state: the session plus its telemetry queue/tasks."""

    def __init__(self, ws: WebSocket):
        self.ws = ws
        self.session: Optional[LiveSession] = None
        self.queue: asyncio.Queue = asyncio.Queue(maxsize=TELEMETRY_QUEUE_MAX)
        self.ticker: Optional[asyncio.Task] = None
        self.sender: Optional[asyncio.Task] = None

    def enqueue(self, frame: dict):
        if frame is None:
            return
        try:
            self.queue.put_nowait(frame)
        except asyncio.QueueFull:
            try:
                self.queue.get_nowait()  # drop oldest
                if self.session:
                    self.session.dropped_frames += 1
            except asyncio.QueueEmpty:
                pass
            self.queue.put_nowait(frame)

    async def _send_loop(self):
        while True:
            frame = await self.queue.get()
            await self.ws.send_text(json.dumps(frame))

    async def _tick_loop(self):
        session = self.session
        loop = asyncio.get_running_loop()
        next_deadline = loop.time() + session.dt
        while True:
            await asyncio.sleep(max(0.0, next_deadline - loop.time()))
            if not session.paused:
                try:
                    # catch up if we fell behind, within one tick of wall time
                    for _ in range(3):
                        self.enqueue(session.tick())
                        next_deadline += session.dt
                        if next_deadline > loop.time():
                            break
                except RuntimeError as exc:
                    self.enqueue(error_frame("domain_exit", str(exc)))
                    session.paused = True
            else:
                next_deadline = loop.time() + session.dt

    def stop_tasks(self):
        for task in (self.ticker, self.sender):
            if task is not None:
                task.cancel()
        self.ticker = self.sender = None

    async def start_session(self, msg: StartMsg):
        self.stop_tasks()
        if self.session is not None:
            self.session.archive()
        cfg = handlers.resolve_scenario(msg.scenario, None)
        self.session = LiveSession(
            cfg, lockstep=msg.lockstep, telemetry_divisor=msg.telemetry_divisor
        )
        self.queue = asyncio.Queue(maxsize=TELEMETRY_QUEUE_MAX)
        self.sender = asyncio.create_task(self._send_loop())
        # acknowledgement: a telemetry frame at t = 0 with the initial state
        self.enqueue(self.session.peek_frame())
        if not self.session.lockstep:
            self.ticker = asyncio.create_task(self._tick_loop())

    async def handle(self, raw: str):
        try:
            data = json.loads(raw)
            mtype = data.get("type")
        except (json.JSONDecodeError, AttributeError):
            raise ProtocolError("bad_json", "frames must be JSON objects")
        if mtype == "start":
            try:
                await self.start_session(StartMsg(**data))
            except (ValidationError, KeyError, ValueError) as exc:
                raise ProtocolError("bad_start", str(exc))
        elif mtype == "input":
            if self.session is None:
                raise ProtocolError("no_session", "send start first")
            try:
                msg = InputMsg(**data)
            except ValidationError as exc:
                raise ProtocolError("bad_input", str(exc))
            self.session.apply_input(msg.uP_d, msg.uz_d)
            if self.session.lockstep and not self.session.paused:
                self.enqueue(self.session.tick())
        elif mtype == "pause":
            if self.session:
                self.session.paused = True
        elif mtype == "resume":
            if self.session:
                self.session.paused = False
        elif mtype == "reset":
            if self.session is None:
                raise ProtocolError("no_session", "send start first")
            self.session.archive()
            self.session.reset()
            self.enqueue(self.session.peek_frame())
        else:
            raise ProtocolError("unknown_type", f"unknown frame type {mtype!r}")


class ProtocolError(Exception):
    def __init__(self, code: str, detail: str):
        super().__init__(detail)
        self.code = code
        self.detail = detail


@app.websocket("/session")
async def session_endpoint(ws: WebSocket):
    await ws.accept()
    conn = _SessionConnection(ws)
    await ws.send_text(
        json.dumps(
            {
                "type": "scenario_list",
                "scenarios": [s.model_dump() for s in handlers.list_scenarios().scenarios],
            }
        )
    )
    try:
        while True:
            raw = await ws.receive_text()
            try:
                await conn.handle(raw)
            except ProtocolError as exc:
                await ws.send_text(json.dumps(error_frame(exc.code, exc.detail)))
                break
            except RuntimeError as exc:
                await ws.send_text(json.dumps(error_frame("domain_exit", str(exc))))
                break
    except WebSocketDisconnect:
        pass
    finally:
        conn.stop_tasks()
        if conn.session is not None:
            try:
                conn.session.archive()
            except OSError as exc:
                log.warning("session archive failed: %s", exc)
        try:
            await ws.close()
        except RuntimeError:
            pass
