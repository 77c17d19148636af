"""Live piloting sessions.

One session owns one simulated aircraft: the filter runtime, the sim
clock, the latest pilot input with its receipt time, and a ring buffer of
recent filter decisions.  Sessions are isolated from each other; within a
session everything runs on the event loop, so tick handling and message
handling are naturally serialized.

Stale input: if no input frame arrives for INPUT_TIMEOUT seconds, the
applied command decays linearly to the trim command over DECAY_SPAN
seconds (a silent client ends up flying straight and level under the
filter).
"""

from __future__ import annotations

import collections
import itertools
import math
import os
import time
from typing import Dict, List, Optional

import numpy as np

from ..harness import SimTrace, _step_state, export_trace
from ..scenarios import ScenarioConfig, build_pilot, build_runtime, initial_state

INPUT_TIMEOUT = 0.5  # s without input before decay starts
DECAY_SPAN = 1.0     # s over which a stale command fades to trim
TRIM_COMMAND = (0.0, 1.0)
RING_CAPACITY = 512

_session_ids = itertools.count(1)


class LiveSession:
    """State of one live-piloted aircraft."""

    def __init__(self, cfg: ScenarioConfig, lockstep: bool = False,
                 telemetry_divisor: int = 1):
        if cfg.model.kind != "fixed_wing":
            raise ValueError("live sessions fly the fixed-wing model")
        if telemetry_divisor < 1:
            raise ValueError("telemetry_divisor must be >= 1")
        self.id = next(_session_ids)
        self.cfg = cfg
        self.lockstep = lockstep
        self.telemetry_divisor = telemetry_divisor
        self.model, self.spec, self.limits, self.runtime = build_runtime(cfg)
        self.dt = cfg.run.sim_dt
        self.paused = False
        self.decisions = collections.deque(maxlen=RING_CAPACITY)
        self.dropped_frames = 0
        self._rows: List[dict] = []
        self.reset()

    def reset(self):
        self.x = initial_state(self.cfg)
        self.t = 0.0
        self.tick_count = 0
        self.runtime.reset()
        self._last_input: Optional[np.ndarray] = None
        self._last_input_time: Optional[float] = None
        self.decisions.clear()
        self._rows.clear()

    def apply_input(self, u_P_d: float, u_z_d: float, now: Optional[float] = None):
        if not (math.isfinite(u_P_d) and math.isfinite(u_z_d)):
            raise ValueError("input commands must be finite")
        self._last_input = np.array([u_P_d, u_z_d])
        self._last_input_time = time.monotonic() if now is None else now

    def effective_input(self, now: Optional[float] = None) -> np.ndarray:
        trim = np.array(TRIM_COMMAND)
        if self._last_input is None:
            return trim
        if self.lockstep:
            return self._last_input.copy()
        now = time.monotonic() if now is None else now
        age = now - self._last_input_time
        if age <= INPUT_TIMEOUT:
            return self._last_input.copy()
        a = min((age - INPUT_TIMEOUT) / DECAY_SPAN, 1.0)
        return (1.0 - a) * self._last_input + a * trim

    def peek_frame(self) -> dict:
        """Telemetry view of the current state without advancing or
        recording (the start/reset acknowledgement at t = 0)."""
        from .models import telemetry_frame

        u_d = self.effective_input()
        dec = self.runtime.decide(self.x, self.t, u_d)
        return telemetry_frame(self.model, self.t, self.x, dec, u_d, self.dropped_frames)

    def tick(self, now: Optional[float] = None) -> Optional[dict]:
        """Advance one sim step; returns a telemetry frame on emit ticks."""
        from .models import telemetry_frame

        u_d = self.effective_input(now)
        dec = self.runtime.decide(self.x, self.t, u_d)
        self.decisions.append(dec)
        self._rows.append(
            {
                "t": self.t, "x": self.x.copy(), "u_d": u_d.copy(),
                "dec": dec,
            }
        )
        frame = None
        if self.tick_count % self.telemetry_divisor == 0:
            frame = telemetry_frame(self.model, self.t, self.x, dec, u_d, self.dropped_frames)
        self.x = _step_state(self.model, self.x, dec.u_out, self.dt)
        self.t += self.dt
        self.tick_count += 1
        if not self.model.domain_ok(self.x):
            raise RuntimeError("aircraft left the model's valid domain")
        return frame

    def to_trace(self) -> SimTrace:
        names = self.spec.names
        n = len(self._rows)
        tr = SimTrace(
            model_kind=self.model.kind,
            constraint_names=list(names),
            t=np.array([r["t"] for r in self._rows]),
            states=np.array([r["x"] for r in self._rows]).reshape(n, -1),
            u_d=np.array([r["u_d"] for r in self._rows]).reshape(n, -1),
            u_out=np.array([r["dec"].u_out for r in self._rows]).reshape(n, -1),
            lam=np.array([r["dec"].lam for r in self._rows]),
            h_I=np.array([r["dec"].h_I for r in self._rows]),
            h_min=np.array([r["dec"].h_now for r in self._rows]),
            active=[r["dec"].active_constraint for r in self._rows],
            h_by_name={
                nm: np.array([r["dec"].h_by_name[nm] for r in self._rows]) for nm in names
            },
            filter_on=np.ones(n, dtype=bool),
        )
        return tr

    def archive(self) -> Optional[str]:
        """Write the session trace CSV to $RTA_LOG_DIR, if configured."""
        log_dir = os.environ.get("RTA_LOG_DIR")
        if not log_dir or not self._rows:
            return None
        os.makedirs(log_dir, exist_ok=True)
        path = os.path.join(
            log_dir, f"session_{self.id}_{time.strftime('%Y%m%d-%H%M%S')}.csv"
        )
        export_trace(self.to_trace(), path)
        return path
