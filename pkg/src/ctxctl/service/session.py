"""Live steering session: one simulation advanced in real-time-scaled steps
by a background thread, client messages serialized through a queue, frames
fanned out identically to every connected client.

Frames (JSON bodies, see the wire protocol):
    {"type":"state","seq":n,"t":s,"x":[..],"labels":[..],"obs":[..],
     "nu":id,"controller":"C3"}
    {"type":"event","t":s,"kind":"label|mode|switch","detail":...}
    {"type":"verdict","clause":"...","status":"sat|viol|inconclusive"}
    {"type":"error","message":"..."}
"""

from __future__ import annotations

import threading
import time

import numpy as np

from ctxctl.runtime.schedule import DisturbanceSchedule
from ctxctl.runtime.simulate import Simulator, monitor_trace
from ctxctl.spec.fragment import classify_fragment

FRAME_HZ = 30.0


class SteeringSession:
    def __init__(self, loaded, pace: float = 1.0, horizon: float = 1e9):
        self.loaded = loaded
        self.scenario = loaded.scenario
        self.pace = pace
        self.horizon = horizon
        self.fragment = classify_fragment(
            self.scenario.spec.formula, self.scenario.spec.atom_classes)
        self.modes = sorted(self.fragment.modes)
        self.frames: list = []
        self._cond = threading.Condition()
        self._commands: list = []
        self._paused = False
        self._stop = False
        self._thread = None
        self._verdict_at = 0.0
        self._event_cursor = 0
        self._start()

    # ---------------------------------------------------------------- core

    def _initial_obs(self):
        mode = sorted(self.scenario.initial_obs & frozenset(self.modes))
        chosen = mode[0] if mode else (self.modes[0] if self.modes else None)
        obs = set(self.scenario.initial_obs)
        obs -= set(self.modes)
        if chosen:
            obs.add(chosen)
        return frozenset(obs)

    def _start(self):
        schedule = DisturbanceSchedule(self._initial_obs(), [],
                                       dwell=self.scenario.config["dwell"])
        self.sim = Simulator(self.scenario, self.loaded.policy(), self.loaded.labelmap,
                             schedule, self.scenario.initial_state, self.horizon)
        self._event_cursor = 0
        self._verdict_at = 0.0
        self._emit_state()

    def _emit_state(self):
        sim = self.sim
        with self._cond:
            seq = len(self.frames)
            self.frames.append({
                "type": "state",
                "seq": seq,
                "t": round(sim.t, 6),
                "x": [round(float(v), 6) for v in sim.x],
                "labels": sorted(sim.label),
                "obs": sorted(sim.obs),
                "nu": sim.nu,
                "controller": sim.entry.control_prop if sim.entry else "-",
            })
            self._cond.notify_all()

    def _emit(self, frame):
        with self._cond:
            frame = dict(frame)
            frame["seq"] = len(self.frames)
            self.frames.append(frame)
            self._cond.notify_all()

    def _drain_commands(self):
        with self._cond:
            cmds, self._commands = self._commands, []
        for cmd in cmds:
            kind = cmd.get("type")
            if kind == "pause":
                self._paused = True
            elif kind == "resume":
                self._paused = False
            elif kind == "reset":
                x0 = cmd.get("x0")
                if x0 is not None:
                    self.scenario.initial_state = np.asarray(x0, dtype=float)
                self._start()
            elif kind == "set_mode":
                mode = cmd.get("mode")
                if mode not in self.modes:
                    self._emit({"type": "error", "message": f"unknown mode {mode!r}"})
                    continue
                dwell = self.scenario.config["dwell"]
                if self.sim.t - self.sim.last_obs_change < dwell and self.sim.t > 0:
                    self._emit({"type": "error",
                                "message": f"dwell time {dwell}s not elapsed"})
                    continue
                self.sim.inject_obs(frozenset([mode]))
            else:
                self._emit({"type": "error", "message": f"unknown message {kind!r}"})

    def tick(self, dt: float):
        """Advance the simulation by dt seconds of simulated time."""
        self._drain_commands()
        if self._paused:
            return
        target = self.sim.t + dt
        guard = 0
        while self.sim.t < target - 1e-9 and not self.sim.done and guard < 64:
            before = len(self.sim.trace.events)
            self.sim.step(budget=target - self.sim.t)
            for ev in self.sim.trace.events[before:]:
                if ev["kind"] in ("label", "mode", "switch"):
                    self._emit({"type": "event", "t": ev["t"], "kind": ev["kind"],
                                "detail": ev["detail"]})
            guard += 1
        self._emit_state()
        if self.sim.t - self._verdict_at >= 2.0:
            self._verdict_at = self.sim.t
            verdict, clauses = monitor_trace(self.sim.trace, self.fragment)
            for cv in clauses:
                self._emit({"type": "verdict", "clause": cv.clause,
                            "status": cv.verdict.value})

    # ------------------------------------------------------------- interface

    def submit(self, message: dict):
        with self._cond:
            self._commands.append(dict(message))

    def frames_since(self, cursor: int, timeout=1.0):
        with self._cond:
            if cursor >= len(self.frames):
                self._cond.wait(timeout)
            out = self.frames[cursor:]
        return out, cursor + len(out)

    def geometry(self) -> dict:
        sc = self.scenario
        regions = []
        for prop, guarded in sorted(sc.props.items()):
            for g in guarded:
                r = g.region
                if hasattr(r, "shape"):
                    regions.append({"prop": prop, "kind": "ellipse",
                                    "center": list(map(float, r.center)),
                                    "shape": [list(map(float, row)) for row in r.shape],
                                    "requires": sorted(g.requires),
                                    "forbids": sorted(g.forbids)})
                else:
                    regions.append({"prop": prop, "kind": "polytope",
                                    "anchor": list(map(float, r.anchor)),
                                    "normals": [list(map(float, row)) for row in r.normals],
                                    "requires": sorted(g.requires),
                                    "forbids": sorted(g.forbids)})
        basins = []
        for e in self.loaded.catalog.entries:
            basin = e.clf.basin
            basins.append({
                "controller": e.control_prop,
                "basin": e.basin_prop,
                "context": sorted(e.crwa.context),
                "reach": sorted(e.crwa.reach),
                "center": list(map(float, basin.center)),
                "shape": [list(map(float, row)) for row in basin.shape],
            })
        return {
            "box": {"lo": list(map(float, sc.box_lo)), "hi": list(map(float, sc.box_hi))},
            "regions": regions,
            "basins": basins,
            "modes": self.modes,
        }

    # ------------------------------------------------------------ background

    def run_background(self):
        def loop():
            dt_wall = 1.0 / FRAME_HZ
            while not self._stop:
                start = time.monotonic()
                self.tick(self.pace * dt_wall)
                elapsed = time.monotonic() - start
                time.sleep(max(0.0, dt_wall - elapsed))

        self._thread = threading.Thread(target=loop, daemon=True)
        self._thread.start()

    def stop(self):
        self._stop = True
        if self._thread:
            self._thread.join(timeout=2.0)
