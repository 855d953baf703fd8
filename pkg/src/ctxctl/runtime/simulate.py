"""Event-driven closed-loop simulation.

Between events the active surrogate controller's affine closed loop is
integrated with an adaptive explicit Runge-Kutta pair (dense output); after
every accepted span all region boundary functions are scanned and sign
changes are localised by bisection to the configured event tolerance.
Label-change events (region crossings, schedule discontinuities) apply the
scenario's observation effects atomically and advance the controller-
selection map; a window-based switch counter guards against event storms.

The Simulator class advances incrementally (the steering service drives it
in paced steps and feeds live observation changes); simulate() runs it to a
horizon in one call.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from ctxctl.runtime.labeling import LabelMap
from ctxctl.runtime.policy import HybridPolicy
from ctxctl.runtime.scenario import Scenario
from ctxctl.runtime.schedule import DisturbanceSchedule
from ctxctl.spec.monitor import trace_check


class EventStorm(Exception):
    def __init__(self, t, count, window):
        super().__init__(f"{count} controller switches within {window}s at t={t:.6f}")
        self.t = t


@dataclass
class SimTrace:
    samples: list = field(default_factory=list)  # (t, x, state_label, obs, nu, control_prop)
    events: list = field(default_factory=list)
    switch_count: int = 0
    horizon: float = 0.0

    def record(self, t, x, label, obs, nu, control):
        self.samples.append((float(t), np.asarray(x, dtype=float).copy(),
                             frozenset(label), frozenset(obs), int(nu), control))

    def log_event(self, t, kind, detail):
        self.events.append({"t": float(t), "kind": kind, "detail": detail})

    def letters(self):
        """Maximal constant-letter intervals: (letter, duration) pairs."""
        out = []
        for (t, x, label, obs, nu, control) in self.samples:
            letter = label | obs
            if out and out[-1][0] == letter:
                continue
            out.append((letter, t))
        letters = []
        for i, (letter, t) in enumerate(out):
            end = out[i + 1][1] if i + 1 < len(out) else self.horizon
            letters.append((letter, max(end - t, 0.0)))
        return letters

    def dump_json(self) -> str:
        lines = []
        for (t, x, label, obs, nu, control) in self.samples:
            lines.append(json.dumps({
                "t": round(t, 9),
                "x": [round(v, 9) for v in x.tolist()],
                "labels": sorted(label),
                "obs": sorted(obs),
                "nu": nu,
                "controller": control,
            }))
        return "\n".join(lines) + "\n"

    def dump_text(self) -> str:
        lines = [f"# events={len(self.events)} switches={self.switch_count}"]
        for ev in self.events:
            lines.append(f"{ev['t']:.6f} {ev['kind']} {ev['detail']}")
        return "\n".join(lines) + "\n"


class Simulator:
    """Incremental closed-loop stepper; one instance per run."""

    def __init__(self, scenario: Scenario, policy: HybridPolicy, labelmap: LabelMap,
                 schedule: DisturbanceSchedule, x0, horizon: float,
                 max_chunk: float = 0.5):
        self.scenario = scenario
        self.policy = policy
        self.labelmap = labelmap
        self.schedule = schedule
        self.horizon = float(horizon)
        self.max_chunk = max_chunk
        cfg = scenario.config
        self.eps_event = cfg["eps_event"]
        self.zeno_cap = cfg["zeno_cap"]
        self.sample_dt = cfg["sample_dt"]
        self.rtol, self.atol = cfg["rtol"], cfg["atol"]

        self.managed = frozenset().union(
            *(r.set_obs | r.clear_obs for r in scenario.effects)
        ) if scenario.effects else frozenset()
        managed_state = (frozenset(schedule.initial) | scenario.initial_obs) & self.managed
        self.external = frozenset(schedule.initial) - self.managed
        self.obs = self.external | managed_state
        self.last_obs_change = 0.0

        self.x = np.asarray(x0, dtype=float).copy()
        self.t = 0.0
        self.label = labelmap.label(self.x, self.obs)
        self.letter = self.label | self.obs
        self.nu = policy.gamma_init(self.letter)
        self.entry = policy.active_entry(self.nu)
        self.frozen = False
        self.trace = SimTrace(horizon=self.horizon)
        self.trace.record(self.t, self.x, self.label, self.obs, self.nu,
                          self.entry.control_prop if self.entry else "-")
        self.trace.log_event(0.0, "init", {
            "nu": self.nu,
            "controller": self.entry.control_prop if self.entry else "-",
        })
        self._switch_times = deque()
        self._next_sample = self.sample_dt

    @property
    def done(self) -> bool:
        return self.t >= self.horizon - 1e-12

    def _note_switch(self, at):
        self.trace.switch_count += 1
        self._switch_times.append(at)
        while self._switch_times and self._switch_times[0] < at - 1.0:
            self._switch_times.popleft()
        if len(self._switch_times) > self.zeno_cap:
            raise EventStorm(at, len(self._switch_times), 1.0)

    def _apply_letter(self, t, new_label, new_obs, kind, detail):
        new_letter = new_label | new_obs
        self.trace.log_event(t, kind, detail)
        if new_letter != self.letter:
            if not self.frozen:
                self.nu = self.policy.gamma_step(self.nu, new_letter)
                new_entry = self.policy.active_entry(self.nu)
                if new_entry is None:
                    self.frozen = True
                    self.trace.log_event(t, "assumption-violated", {"nu": self.nu})
                else:
                    if self.entry is None or new_entry.control_prop != self.entry.control_prop:
                        self._note_switch(t)
                        self.trace.log_event(t, "switch",
                                             {"controller": new_entry.control_prop})
                    self.entry = new_entry
            self.label, self.obs, self.letter = new_label, new_obs, new_letter
        self.trace.record(t, self.x, self.label, self.obs, self.nu,
                          self.entry.control_prop if self.entry else "-")

    def inject_obs(self, obs):
        """Live observation change (external part only), applied now."""
        external = frozenset(obs) - self.managed
        new_obs = external | (self.obs & self.managed)
        self.external = external
        new_label = self.labelmap.label(self.x, new_obs)
        self.last_obs_change = self.t
        self._apply_letter(self.t, new_label, new_obs, "mode", {"obs": sorted(new_obs)})

    def step(self, budget: float | None = None) -> float:
        """Advance until the next event or chunk end; returns the new time."""
        if self.done:
            return self.t
        ev = self.schedule.next_event_after(self.t)
        limit = self.t + (budget if budget is not None else self.max_chunk)
        t_stop = min(self.horizon, limit, ev[0] if ev else np.inf)
        if t_stop <= self.t + 1e-15:
            t_stop = min(self.horizon, self.t + max(budget or self.max_chunk, 1e-9))

        rhs, _, _ = self.scenario.dynamics.closed_loop(
            self.entry.clf.K, self.entry.clf.x_c, self.entry.clf.u0)
        sol = solve_ivp(rhs, (self.t, t_stop), self.x, method="RK45",
                        dense_output=True, rtol=self.rtol, atol=self.atol,
                        max_step=self.max_chunk)
        if not sol.success:
            raise RuntimeError(f"integrator failure at t={self.t}: {sol.message}")

        names = [n for (n, _) in self.labelmap.margins(self.x, self.obs)]

        def margins_at(tt):
            return np.array([m for (_, m) in self.labelmap.margins(sol.sol(tt), self.obs)])

        nodes = list(sol.t)
        ts = []
        for i in range(len(nodes) - 1):
            ts.append(nodes[i])
            ts.append(0.5 * (nodes[i] + nodes[i + 1]))
        ts.append(nodes[-1])

        crossing = None
        prev_t, prev_m = ts[0], margins_at(ts[0])
        for tt in ts[1:]:
            cur = margins_at(tt)
            flips = [j for j in range(len(cur)) if (prev_m[j] > 0) != (cur[j] > 0)]
            if flips:
                lo_t, hi_t = prev_t, tt
                while hi_t - lo_t > self.eps_event:
                    mid = 0.5 * (lo_t + hi_t)
                    mm = margins_at(mid)
                    if any((prev_m[j] > 0) != (mm[j] > 0) for j in flips):
                        hi_t = mid
                    else:
                        lo_t = mid
                flips.sort(key=lambda j: names[j])
                crossing = (hi_t, [names[j] for j in flips])
                break
            prev_t, prev_m = tt, cur

        if crossing is not None:
            tau, which = crossing
            tau_after = min(tau + self.eps_event, t_stop)
            while self._next_sample < tau:
                self.trace.record(self._next_sample, sol.sol(self._next_sample),
                                  self.label, self.obs, self.nu,
                                  self.entry.control_prop if self.entry else "-")
                self._next_sample += self.sample_dt
            self.x = sol.sol(tau_after)
            self.t = tau_after
            new_label = self.labelmap.label(self.x, self.obs)
            entered = (new_label - self.label) & self.scenario.state_atoms
            new_obs = self.scenario.apply_effects(entered, self.obs) if entered else self.obs
            if new_obs != self.obs:
                # an observation flip can toggle guarded regions: relabel
                new_label = self.labelmap.label(self.x, new_obs)
                self.last_obs_change = self.t
            self._apply_letter(self.t, new_label, new_obs, "label",
                               {"crossed": which, "letter": sorted(new_label | new_obs)})
            return self.t

        while self._next_sample < t_stop - 1e-12:
            self.trace.record(self._next_sample, sol.sol(self._next_sample),
                              self.label, self.obs, self.nu,
                              self.entry.control_prop if self.entry else "-")
            self._next_sample += self.sample_dt
        self.x = sol.sol(t_stop)
        self.t = t_stop

        if ev and abs(self.t - ev[0]) < 1e-12:
            _, sched_obs = ev
            self.external = frozenset(sched_obs) - self.managed
            new_obs = self.external | (self.obs & self.managed)
            new_label = self.labelmap.label(self.x, new_obs)
            self.last_obs_change = self.t
            self._apply_letter(self.t, new_label, new_obs, "mode",
                               {"obs": sorted(new_obs)})
        return self.t

    def run(self) -> SimTrace:
        if self.horizon <= 0:
            return self.trace
        while not self.done:
            self.step()
        self.trace.record(self.horizon, self.x, self.label, self.obs, self.nu,
                          self.entry.control_prop if self.entry else "-")
        return self.trace


def simulate(scenario, policy, labelmap, schedule, x0, horizon, max_chunk=0.5) -> SimTrace:
    sim = Simulator(scenario, policy, labelmap, schedule, x0, horizon, max_chunk)
    return sim.run()


def monitor_trace(trace: SimTrace, fragment, horizon: float = 8.0):
    """Per-clause three-valued verdicts of the run's generated trace."""
    letters = trace.letters()
    seq = [l for (l, _) in letters]
    durs = [d for (_, d) in letters]
    return trace_check(seq, fragment, durations=durs, horizon=horizon)
