"""Piecewise-constant, right-continuous observation disturbances.

Sources: a schedule file (`at <t> set <obs-list>` lines), a seeded random
mode switcher with an enforced dwell time, or a live thread-safe queue fed
by the steering service.  The schedule carries only the externally chosen
observations (modes); effect-driven observations like the door are merged
in by the simulator."""

from __future__ import annotations

import queue
import random
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class DisturbanceSchedule:
    initial: frozenset
    events: list = field(default_factory=list)  # sorted (t, frozenset) pairs
    dwell: float = 0.0
    live: "queue.Queue | None" = None

    def __post_init__(self):
        self.events = sorted((float(t), frozenset(o)) for (t, o) in self.events)
        last = 0.0
        for t, _ in self.events:
            if t < 0:
                raise ValueError("schedule times must be nonnegative")
            if self.dwell > 0 and t - last < self.dwell - 1e-12 and t > 0:
                raise ValueError(f"schedule violates the dwell time at t={t}")
            last = t

    def value(self, t: float) -> frozenset:
        out = self.initial
        for (te, o) in self.events:
            if te <= t:
                out = o
            else:
                break
        return out

    def next_event_after(self, t: float):
        for (te, o) in self.events:
            if te > t + 1e-15:
                return te, o
        return None

    def drain_live(self, now: float, last_change: float):
        """Pop pending live observation changes; applied no earlier than the
        dwell bound.  Returns a (possibly empty) list of (t, obs) events."""
        if self.live is None:
            return []
        out = []
        t_ok = max(now, last_change + self.dwell)
        while True:
            try:
                obs = self.live.get_nowait()
            except queue.Empty:
                break
            out.append((t_ok, frozenset(obs)))
            t_ok += self.dwell if self.dwell > 0 else 0.0
        return out

    @staticmethod
    def from_file(path, dwell: float = 0.0) -> "DisturbanceSchedule":
        initial = frozenset()
        events = []
        for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if parts[0] != "at" or parts[2] != "set":
                raise ValueError(f"line {ln}: expected 'at <t> set <obs-list>'")
            t = float(parts[1])
            obs = frozenset(parts[3:])
            if t == 0.0:
                initial = obs
            else:
                events.append((t, obs))
        return DisturbanceSchedule(initial, events, dwell=dwell)

    @staticmethod
    def random_modes(
        modes,
        seed: int,
        horizon: float,
        dwell: float = 2.0,
        rate: float = 0.25,
        extra: frozenset = frozenset(),
    ) -> "DisturbanceSchedule":
        """Seeded mode switching: exponential gaps clipped below by the
        dwell time; ``extra`` observations ride along unchanged."""
        rng = random.Random(seed)
        modes = list(modes)
        current = rng.choice(modes)
        events = []
        t = 0.0
        initial = frozenset([current]) | extra
        while True:
            t += max(dwell, rng.expovariate(rate))
            if t >= horizon:
                break
            nxt = rng.choice([m for m in modes if m != current])
            current = nxt
            events.append((t, frozenset([current]) | extra))
        return DisturbanceSchedule(initial, events, dwell=dwell)

    def render(self) -> str:
        lines = [f"at 0 set {' '.join(sorted(self.initial))}"]
        for (t, o) in self.events:
            lines.append(f"at {t:.6f} set {' '.join(sorted(o))}")
        return "\n".join(lines) + "\n"
