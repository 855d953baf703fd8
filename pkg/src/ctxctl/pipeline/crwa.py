"""Top-down interface: translating a winning strategy template into
context-dependent reach-while-avoid objectives, one per allowed edge.

For a P0 vertex v and an allowed successor v' (not unsafe, not co-live),
the always-flavored objective avoids everything an unsafe successor of v is
labelled with; the eventually-always flavor additionally avoids the labels
of co-live successors.  The context is v's observation label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ctxctl.clf.synth import ContextRWA
from ctxctl.games import P0, ParityGame
from ctxctl.games.templates import StrategyTemplate


@dataclass(frozen=True)
class CrwaEntry:
    vertex: int
    successor: int
    always: ContextRWA | None
    eventual: ContextRWA | None
    skipped: tuple = ()  # flavors dropped because avoid met reach


@dataclass(frozen=True)
class ExtractedCrwas:
    entries: tuple
    dead_ends: frozenset  # P0 vertices whose every edge the template forbids

    def unique_crwas(self) -> tuple:
        seen = {}
        for e in self.entries:
            for crwa in (e.always, e.eventual):
                if crwa is not None and crwa not in seen:
                    seen[crwa] = None
        return tuple(seen)


def extract_crwas(
    game: ParityGame,
    template: StrategyTemplate,
    obs_atoms,
    state_atoms,
    region=None,
    skip_targets=frozenset(),
) -> ExtractedCrwas:
    """cRWAs for every template-allowed edge of P0 vertices in ``region``
    (default: all P0 vertices).  A vertex whose every edge is unsafe or
    co-live is reported as a dead-end instead of producing objectives.
    Edges into ``skip_targets`` (the assumption-violated zone) stay allowed
    but yield no objectives: they need no controller downstream."""
    graph = game.graph
    obs_atoms = frozenset(obs_atoms)
    state_atoms = frozenset(state_atoms)
    forbidden = template.forbidden()
    region = set(graph.vertices) if region is None else set(region)
    skip_targets = frozenset(skip_targets)

    entries = []
    dead = set()
    for v in sorted(region):
        if graph.owners[v] != P0 or not graph.succ[v]:
            continue
        allowed = [s for s in graph.succ[v] if (v, s) not in forbidden]
        if not allowed:
            dead.add(v)
            continue
        allowed = [s for s in allowed if s not in skip_targets]
        if not allowed:
            continue
        context = graph.labels[v] & obs_atoms
        avoid_always = frozenset().union(
            *(graph.labels[s] for s in graph.succ[v] if (v, s) in template.unsafe)
        ) if any((v, s) in template.unsafe for s in graph.succ[v]) else frozenset()
        avoid_event = frozenset().union(
            *(graph.labels[s] for s in graph.succ[v] if (v, s) in forbidden)
        ) if any((v, s) in forbidden for s in graph.succ[v]) else frozenset()
        avoid_always &= state_atoms
        avoid_event &= state_atoms
        for s in allowed:
            reach = graph.labels[s] & state_atoms
            skipped = []
            always = eventual = None
            if reach & avoid_always:
                skipped.append("always")
            else:
                always = ContextRWA(context, reach, avoid_always, "always")
            if reach & avoid_event:
                skipped.append("eventually-always")
            else:
                eventual = ContextRWA(context, reach, avoid_event, "eventually-always")
            entries.append(CrwaEntry(v, s, always, eventual, tuple(skipped)))
    return ExtractedCrwas(tuple(entries), frozenset(dead))
