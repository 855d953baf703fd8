"""Strategy templates: (unsafe edges, co-live edges, live-groups).

A memoryless player-0 strategy satisfies a template iff it never picks an
unsafe or co-live edge and, at every source of a live-group that still has a
group edge to offer, it picks a group edge.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ctxctl.games.graph import GameGraph, P0


def _edge_set(edges) -> frozenset:
    return frozenset((int(u), int(v)) for (u, v) in edges)


@dataclass(frozen=True)
class StrategyTemplate:
    unsafe: frozenset = field(default_factory=frozenset)
    colive: frozenset = field(default_factory=frozenset)
    livegroups: tuple = ()

    @staticmethod
    def make(unsafe=(), colive=(), livegroups=()) -> "StrategyTemplate":
        return StrategyTemplate(
            _edge_set(unsafe),
            _edge_set(colive),
            tuple(_edge_set(g) for g in livegroups if g),
        )

    def validate(self, graph: GameGraph) -> None:
        """All template edges must exist and originate at player-0 vertices."""
        for e in itertools.chain(self.unsafe, self.colive, *self.livegroups):
            u, v = e
            if not graph.has_edge(u, v):
                raise ValueError(f"template edge ({u},{v}) is not in the graph")
            if graph.owners[u] != P0:
                raise ValueError(f"template edge ({u},{v}) does not start at a P0 vertex")

    def forbidden(self) -> frozenset:
        return self.unsafe | self.colive

    def sources(self, group: frozenset) -> frozenset:
        return frozenset(u for (u, _) in group)


def template_compliant(strategy: Mapping[int, int], template: StrategyTemplate) -> bool:
    """Check the three play-level template conditions for a memoryless strategy:
    no unsafe edge chosen, no co-live edge chosen, and every live-group source
    whose choice set meets the group picks a group edge."""
    chosen = {(v, t) for v, t in strategy.items()}
    if chosen & template.unsafe:
        return False
    if chosen & template.colive:
        return False
    for group in template.livegroups:
        for src in template.sources(group):
            if src in strategy and (src, strategy[src]) not in group:
                return False
    return True


def compliant_strategies(
    graph: GameGraph,
    template: StrategyTemplate,
    region: Iterable[int],
    rng=None,
    count: int | None = None,
):
    """Enumerate (or sample, when ``rng`` is given) memoryless P0 strategies
    over ``region`` that satisfy the template.

    Choices are restricted to successors inside ``region`` so the sampled
    strategies stay within a winning set.  Yields dicts; raises if some P0
    vertex in the region has no compliant choice.
    """
    reg = sorted(set(region))
    p0 = [v for v in reg if graph.owners[v] == P0 and graph.succ[v]]
    options = []
    for v in p0:
        allowed = [
            s
            for s in graph.succ[v]
            if s in set(reg) and (v, s) not in template.unsafe and (v, s) not in template.colive
        ]
        for group in template.livegroups:
            if any(u == v for (u, _) in group):
                in_group = [s for s in allowed if (v, s) in group]
                if in_group:
                    allowed = in_group
        if not allowed:
            raise ValueError(f"vertex {v} has no template-compliant successor in the region")
        options.append(allowed)

    if rng is not None:
        n = count if count is not None else 1
        for _ in range(n):
            yield {v: rng.choice(opts) for v, opts in zip(p0, options)}
        return

    for combo in itertools.product(*options):
        strat = dict(zip(p0, combo))
        if count is not None:
            count -= 1
            if count < 0:
                return
        yield strat
