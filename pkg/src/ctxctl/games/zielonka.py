"""Zielonka's recursive algorithm, with winning-strategy templates extracted
along the recursion.

Dead-ends are handled by totalising the game once at the boundary: a fresh
even self-loop sink catches player-1 dead-ends (good for player 0), an odd
one catches player-0 dead-ends.  Inside the recursion every subgame is
dead-end free because removing an attractor never removes a vertex's last
remaining successor.

Template pieces gathered per recursion level:
  * live-group: all rank-decreasing P0 edges of the attractor to the
    top even priority, when that attractor ends up winning;
  * co-live: every P0 edge that exits the sub-region player 0 rescued from
    the top odd priority's attractor (using such an edge forever would let
    player 1 drag the play back through the odd priority);
  * unsafe: globally, every P0 edge from the winning into the losing region.
"""

from __future__ import annotations

from dataclasses import dataclass

from ctxctl.games.attractor import attractor
from ctxctl.games.graph import GameGraph, ParityGame, P0, P1
from ctxctl.games.templates import StrategyTemplate


@dataclass(frozen=True)
class ParitySolution:
    win0: frozenset
    win1: frozenset
    strategy0: dict
    strategy1: dict
    template: StrategyTemplate

    def __iter__(self):
        return iter((self.win0, self.win1, self.strategy0, self.strategy1))


def _totalise(game: ParityGame):
    """Append an even and an odd self-loop sink and wire dead-ends to them."""
    graph = game.graph
    dead0 = graph.dead_ends(P0)
    dead1 = graph.dead_ends(P1)
    if not dead0 and not dead1:
        return game, None, None
    owners = list(graph.owners)
    labels = list(graph.labels)
    prio = list(game.priority)
    edges = list(graph.edges)
    even_sink = odd_sink = None
    if dead1:
        even_sink = len(owners)
        owners.append(P1)
        labels.append(frozenset())
        prio.append(0)
        edges.append((even_sink, even_sink))
        edges.extend((v, even_sink) for v in sorted(dead1))
    if dead0:
        odd_sink = len(owners)
        owners.append(P0)
        labels.append(frozenset())
        prio.append(1)
        edges.append((odd_sink, odd_sink))
        edges.extend((v, odd_sink) for v in sorted(dead0))
    total = ParityGame(GameGraph(owners, edges, labels), prio)
    return total, even_sink, odd_sink


def _solve(game: ParityGame, active: frozenset):
    """Recursive Zielonka on the sub-arena ``active`` (dead-end free).

    Returns (win0, win1, strat0, strat1, colive, livegroups); the last two
    only constrain player 0 and cover exactly win0.
    """
    if not active:
        return frozenset(), frozenset(), {}, {}, set(), []

    graph = game.graph
    d = max(game.priority[v] for v in active)
    i = d % 2
    top = frozenset(v for v in active if game.priority[v] == d)

    att = attractor(graph, i, top, domain=active)
    sub = active - att.region
    w0p, w1p, s0p, s1p, colive_p, groups_p = _solve(game, sub)
    won_sub = (w0p, w1p)[1 - i]  # opponent's sub-win

    if not won_sub:
        # player i takes the whole arena
        strat_i = dict((s0p, s1p)[i])
        strat_i.update(att.strategy)
        for v in top:
            if graph.owners[v] == i and v not in strat_i:
                choice = next((s for s in graph.succ[v] if s in active), None)
                if choice is not None:
                    strat_i[v] = choice
        strat_o = {}
        colive = set(colive_p)
        groups = list(groups_p)
        if i == P0:
            progress = frozenset(
                (v, s)
                for v in att.region - top
                if graph.owners[v] == P0
                for s in graph.succ[v]
                if s in att.region and att.rank.get(s, 10 ** 9) < att.rank[v]
            )
            if progress:
                groups.append(progress)
            win0, win1, s0, s1 = active, frozenset(), strat_i, strat_o
        else:
            # player 1 wins everything: no player-0 obligations to report
            win0, win1, s0, s1 = frozenset(), active, strat_o, strat_i
            colive, groups = set(), []
        return win0, win1, s0, s1, colive, groups

    o = 1 - i
    batt = attractor(graph, o, won_sub, domain=active)
    w0pp, w1pp, s0pp, s1pp, colive_pp, groups_pp = _solve(game, active - batt.region)

    strat_o = dict((s0pp, s1pp)[o])
    for v, t in batt.strategy.items():
        strat_o.setdefault(v, t)
    for v, t in ((s0p, s1p)[o]).items():
        if v in won_sub:
            strat_o.setdefault(v, t)
    strat_i = dict((s0pp, s1pp)[i])

    if o == P0:
        win0 = w0pp | batt.region
        win1 = w1pp
        colive = set(colive_pp) | set(colive_p)
        groups = list(groups_pp) + list(groups_p)
        # player 0 must eventually stop leaving the rescued sub-region
        for v in won_sub:
            if graph.owners[v] != P0:
                continue
            for s in graph.succ[v]:
                if s in active and s not in won_sub:
                    colive.add((v, s))
        progress = frozenset(
            (v, s)
            for v in batt.region - won_sub
            if graph.owners[v] == P0
            for s in graph.succ[v]
            if s in batt.region and batt.rank.get(s, 10 ** 9) < batt.rank[v]
        )
        if progress:
            groups.append(progress)
        return win0, win1, strat_o, strat_i, colive, groups

    win0 = w0pp
    win1 = w1pp | batt.region
    return win0, win1, strat_i, strat_o, set(colive_pp), list(groups_pp)


def _solve_total(game: ParityGame):
    win0, win1, s0, s1, colive, groups = _solve(game, frozenset(game.graph.vertices))
    unsafe = set()
    for (u, v) in game.graph.edges:
        if game.graph.owners[u] == P0 and u in win0 and v in win1:
            unsafe.add((u, v))
    inside = lambda e: e[0] in win0 and e[1] in win0
    colive = {e for e in colive if inside(e)} - unsafe
    groups = [{e for e in g if inside(e)} - unsafe for g in groups]
    template = StrategyTemplate.make(unsafe, colive, groups)
    return win0, win1, s0, s1, template


def solve_parity(game: ParityGame) -> ParitySolution:
    """Winning regions and memoryless strategies for both players."""
    total, even_sink, odd_sink = _totalise(game)
    win0, win1, s0, s1, template = _solve_total(total)
    if even_sink is None and odd_sink is None:
        return ParitySolution(win0, win1, s0, s1, template)

    orig = frozenset(game.graph.vertices)
    sinks = {even_sink, odd_sink} - {None}
    s0 = {v: t for v, t in s0.items() if v in orig and t not in sinks}
    s1 = {v: t for v, t in s1.items() if v in orig and t not in sinks}
    keep = lambda es: frozenset(e for e in es if e[0] in orig and e[1] in orig)
    template = StrategyTemplate(
        keep(template.unsafe),
        keep(template.colive),
        tuple(g2 for g2 in (keep(g) for g in template.livegroups) if g2),
    )
    return ParitySolution(win0 & orig, win1 & orig, s0, s1, template)


def compute_template(game: ParityGame):
    """Player-0 winning region together with a winning strategy template."""
    sol = solve_parity(game)
    return sol.win0, sol.template
