"""Reachability and parity games augmented with persistent live-groups.

A persistent live-group (S, C, T) is the assumption that a play which from
some point on stays inside S while taking a C-edge whenever one is available
must eventually visit T.  Augmenting a game with a set of such groups
weakens the objective to "all assumptions hold => objective holds", which is
how basins of attraction of low-level feedback controllers become usable by
the logical layer.

SolveReach first takes the plain player-0 attractor of the target, then asks
each group whether persistently playing its C-edges can drag additional
vertices in (an eventually-reach-or-stay safety game on the C-restricted
graph) and recurses with the enlarged target.  The augmented parity solver
is Zielonka's recursion with every player-0 attractor replaced by SolveReach.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from ctxctl.games.attractor import attractor
from ctxctl.games.graph import GameGraph, ParityGame, P0, P1


@dataclass(frozen=True)
class PersistentLiveGroup:
    """Sources S, player-0 edges C, targets T.

    The normal form has T inside S; semantically a play confined to S can
    only meet T inside S, so stray targets are inert and tolerated here
    (pipeline builders normalise them away and note the discrepancy).
    """

    sources: frozenset
    edges: frozenset
    targets: frozenset
    name: str = field(default="", compare=False)

    @staticmethod
    def make(sources, edges, targets, name="") -> "PersistentLiveGroup":
        return PersistentLiveGroup(
            frozenset(int(v) for v in sources),
            frozenset((int(u), int(v)) for (u, v) in edges),
            frozenset(int(v) for v in targets),
            name,
        )

    def validate(self, graph: GameGraph) -> None:
        for v in self.sources | self.targets:
            if not 0 <= v < graph.n:
                raise ValueError(f"group vertex {v} outside the graph")
        for (u, v) in self.edges:
            if not graph.has_edge(u, v):
                raise ValueError(f"group edge ({u},{v}) is not in the graph")
            if graph.owners[u] != P0:
                raise ValueError(f"group edge ({u},{v}) does not start at a P0 vertex")


@dataclass(frozen=True)
class AugmentedGame:
    game: ParityGame
    groups: tuple

    def __post_init__(self):
        for g in self.groups:
            g.validate(self.game.graph)


def restrict_graph(graph: GameGraph, c_edges) -> GameGraph:
    """The C-restricted graph: edge (v,v') survives iff it is in C or no
    C-edge leaves v.  Vertex set unchanged."""
    c = frozenset((int(u), int(v)) for (u, v) in c_edges)
    sources = {u for (u, _) in c}
    edges = [(u, v) for (u, v) in graph.edges if u not in sources or (u, v) in c]
    return GameGraph(graph.owners, edges, graph.labels)


def solve_eventually_or_stay(graph: GameGraph, reach, stay):
    """Winning region/strategy for "eventually reach A or stay in S forever",
    via the sink-merge reduction: merging A into a single absorbing (safe)
    sink turns the objective into plain safety, whose region is the
    complement of the opponent's attractor to the unsafe remainder.

    The reduction is only sound when no vertex outside A can be steered into
    A by player 0, so A is first closed under the player-0 attractor (a no-op
    for the reach sets produced inside SolveReach, which are attractors).
    The merged arena is never materialised: an edge into A counts as an edge
    to the safe sink, which no attractor to unsafe vertices can capture."""
    stay = frozenset(stay)
    closure = attractor(graph, P0, reach)
    reach = closure.region
    n = graph.n

    in_reach = [v in reach for v in range(n)]
    in_attr = [False] * n
    remaining = [0] * n
    queue = deque()

    for v in range(n):
        if in_reach[v]:
            continue
        if v not in stay:
            in_attr[v] = True
            queue.append(v)
            continue
        if graph.owners[v] == P0:
            if any(in_reach[s] for s in graph.succ[v]):
                remaining[v] = -1  # an escape into A: never forced to unsafe
            else:
                remaining[v] = sum(1 for s in graph.succ[v] if not in_reach[s])
                if remaining[v] == 0:  # true dead-end: lost by its owner
                    in_attr[v] = True
                    queue.append(v)

    while queue:
        u = queue.popleft()
        for p in graph.pred[u]:
            if in_reach[p] or in_attr[p]:
                continue
            if graph.owners[p] == P1:
                in_attr[p] = True
                queue.append(p)
            elif remaining[p] > 0:
                remaining[p] -= 1
                if remaining[p] == 0:
                    in_attr[p] = True
                    queue.append(p)

    region = set(reach)
    strategy = dict(closure.strategy)
    for v in range(n):
        if in_reach[v] or in_attr[v]:
            continue
        region.add(v)
        if graph.owners[v] == P0:
            for s in graph.succ[v]:
                if in_reach[s] or not in_attr[s]:
                    strategy[v] = s
                    break
    return frozenset(region), strategy


def _pre(graph: GameGraph, targets) -> frozenset:
    t = set(targets)
    return frozenset(u for (u, v) in graph.edges if v in t)


def solve_reach(graph: GameGraph, target, groups=(), severed_sources=None,
                _restricted_cache=None):
    """Winning region and memoryless strategy of the augmented reachability
    game: (all live-group assumptions hold) => eventually reach ``target``.

    ``severed_sources`` lists, per group, vertices that had C-edges in some
    enclosing game but lost them all when this subgame was cut out; such
    vertices cannot witness persistence and are excluded from the stay sets.
    Strategy entries are write-once and cover region P0 vertices outside the
    target only.
    """
    target = frozenset(target)
    groups = tuple(groups)
    if severed_sources is None:
        severed_sources = tuple(frozenset() for _ in groups)
    if _restricted_cache is None:
        _restricted_cache = {}

    strategy: dict = {}
    att = attractor(graph, P0, target)
    a_region = att.region
    strategy.update(att.strategy)

    for gi, group in enumerate(groups):
        # the eventually-reach-or-stay game can only add vertices when the
        # group has sources outside the attractor; note this is weaker than
        # requiring an edge into the attractor, because persistently cycling
        # inside S \ T violates the assumption and wins vacuously
        if not group.sources - a_region:
            continue
        if gi not in _restricted_cache:
            _restricted_cache[gi] = restrict_graph(graph, group.edges)
        restricted = _restricted_cache[gi]
        stay = (group.sources - group.targets) - severed_sources[gi]
        b_region, b_strategy = solve_eventually_or_stay(restricted, a_region, stay)
        if b_region <= a_region:
            continue
        for v in b_region - a_region:
            if v in b_strategy:
                strategy.setdefault(v, b_strategy[v])
        c_region, c_strategy = solve_reach(graph, a_region | b_region, groups,
                                           severed_sources, _restricted_cache)
        for v, t in c_strategy.items():
            strategy.setdefault(v, t)
        return c_region, {v: t for v, t in strategy.items() if v in c_region and v not in target}

    return a_region, {v: t for v, t in strategy.items() if v in a_region and v not in target}


def _subgame(game: ParityGame, groups, severed, keep: frozenset):
    """Materialise the subgame on ``keep``; returns (game, groups, severed,
    old->new map, new->old list)."""
    old = sorted(keep)
    idx = {v: i for i, v in enumerate(old)}
    graph = game.graph
    edges = [(idx[u], idx[v]) for (u, v) in graph.edges if u in keep and v in keep]
    sub_graph = GameGraph([graph.owners[v] for v in old], edges, [graph.labels[v] for v in old])
    sub_game = ParityGame(sub_graph, [game.priority[v] for v in old])
    sub_groups = []
    sub_severed = []
    for gi, g in enumerate(groups):
        c = frozenset((idx[u], idx[v]) for (u, v) in g.edges if u in keep and v in keep)
        new_sources = {u for (u, _) in c}
        had = {idx[u] for (u, _) in g.edges if u in keep} | {idx[u] for u in severed[gi] if u in keep}
        sub_groups.append(
            PersistentLiveGroup(
                frozenset(idx[v] for v in g.sources if v in keep),
                c,
                frozenset(idx[v] for v in g.targets if v in keep),
                g.name,
            )
        )
        sub_severed.append(frozenset(had - new_sources))
    return sub_game, tuple(sub_groups), tuple(sub_severed), idx, old


def _rec(game: ParityGame, groups, severed, keep: frozenset):
    sub_game, sub_groups, sub_severed, _, old = _subgame(game, groups, severed, keep)
    w0, w1, s0, s1 = _solve_aug(sub_game, sub_groups, sub_severed)
    back = lambda s: frozenset(old[v] for v in s)
    back_map = lambda m: {old[v]: old[t] for v, t in m.items()}
    return back(w0), back(w1), back_map(s0), back_map(s1)


def _solve_aug(game: ParityGame, groups, severed):
    """Zielonka with SolveReach substituted for player-0 attractors.

    The substitution is asymmetric: at odd levels the opponent's rescued
    region is grown with SolveReach even when the subgame gave player 0
    nothing, because a group can make staying somewhere forever a vacuous
    win that no play ever reports to the parity condition.  Requires a
    dead-end free arena; returns (win0, win1, strat0, strat1).
    """
    graph = game.graph
    if graph.n == 0:
        return frozenset(), frozenset(), {}, {}

    d = max(game.priority)
    top = frozenset(v for v in graph.vertices if game.priority[v] == d)
    full = frozenset(graph.vertices)

    if d % 2 == P0:
        a_region, a_strategy = solve_reach(graph, top, groups, severed)
        w0p, w1p, s0p, s1p = _rec(game, groups, severed, full - a_region)
        if not w1p:
            strat0 = dict(s0p)
            strat0.update(a_strategy)
            for v in top:
                if graph.owners[v] == P0 and v not in strat0 and graph.succ[v]:
                    strat0[v] = graph.succ[v][0]
            return full, frozenset(), strat0, {}
        batt = attractor(graph, P1, w1p)
        w0pp, w1pp, s0pp, s1pp = _rec(game, groups, severed, full - batt.region)
        strat1 = dict(s1pp)
        for v, t in batt.strategy.items():
            strat1.setdefault(v, t)
        for v, t in s1p.items():
            if v in w1p:
                strat1.setdefault(v, t)
        return w0pp, w1pp | batt.region, dict(s0pp), strat1

    att = attractor(graph, P1, top)
    w0p, w1p, s0p, s1p = _rec(game, groups, severed, full - att.region)
    b_region, b_strategy = solve_reach(graph, w0p, groups, severed)
    if not b_region:
        strat1 = dict(s1p)
        strat1.update(att.strategy)
        for v in top:
            if graph.owners[v] == P1 and v not in strat1 and graph.succ[v]:
                strat1[v] = graph.succ[v][0]
        return frozenset(), full, {}, strat1
    w0pp, w1pp, s0pp, s1pp = _rec(game, groups, severed, full - b_region)
    strat0 = dict(s0pp)
    for v, t in b_strategy.items():
        strat0.setdefault(v, t)
    for v, t in s0p.items():
        if v in w0p:
            strat0.setdefault(v, t)
    return w0pp | b_region, w1pp, strat0, dict(s1pp)


@dataclass(frozen=True)
class AugmentedSolution:
    win0: frozenset
    win1: frozenset
    strategy0: dict

    def __iter__(self):
        return iter((self.win0, self.strategy0))


def solve_augmented_parity(game: ParityGame, groups=()) -> AugmentedSolution:
    """Winning region and memoryless strategy of the augmented parity game.
    Player-1 attractors inside the recursion stay plain: the live-groups
    constrain only persistence of player-0 edge choices."""
    groups = tuple(groups)
    for g in groups:
        g.validate(game.graph)

    from ctxctl.games.zielonka import _totalise

    total, even_sink, odd_sink = _totalise(game)
    severed = tuple(frozenset() for _ in groups)
    win0, win1, s0, _ = _solve_aug(total, groups, severed)

    orig = frozenset(game.graph.vertices)
    sinks = {even_sink, odd_sink} - {None}
    s0 = {v: t for v, t in s0.items() if v in orig and t not in sinks}
    return AugmentedSolution(win0 & orig, win1 & orig, s0)
