"""Brute-force oracles: exact winning regions by strategy enumeration.

A player-0 memoryless strategy wins from v iff no play consistent with it,
starting at v, (a) fails the objective while (b) satisfying every persistent
live-group assumption.  For a finite graph that reduces to inspecting the
realizable infinity sets of the strategy-restricted graph: vertex sets I that
induce a strongly connected subgraph in which every vertex keeps a successor.
Finite plays are covered separately (a play stopping in a player-i dead-end
is lost by player i, whatever the objective).

Only meant for small instances; used as the normative test oracle.
"""

from __future__ import annotations

import itertools

from ctxctl.games.graph import GameGraph, ParityGame, P0, P1


def _group_triples(groups):
    out = []
    for g in groups or ():
        if hasattr(g, "sources"):
            out.append((frozenset(g.sources), frozenset(g.edges), frozenset(g.targets)))
        else:
            s, c, t = g
            out.append((frozenset(s), frozenset(c), frozenset(t)))
    return out


def _strategy_space(graph: GameGraph, cap: int):
    if graph.n > cap:
        raise ValueError(f"brute force capped at {cap} vertices, got {graph.n}")
    p0 = [v for v in graph.vertices if graph.owners[v] == P0 and graph.succ[v]]
    return p0, [graph.succ[v] for v in p0]


def _realizable_inf_sets(graph: GameGraph, sigma: dict, domain_mask: int):
    """Masks of vertex sets player 1 can turn into the infinity set of some
    play of the sigma-restricted graph, within ``domain_mask``."""
    n = graph.n
    succ_mask = []
    for v in range(n):
        if graph.owners[v] == P0:
            m = (1 << sigma[v]) if v in sigma else 0
        else:
            m = 0
            for s in graph.succ[v]:
                m |= 1 << s
        succ_mask.append(m & domain_mask)

    found = []
    seen = set()
    comps = _sccs(n, succ_mask, domain_mask)
    for comp in comps:
        sub = comp
        while sub:
            if sub not in seen:
                seen.add(sub)
                if _closed_and_strongly_connected(sub, succ_mask):
                    found.append(sub)
            sub = (sub - 1) & comp
    return found


def _sccs(n: int, succ_mask: list[int], domain_mask: int):
    """Tarjan over the masked graph; returns SCC masks (incl. singletons)."""
    index = {}
    low = {}
    stack = []
    onstack = set()
    comps = []
    counter = itertools.count()

    def strongconnect(v):
        work = [(v, iter(_bits(succ_mask[v])))]
        index[v] = low[v] = next(counter)
        stack.append(v)
        onstack.add(v)
        while work:
            u, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    onstack.add(w)
                    work.append((w, iter(_bits(succ_mask[w]))))
                    advanced = True
                    break
                elif w in onstack:
                    low[u] = min(low[u], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[u])
            if low[u] == index[u]:
                mask = 0
                while True:
                    w = stack.pop()
                    onstack.discard(w)
                    mask |= 1 << w
                    if w == u:
                        break
                comps.append(mask)

    for v in _bits(domain_mask):
        if v not in index:
            strongconnect(v)
    return comps


def _bits(mask: int):
    while mask:
        b = mask & -mask
        yield b.bit_length() - 1
        mask ^= b


def _closed_and_strongly_connected(sub: int, succ_mask: list[int]) -> bool:
    verts = list(_bits(sub))
    for v in verts:
        if not (succ_mask[v] & sub):
            return False
    # forward and backward reachability inside sub from the first vertex
    start = verts[0]
    reach = 1 << start
    frontier = reach
    while frontier:
        nxt = 0
        for v in _bits(frontier):
            nxt |= succ_mask[v] & sub
        frontier = nxt & ~reach
        reach |= nxt
    if reach != sub:
        return False
    back = 1 << start
    changed = True
    while changed:
        changed = False
        for v in verts:
            if not (back >> v) & 1 and (succ_mask[v] & back):
                back |= 1 << v
                changed = True
    return back == sub


def _reachable_from(v: int, succ_mask: list[int], domain_mask: int) -> int:
    reach = (1 << v) & domain_mask
    frontier = reach
    while frontier:
        nxt = 0
        for u in _bits(frontier):
            nxt |= succ_mask[u] & domain_mask
        frontier = nxt & ~reach
        reach |= nxt
    return reach


def strategy_wins_from(
    graph: GameGraph,
    sigma: dict,
    objective,
    groups=(),
) -> frozenset:
    """Set of vertices from which the P0 strategy ``sigma`` wins.

    ``objective`` is ("parity", priorities) or ("reach", target_set).
    """
    kind, payload = objective
    n = graph.n
    triples = _group_triples(groups)

    if kind == "reach":
        target = frozenset(payload)
        domain_mask = 0
        for v in range(n):
            if v not in target:
                domain_mask |= 1 << v
    elif kind == "parity":
        priorities = payload
        target = frozenset()
        domain_mask = (1 << n) - 1
    else:
        raise ValueError(f"unknown objective {kind!r}")

    succ_mask = []
    for v in range(n):
        if graph.owners[v] == P0:
            m = (1 << sigma[v]) if v in sigma and sigma[v] is not None else 0
        else:
            m = 0
            for s in graph.succ[v]:
                m |= 1 << s
        succ_mask.append(m & domain_mask)

    c_sources = [frozenset(u for (u, _) in c) for (_, c, _) in triples]

    def group_violated(sub: int, gi: int) -> bool:
        s, c, t = triples[gi]
        for v in _bits(sub):
            if v in t:
                return False
            if v not in s:
                return False
            if v in c_sources[gi]:
                if graph.owners[v] != P0 or v not in sigma or (v, sigma[v]) not in c:
                    return False
        return True

    def inf_set_bad(sub: int) -> bool:
        if kind == "parity":
            if max(priorities[v] for v in _bits(sub)) % 2 == 0:
                return False
        # reach: any inf set inside the target-free domain fails the objective
        for gi in range(len(triples)):
            if group_violated(sub, gi):
                return False
        return True

    bad_mask = 0
    for sub in _realizable_inf_sets(graph, sigma, domain_mask):
        if inf_set_bad(sub):
            bad_mask |= sub

    # player-0 dead-ends are losing terminal positions; a P0 vertex the
    # strategy leaves unresolved is treated as losing too (conservative)
    for v in range(n):
        if (domain_mask >> v) & 1 and graph.owners[v] == P0:
            if not graph.succ[v] or v not in sigma:
                bad_mask |= 1 << v

    winning = set()
    for v in range(n):
        if v in target:
            winning.add(v)
            continue
        reach = _reachable_from(v, succ_mask, domain_mask)
        if not (reach & bad_mask):
            winning.add(v)
    return frozenset(winning)


def brute_force_win(game: ParityGame, groups=(), cap: int = 10) -> frozenset:
    """Exact P0 winning region of an (augmented) parity game."""
    graph = game.graph
    p0, options = _strategy_space(graph, cap)
    region = set()
    for combo in itertools.product(*options):
        sigma = dict(zip(p0, combo))
        region |= strategy_wins_from(graph, sigma, ("parity", game.priority), groups)
        if len(region) == graph.n:
            break
    return frozenset(region)


def brute_force_reach_win(graph: GameGraph, target, groups=(), cap: int = 10) -> frozenset:
    """Exact P0 winning region of an (augmented) reachability game."""
    p0, options = _strategy_space(graph, cap)
    region = set()
    for combo in itertools.product(*options):
        sigma = dict(zip(p0, combo))
        region |= strategy_wins_from(graph, sigma, ("reach", target), groups)
        if len(region) == graph.n:
            break
    return frozenset(region)
