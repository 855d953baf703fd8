"""The merged game: every proposition move is handed to the environment.

Player-1 vertices survive with their priorities and empty labels; each
(P0 vertex v0, P1 successor v2) pair becomes one fresh P0 vertex labelled
l(v0) | l(v2) with priority P(v0), fed by every P1 predecessor of v0.  The
merged game generates exactly the traces of the input and preserves parity
verdicts play-for-play.
"""

from __future__ import annotations

from dataclasses import dataclass

from ctxctl.games import GameGraph, P0, P1, ParityGame


@dataclass(frozen=True)
class MergedGame:
    game: ParityGame
    p1_map: dict            # original P1 vertex -> merged vertex
    pair_map: dict          # (v0, v2) -> merged P0 vertex
    origin: dict            # merged P0 vertex -> (v0, v2)
    good: frozenset = frozenset()
    initial: int | None = None


def merge_game(game: ParityGame, good=frozenset(), initial=None,
               reachable_only=False) -> MergedGame:
    graph = game.graph
    if not graph.is_alternating():
        raise ValueError("the merge construction needs an alternating game")

    p1 = [v for v in graph.vertices if graph.owners[v] == P1]
    p1_map = {v: i for i, v in enumerate(p1)}
    owners = [P1] * len(p1)
    labels = [frozenset()] * len(p1)
    prios = [game.priority[v] for v in p1]
    edges = []
    pair_map = {}
    origin = {}

    for v0 in graph.vertices:
        if graph.owners[v0] != P0:
            continue
        for v2 in graph.succ[v0]:
            idx = len(owners)
            pair_map[(v0, v2)] = idx
            origin[idx] = (v0, v2)
            owners.append(P0)
            labels.append(graph.labels[v0] | graph.labels[v2])
            prios.append(game.priority[v0])
            edges.append((idx, p1_map[v2]))
            for v1 in graph.pred[v0]:
                edges.append((p1_map[v1], idx))

    merged = ParityGame(GameGraph(owners, edges, labels), prios)
    merged_good = frozenset(
        {p1_map[v] for v in good if v in p1_map}
        | {i for i, (v0, v2) in origin.items() if v0 in good or v2 in good}
    )
    merged_initial = p1_map.get(initial) if initial is not None else None

    if reachable_only and merged_initial is not None:
        keep = _reachable(merged.graph, merged_initial)
        merged, remap = _restrict(merged, keep)
        p1_map = {v: remap[i] for v, i in p1_map.items() if i in remap}
        pair_map = {k: remap[i] for k, i in pair_map.items() if i in remap}
        origin = {remap[i]: k for i, k in origin.items() if i in remap}
        merged_good = frozenset(remap[v] for v in merged_good if v in remap)
        merged_initial = remap[merged_initial]

    return MergedGame(merged, p1_map, pair_map, origin, merged_good, merged_initial)


def _reachable(graph: GameGraph, start: int) -> frozenset:
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for s in graph.succ[v]:
            if s not in seen:
                seen.add(s)
                stack.append(s)
    return frozenset(seen)


def _restrict(game: ParityGame, keep: frozenset):
    graph = game.graph
    old = sorted(keep)
    remap = {v: i for i, v in enumerate(old)}
    edges = [(remap[u], remap[v]) for (u, v) in graph.edges if u in keep and v in keep]
    g2 = GameGraph([graph.owners[v] for v in old], edges, [graph.labels[v] for v in old])
    return ParityGame(g2, [game.priority[v] for v in old]), remap
