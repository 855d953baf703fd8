"""Seeded random game generators shared by the unit and acceptance tests."""

from __future__ import annotations

import random

from ctxctl.games import GameGraph, ParityGame
from ctxctl.games.augmented import PersistentLiveGroup


def random_graph(rng: random.Random, n_max=8, p_edge=0.35, ensure_succ=True) -> GameGraph:
    n = rng.randint(1, n_max)
    owners = [rng.randint(0, 1) for _ in range(n)]
    edges = set()
    for u in range(n):
        for v in range(n):
            if rng.random() < p_edge:
                edges.add((u, v))
    if ensure_succ:
        for u in range(n):
            if not any(e[0] == u for e in edges) and rng.random() < 0.8:
                edges.add((u, rng.randrange(n)))
    return GameGraph(owners, sorted(edges))


def random_parity_game(rng: random.Random, n_max=8, d_max=3, **kw) -> ParityGame:
    g = random_graph(rng, n_max=n_max, **kw)
    return ParityGame(g, [rng.randint(0, d_max) for _ in range(g.n)])


def random_groups(rng: random.Random, graph: GameGraph, count=2) -> tuple:
    groups = []
    p0_edges = sorted(graph.player_edges(0))
    for _ in range(count):
        if not p0_edges:
            break
        c = frozenset(rng.sample(p0_edges, rng.randint(1, min(3, len(p0_edges)))))
        sources = {u for (u, _) in c}
        extra = [v for v in graph.vertices if rng.random() < 0.4]
        s = sources | set(extra)
        t = frozenset(v for v in s if rng.random() < 0.3)
        groups.append(PersistentLiveGroup.make(s, c, t))
    return tuple(groups)


def random_target(rng: random.Random, graph: GameGraph) -> frozenset:
    return frozenset(v for v in graph.vertices if rng.random() < 0.25)
