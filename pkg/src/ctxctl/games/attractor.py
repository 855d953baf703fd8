"""Attractor fixpoints on game graphs.

The attractor of player i to a target T is the least set closed under
one-step forcing: a player-i vertex joins as soon as one successor is in,
an opponent vertex joins once all its successors are in (opponent dead-ends
join vacuously).  Ranks record the fixpoint round a vertex joined in.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

from ctxctl.games.graph import GameGraph


@dataclass(frozen=True)
class AttractorResult:
    region: frozenset
    strategy: dict
    rank: dict

    def __iter__(self):
        # allows ``region, strategy = attractor(...)``
        return iter((self.region, self.strategy))


def attractor(
    graph: GameGraph,
    player: int,
    target: Iterable[int],
    domain: Iterable[int] | None = None,
) -> AttractorResult:
    """Attractor of ``player`` to ``target``, restricted to ``domain``.

    The strategy maps player-owned region vertices outside the target to the
    lowest-index successor strictly closer to the target in rank.
    """
    dom = set(graph.vertices) if domain is None else set(domain)
    tset = set(target) & dom
    opponent = 1 - player

    remaining = {}
    for v in dom:
        if graph.owners[v] == opponent:
            remaining[v] = sum(1 for s in graph.succ[v] if s in dom)

    region = set(tset)
    rank = {v: 0 for v in tset}
    queue = deque(tset)

    # opponent dead-ends (within the domain) join vacuously
    for v, cnt in remaining.items():
        if cnt == 0 and v not in region:
            region.add(v)
            rank[v] = 0
            queue.append(v)

    while queue:
        u = queue.popleft()
        for p in graph.pred[u]:
            if p not in dom or p in region:
                continue
            if graph.owners[p] == player:
                region.add(p)
                rank[p] = rank[u] + 1
                queue.append(p)
            else:
                remaining[p] -= 1
                if remaining[p] == 0:
                    region.add(p)
                    rank[p] = max(rank[s] for s in graph.succ[p] if s in dom) + 1
                    queue.append(p)

    strategy = {}
    for v in region:
        if graph.owners[v] != player or v in tset:
            continue
        best = None
        for s in graph.succ[v]:
            if s in region and rank[s] < rank[v]:
                best = s
                break  # succ lists are sorted, first hit is lowest index
        if best is not None:
            strategy[v] = best
    return AttractorResult(frozenset(region), strategy, rank)
