"""Labelled two-player game graphs and parity games.

Vertices are integers 0..n-1.  Player 0 is the controller, player 1 the
environment.  Dead-ends are legal: a play ending in a player-i dead-end is
lost by player i.  All containers are frozen after construction so games can
be shared freely across threads.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

P0 = 0
P1 = 1


class GameGraph:
    """A finite labelled game graph.

    owners[v] is 0 or 1, labels[v] is a frozenset of proposition names.
    """

    def __init__(
        self,
        owners: Sequence[int],
        edges: Iterable[tuple[int, int]],
        labels: Sequence[Iterable[str]] | None = None,
    ):
        self.owners = tuple(int(o) for o in owners)
        n = len(self.owners)
        for o in self.owners:
            if o not in (P0, P1):
                raise ValueError(f"owner must be 0 or 1, got {o}")
        edge_list = []
        seen = set()
        for (u, v) in edges:
            u, v = int(u), int(v)
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) has an endpoint outside 0..{n - 1}")
            if (u, v) not in seen:
                seen.add((u, v))
                edge_list.append((u, v))
        self.edges = tuple(edge_list)
        if labels is None:
            self.labels = tuple(frozenset() for _ in range(n))
        else:
            if len(labels) != n:
                raise ValueError("labels must cover every vertex")
            self.labels = tuple(frozenset(l) for l in labels)
        succ: list[list[int]] = [[] for _ in range(n)]
        pred: list[list[int]] = [[] for _ in range(n)]
        for (u, v) in self.edges:
            succ[u].append(v)
            pred[v].append(u)
        self.succ = tuple(tuple(sorted(s)) for s in succ)
        self.pred = tuple(tuple(sorted(p)) for p in pred)

    @property
    def n(self) -> int:
        return len(self.owners)

    @property
    def vertices(self) -> range:
        return range(self.n)

    def owner(self, v: int) -> int:
        return self.owners[v]

    def label(self, v: int) -> frozenset:
        return self.labels[v]

    def is_alternating(self) -> bool:
        """True iff no edge connects two vertices of the same owner."""
        return all(self.owners[u] != self.owners[v] for (u, v) in self.edges)

    def dead_ends(self, player: int | None = None) -> frozenset:
        """Vertices without outgoing edges, optionally filtered by owner."""
        dead = (v for v in self.vertices if not self.succ[v])
        if player is None:
            return frozenset(dead)
        return frozenset(v for v in dead if self.owners[v] == player)

    def player_edges(self, player: int) -> frozenset:
        return frozenset((u, v) for (u, v) in self.edges if self.owners[u] == player)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.succ[u]

    def __repr__(self) -> str:
        return f"GameGraph(n={self.n}, m={len(self.edges)})"


class ParityGame:
    """A game graph with a priority per vertex; player 0 wins a play iff the
    maximum priority seen infinitely often is even (finite plays are lost by
    the owner of the dead-end they stop in)."""

    def __init__(self, graph: GameGraph, priority: Sequence[int] | Mapping[int, int]):
        self.graph = graph
        if isinstance(priority, Mapping):
            prio = [priority[v] for v in graph.vertices]
        else:
            prio = list(priority)
        if len(prio) != graph.n:
            raise ValueError("every vertex needs a priority")
        for p in prio:
            if int(p) < 0:
                raise ValueError(f"priorities must be >= 0, got {p}")
        self.priority = tuple(int(p) for p in prio)

    @property
    def max_priority(self) -> int:
        return max(self.priority, default=0)

    def __repr__(self) -> str:
        return f"ParityGame(n={self.graph.n}, m={len(self.graph.edges)}, d={self.max_priority})"


def check_strategy(graph: GameGraph, strategy: Mapping[int, int], player: int) -> None:
    """Raise if a memoryless strategy picks a non-edge or a wrong-owner vertex."""
    for v, t in strategy.items():
        if graph.owners[v] != player:
            raise ValueError(f"strategy assigns vertex {v} not owned by player {player}")
        if not graph.has_edge(v, t):
            raise ValueError(f"strategy uses non-edge ({v},{t})")
