"""The controller-selection map: a causal translator from labelled-state /
observation discontinuities to moves of the final game's winning strategy.

nu is always a player-1 product vertex whose label is a single control
proposition.  Initialisation looks up a winning player-0 vertex carrying the
current full label (lowest index on ties, logged); every later discontinuity
follows the unique matching edge and replays the strategy.  A missing edge
is fatal by design: on certified pipelines it indicates an abstraction
soundness violation, so the forensic dump matters more than recovery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ctxctl.games import P1
from ctxctl.games.augmented import AugmentedSolution
from ctxctl.pipeline.controlgraph import ControllerCatalog
from ctxctl.pipeline.product import FinalGame


class NotWinning(Exception):
    def __init__(self, label):
        super().__init__(f"no winning vertex carries the label {sorted(label)}")
        self.label = frozenset(label)


class NoMatchingEdge(Exception):
    def __init__(self, nu, label, successors):
        self.nu = nu
        self.label = frozenset(label)
        self.successors = successors
        super().__init__(
            f"no successor of nu={nu} carries the label {sorted(label)}; "
            f"successor labels: {[sorted(l) for l in successors]}"
        )


@dataclass
class HybridPolicy:
    final: FinalGame
    solution: AugmentedSolution
    catalog: ControllerCatalog
    log: list = field(default_factory=list)

    @property
    def winning_labels(self) -> frozenset:
        graph = self.final.game.graph
        return frozenset(
            graph.labels[v]
            for vs in self.final.label_p0.values()
            for v in vs
            if v in self.solution.win0
        )

    def gamma_init(self, label) -> int:
        """sigma_F applied to the winning P0 vertex labelled ``label``."""
        label = frozenset(label)
        candidates = [
            v for v in self.final.p0_vertices_labelled(label) if v in self.solution.win0
        ]
        if not candidates:
            raise NotWinning(label)
        if len(candidates) > 1:
            self.log.append(("ambiguous-init", tuple(candidates)))
        v0 = candidates[0]
        nu = self.solution.strategy0.get(v0)
        if nu is None:
            raise NotWinning(label)
        return nu

    def gamma_step(self, nu: int, label) -> int:
        """Follow the edge of nu whose target carries ``label``, then the
        strategy; the label-unchanged case is a spurious event (nu kept)."""
        label = frozenset(label)
        graph = self.final.game.graph
        matches = [v for v in graph.succ[nu] if graph.labels[v] == label]
        if not matches:
            raise NoMatchingEdge(nu, label, [graph.labels[v] for v in graph.succ[nu]])
        if len(matches) > 1:
            self.log.append(("ambiguous-step", nu, tuple(matches)))
        v = matches[0]
        nxt = self.solution.strategy0.get(v)
        if nxt is None:
            raise NoMatchingEdge(nu, label, [graph.labels[s] for s in graph.succ[nu]])
        return nxt

    def active_entry(self, nu: int):
        """The catalog entry of nu's control proposition."""
        if self.final.game.graph.owners[nu] != P1:
            raise ValueError("nu must be a player-1 vertex")
        idx = self.final.control_entry.get(nu)
        if idx is None:
            return None  # assumption-violated sink: freeze the last controller
        return self.catalog.entries[idx]
