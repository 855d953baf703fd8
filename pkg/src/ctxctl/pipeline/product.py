"""The final augmented parity game: the product of the merged game with the
control graph, with live-groups lifted through the control component.

Vertices pair same-owner components whose labels agree on the observation
and base-state atoms (the merged component knows nothing about basin or
control propositions).  Priorities come from the merged component.  When the
merged component enters the assumption-violated zone the product continues
into a two-vertex priority-0 sink instead: the trace already satisfies the
specification, so the control component no longer constrains anything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ctxctl.games import GameGraph, P0, P1, ParityGame
from ctxctl.games.augmented import PersistentLiveGroup
from ctxctl.pipeline.controlgraph import ControlGraph
from ctxctl.pipeline.merge import MergedGame


class EmptyProductError(ValueError):
    def __init__(self, mismatches):
        lines = [f"  merged letter {sorted(l)!r} has no control partner" for l in mismatches]
        super().__init__("empty product; first mismatches:\n" + "\n".join(lines))
        self.mismatches = mismatches


@dataclass(frozen=True)
class FinalGame:
    game: ParityGame
    groups: tuple
    components: dict      # product vertex -> (merged vertex, control vertex | None)
    control_entry: dict   # product P1 vertex -> catalog entry index | None
    label_p0: dict        # full label -> tuple of product P0 vertices
    good_sinks: tuple     # (p1 sink, p0 sink) or ()

    def p0_vertices_labelled(self, label) -> tuple:
        return self.label_p0.get(frozenset(label), ())


def product_final_game(merged: MergedGame, control: ControlGraph, groups) -> FinalGame:
    mg = merged.game
    cg = control.graph
    catalog = control.catalog
    base_atoms = catalog.state_atoms | catalog.obs_atoms

    # control P0 vertices grouped by their base-label projection
    by_projection = {}
    for full, cv in control.label_index.items():
        by_projection.setdefault(full & base_atoms, []).append(cv)

    control_p1 = sorted(control.transition.values()) + sorted(control.invariant.values())
    entry_of = {v: i for i, v in control.transition.items()}
    entry_of.update({v: i for i, v in control.invariant.items()})

    index = {}
    owners, labels, prios = [], [], []
    components = {}

    def vid(m, c):
        key = (m, c)
        if key in index:
            return index[key]
        index[key] = len(owners)
        owners.append(mg.graph.owners[m])
        labels.append(mg.graph.labels[m] | (cg.labels[c] if c is not None else frozenset()))
        prios.append(mg.priority[m])
        components[index[key]] = key
        return index[key]

    # all compatible pairs
    mismatches = []
    for m in mg.graph.vertices:
        if m in merged.good:
            continue
        if mg.graph.owners[m] == P1:
            for c in control_p1:
                vid(m, c)
        else:
            letter = mg.graph.labels[m]
            partners = by_projection.get(letter, [])
            if not partners and len(mismatches) < 10:
                mismatches.append(letter)
            for c in partners:
                vid(m, c)
    if not index:
        raise EmptyProductError(mismatches)

    good_sinks = ()
    need_sink = any(
        s in merged.good for m in mg.graph.vertices if m not in merged.good
        for s in mg.graph.succ[m]
    )
    if need_sink:
        # the sink is unconditionally won by player 0; it carries the top
        # even priority so that every reach analysis inside the augmented
        # solver treats entering it as success (a priority-0 sink would look
        # like a liveness dead-end to the eventually-reach-or-stay games)
        top_even = ((max(prios, default=0) + 1) // 2) * 2
        sink_p1 = len(owners)
        owners.append(P1)
        labels.append(frozenset())
        prios.append(top_even)
        sink_p0 = len(owners)
        owners.append(P0)
        labels.append(frozenset())
        prios.append(top_even)
        good_sinks = (sink_p1, sink_p0)

    edges = []
    if good_sinks:
        edges.append((good_sinks[0], good_sinks[1]))
        edges.append((good_sinks[1], good_sinks[0]))

    for (m, c), src in list(index.items()):
        owner = mg.graph.owners[m]
        for m2 in mg.graph.succ[m]:
            if m2 in merged.good:
                edges.append((src, good_sinks[0] if owner == P0 else good_sinks[1]))
                continue
            for c2 in cg.succ[c]:
                if mg.graph.owners[m2] == P1:
                    if cg.owners[c2] == P1:
                        edges.append((src, vid(m2, c2)))
                else:
                    if cg.owners[c2] == P0 and mg.graph.labels[m2] == cg.labels[c2] & base_atoms:
                        edges.append((src, vid(m2, c2)))

    game = ParityGame(GameGraph(owners, edges, labels), prios)

    lifted = []
    for g in groups:
        sources = frozenset(v for v, (m, c) in components.items() if c in g.sources)
        targets = frozenset(v for v, (m, c) in components.items() if c in g.targets)
        c_edges = set()
        for (u, v) in game.graph.edges:
            if u in components and v in components:
                cu, cv = components[u][1], components[v][1]
                if cu is not None and cv is not None and (cu, cv) in g.edges:
                    c_edges.add((u, v))
        lifted.append(PersistentLiveGroup(sources, frozenset(c_edges),
                                          targets & sources, name=g.name))

    control_entry = {}
    label_p0 = {}
    for v, (m, c) in components.items():
        if game.graph.owners[v] == P1:
            control_entry[v] = entry_of.get(c)
        else:
            label_p0.setdefault(labels[v], []).append(v)
    label_p0 = {k: tuple(sorted(vs)) for k, vs in label_p0.items()}

    return FinalGame(game, tuple(lifted), components, control_entry, label_p0, good_sinks)
