"""Bottom-up interface: the control graph and its persistent live-groups.

The control graph encodes which label sequences the continuous closed loop
can produce: per cataloged controller a *transition* and an *invariant*
player-1 vertex (both labelled with the control proposition), and one
player-0 vertex per realizable observation+state label.  Edges follow the
certificate semantics: an engaged controller keeps the state inside its
basin (transition vertex) resp. inside its reach region (invariant vertex),
and the controller is only engageable when its context matches and its
basin proposition holds.  Player-0 dead-ends are retained: avoiding them is
the logical layer's job.

Each controller also yields a persistent live-group: persistently engaging
it inside its basin and context eventually produces the reach label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ctxctl.clf.synth import ContextRWA, QuadraticCLF
from ctxctl.games import GameGraph, P0, P1
from ctxctl.games.augmented import PersistentLiveGroup


@dataclass(frozen=True)
class CatalogEntry:
    control_prop: str
    basin_prop: str
    crwa: ContextRWA
    clf: QuadraticCLF | None = None


@dataclass(frozen=True)
class ControllerCatalog:
    entries: tuple
    state_atoms: frozenset   # base AP_S
    obs_atoms: frozenset

    def __post_init__(self):
        controls = [e.control_prop for e in self.entries]
        basins = [e.basin_prop for e in self.entries]
        if len(set(controls)) != len(controls):
            raise ValueError("control proposition ids must be unique")
        if len(set(basins)) != len(basins):
            raise ValueError("basin proposition ids must be unique")
        taken = self.state_atoms | self.obs_atoms
        for name in controls + basins:
            if name in taken:
                raise ValueError(f"proposition id {name} collides with a declared atom")
        for e in self.entries:
            if not e.crwa.context <= self.obs_atoms:
                raise ValueError("a cRWA context must consist of observation atoms")

    @property
    def basin_atoms(self) -> frozenset:
        return frozenset(e.basin_prop for e in self.entries)

    @property
    def extended_state_atoms(self) -> frozenset:
        return self.state_atoms | self.basin_atoms


@dataclass(frozen=True)
class ControlGraph:
    graph: GameGraph
    catalog: ControllerCatalog
    transition: dict   # entry index -> vertex
    invariant: dict    # entry index -> vertex
    label_index: dict  # full label -> P0 vertex
    dead_ends: frozenset


def build_control_graph(catalog: ControllerCatalog, state_labels_by_obs) -> ControlGraph:
    """``state_labels_by_obs`` maps an observation set to the realizable
    extended state labels under it (the geometry oracle's output; the wall
    region may depend on the door observation, hence the keying)."""
    owners, labels = [], []
    transition, invariant = {}, {}
    for i, e in enumerate(catalog.entries):
        transition[i] = len(owners)
        owners.append(P1)
        labels.append(frozenset([e.control_prop]))
        invariant[i] = len(owners)
        owners.append(P1)
        labels.append(frozenset([e.control_prop]))

    label_index = {}
    for obs in sorted(state_labels_by_obs, key=sorted):
        obs = frozenset(obs)
        if not obs <= catalog.obs_atoms:
            raise ValueError(f"observation set {sorted(obs)} uses undeclared atoms")
        for sl in sorted(state_labels_by_obs[obs], key=sorted):
            sl = frozenset(sl)
            if not sl <= catalog.extended_state_atoms:
                raise ValueError(f"state label {sorted(sl)} uses undeclared atoms")
            full = obs | sl
            if full in label_index:
                continue
            label_index[full] = len(owners)
            owners.append(P0)
            labels.append(full)

    edges = []
    for i, e in enumerate(catalog.entries):
        for full, v in label_index.items():
            if e.crwa.reach <= full:
                edges.append((invariant[i], v))
            if e.basin_prop in full:
                edges.append((transition[i], v))

    dead = set()
    for full, v in label_index.items():
        obs_part = full & catalog.obs_atoms
        out = 0
        for i, e in enumerate(catalog.entries):
            if e.basin_prop in full and e.crwa.context == obs_part:
                target = invariant[i] if e.crwa.reach <= full else transition[i]
                edges.append((v, target))
                out += 1
        if not out:
            dead.add(v)

    graph = GameGraph(owners, edges, labels)
    return ControlGraph(graph, catalog, transition, invariant, label_index, frozenset(dead))


def verify_control_graph_laws(control: ControlGraph) -> list:
    """Structural checks of the certified control-graph guarantees; returns
    a list of violation descriptions (empty when all laws hold):

      (a) no vertex label contains a basin proposition together with one of
          that controller's avoid propositions;
      (b) every predecessor of a control-proposition vertex carries the
          controller's basin proposition and exact context;
      (c) two-step: from a reach-labelled vertex through the controller the
          landing label still contains the reach set;
      (d) two-step: from a basin-labelled vertex through the controller the
          landing label still contains the basin proposition.
    """
    graph = control.graph
    catalog = control.catalog
    bad = []
    for i, e in enumerate(catalog.entries):
        cw = {control.transition[i], control.invariant[i]}
        for v in graph.vertices:
            if graph.owners[v] != P0:
                continue
            label = graph.labels[v]
            # avoid geometry is context-specific (a door strip is a wall only
            # while closed), so the disjointness law binds exactly where the
            # controller is engageable: labels carrying its context
            if (e.basin_prop in label and label & catalog.obs_atoms == e.crwa.context
                    and label & e.crwa.avoid):
                bad.append(f"(a) {e.control_prop}: label {sorted(label)} mixes basin and avoid")
        for c in cw:
            for p in graph.pred[c]:
                label = graph.labels[p]
                if e.basin_prop not in label or label & catalog.obs_atoms != e.crwa.context:
                    bad.append(f"(b) {e.control_prop}: predecessor {p} lacks basin/context")
        for v in graph.vertices:
            if graph.owners[v] != P0:
                continue
            label = graph.labels[v]
            for c in set(graph.succ[v]) & cw:
                for v2 in graph.succ[c]:
                    land = graph.labels[v2]
                    if e.crwa.reach <= label and not e.crwa.reach <= land:
                        bad.append(f"(c) {e.control_prop}: reach lost {v}->{c}->{v2}")
                    if e.basin_prop in label and e.basin_prop not in land:
                        bad.append(f"(d) {e.control_prop}: basin lost {v}->{c}->{v2}")
    return bad


def build_live_groups(control: ControlGraph) -> tuple:
    """One persistent live-group per cataloged controller: C collects the
    edges into its control-proposition vertices, S its basin-in-context
    vertices plus the control vertices, T the vertices whose base state
    label equals the reach set.  Targets outside S are inert for the
    persistence semantics and are normalised away."""
    catalog = control.catalog
    graph = control.graph
    groups = []
    for i, e in enumerate(catalog.entries):
        cw_vertices = {control.transition[i], control.invariant[i]}
        c_edges = frozenset((u, v) for (u, v) in graph.edges if v in cw_vertices)
        sources = set(cw_vertices)
        for full, v in control.label_index.items():
            if e.basin_prop in full and full & catalog.obs_atoms == e.crwa.context:
                sources.add(v)
        targets = set()
        for v in graph.vertices:
            if graph.labels[v] & catalog.state_atoms == e.crwa.reach:
                targets.add(v)
        targets &= sources
        groups.append(
            PersistentLiveGroup(frozenset(sources), c_edges, frozenset(targets),
                                name=e.control_prop)
        )
    return tuple(groups)
