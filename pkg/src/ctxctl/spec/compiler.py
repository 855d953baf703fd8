"""Compile a supported fragment into an alternating labelled parity game.

Round structure (player 1 moves first): at a player-1 vertex the environment
picks the observation set o, landing on a player-0 vertex labelled o; the
controller answers with a state set s, landing on a player-1 vertex labelled
s.  The letter of that round is o | s, so traces read off consecutive
(P0-vertex, P1-vertex) label pairs and the game is total by construction:
every letter is offered everywhere, bad choices just route into one of two
free-play components.

Components:
  * main: safety obligations tracked as monitor bits; fairness priorities
    2 (mode change) / 1 (target unmet) / 0 (target met);
  * good: an assumption clause is violated, everything that follows is
    winning (priority 0 free play);
  * dead: a guarantee safety clause is violated; losing (priority 1) unless
    the environment later violates an assumption, which routes to good.

A play is winning iff its generated trace satisfies the fragment formula.
The result is reachability-pruned and bisimulation-quotiented; vertex 0 is
the designated initial vertex.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

from ctxctl.games import GameGraph, ParityGame, P0, P1
from ctxctl.spec.fragment import SpecFragment
from ctxctl.spec.ltl import eval_prop

MAX_ATOMS_PER_PLAYER = 6


@dataclass(frozen=True)
class CompiledSpec:
    game: ParityGame
    initial: int
    fragment: SpecFragment
    good: frozenset = frozenset()  # assumption-violated zone (P0 wins freely)


def _subsets(atoms):
    out = []
    for r in range(len(atoms) + 1):
        for combo in itertools.combinations(atoms, r):
            out.append(frozenset(combo))
    return out


class _Monitor:
    def __init__(self, clauses):
        self.next_clauses = [c for c in clauses if c.kind == "next"]
        self.w_clauses = [c for c in clauses if c.kind == "weak-until"]
        self.inv_clauses = [c for c in clauses if c.kind == "invariant"]

    @property
    def start(self):
        return (
            tuple(False for _ in self.next_clauses),
            tuple(False for _ in self.w_clauses),
        )

    def step(self, state, letter):
        """Returns (violated, new_state)."""
        next_bits, w_bits = state
        violated = False
        for bit, sc in zip(next_bits, self.next_clauses):
            if bit and not eval_prop(sc.then, letter):
                violated = True
        new_next = tuple(bool(eval_prop(sc.trigger, letter)) for sc in self.next_clauses)
        new_w = []
        for bit, sc in zip(w_bits, self.w_clauses):
            if bit or eval_prop(sc.trigger, letter):
                if eval_prop(sc.until, letter):
                    new_w.append(False)
                elif eval_prop(sc.then, letter):
                    new_w.append(True)
                else:
                    violated = True
                    new_w.append(False)
            else:
                new_w.append(False)
        for sc in self.inv_clauses:
            if not eval_prop(sc.trigger, letter):
                violated = True
        return violated, (new_next, tuple(new_w))


def compile_fragment(frag: SpecFragment, minimize: bool = True,
                     structural_modes: bool = False,
                     state_sets=None) -> CompiledSpec:
    """``state_sets`` optionally restricts the controller's letter alphabet
    to geometrically realizable state sets: either a collection of frozensets
    or a callable observation-set -> collection.  Without it the controller
    may claim impossible conjunctions (e.g. two disjoint targets at once),
    which can trap the environment's reaction clauses in a contradiction and
    win vacuously - sound for the optimistic arena but useless downstream."""
    ap_o = tuple(sorted(frag.player1_atoms))
    ap_s = tuple(sorted(frag.player0_atoms))
    if len(ap_o) > MAX_ATOMS_PER_PLAYER or len(ap_s) > MAX_ATOMS_PER_PLAYER:
        raise ValueError("fragment alphabet too large for the native compiler")
    fair_modes = {m for (m, _) in frag.fairness}
    if fair_modes and not fair_modes <= set(frag.modes):
        raise ValueError("fairness modes must be covered by a mode-exclusivity block")

    o_choices = _subsets(ap_o)
    all_s = _subsets(ap_s)
    if state_sets is None:
        s_choices_for = lambda o: all_s
    elif callable(state_sets):
        s_choices_for = lambda o: sorted(
            (frozenset(x) for x in state_sets(o)), key=sorted)
    else:
        fixed = sorted((frozenset(x) for x in state_sets), key=sorted)
        s_choices_for = lambda o: fixed
    modes = frozenset(frag.modes)
    assume = _Monitor([c for c in frag.safety if c.side == "assumption"])
    guarantee = _Monitor([c for c in frag.safety if c.side == "guarantee"])

    def exclusive_ok(o):
        return len(o & modes) == 1 if modes else True

    init = ("main1", assume.start, guarantee.start, None, 0, frozenset())
    index = {}
    owners, labels, prios, edges = [], [], [], []
    queue = deque()

    def vid(key):
        if key in index:
            return index[key]
        kind = key[0]
        if kind in ("main1", "good1", "dead1"):
            owner = P1
            label = key[-1]
        else:
            owner = P0
            label = key[-1]
        if kind == "main1":
            prio = key[4]
        elif kind in ("dead1", "dead0"):
            prio = 1
        else:
            prio = 0
        index[key] = len(owners)
        owners.append(owner)
        labels.append(label)
        prios.append(prio)
        queue.append(key)
        return index[key]

    vid(init)
    while queue:
        key = queue.popleft()
        src = index[key]
        kind = key[0]
        if kind == "main1":
            _, qa, qg, sig, _, _ = key
            for o in o_choices:
                if exclusive_ok(o):
                    dst = vid(("main0", qa, qg, sig, o))
                elif structural_modes:
                    continue  # the environment only offers exclusive modes
                else:
                    dst = vid(("good0", o))
                edges.append((src, dst))
        elif kind == "main0":
            _, qa, qg, sig, o = key
            for s in s_choices_for(o):
                letter = o | s
                aviol, qa2 = assume.step(qa, letter)
                if aviol:
                    dst = vid(("good1", s))
                else:
                    gviol, qg2 = guarantee.step(qg, letter)
                    if gviol:
                        dst = vid(("dead1", qa2, s))
                    else:
                        sig2 = frozenset(letter & modes)
                        if sig2 != sig:
                            prio = 2
                        else:
                            wanted = [t for (m, t) in frag.fairness if m in sig2]
                            prio = 0 if all(t in letter for t in wanted) else 1
                        dst = vid(("main1", qa2, qg2, sig2, prio, s))
                edges.append((src, dst))
        elif kind == "good1":
            _, s = key
            for o in o_choices:
                edges.append((src, vid(("good0", o))))
        elif kind == "good0":
            _, o = key
            for s in s_choices_for(o):
                edges.append((src, vid(("good1", s))))
        elif kind == "dead1":
            _, qa, s = key
            for o in o_choices:
                if exclusive_ok(o):
                    dst = vid(("dead0", qa, o))
                elif structural_modes:
                    continue
                else:
                    dst = vid(("good0", o))
                edges.append((src, dst))
        elif kind == "dead0":
            _, qa, o = key
            for s in s_choices_for(o):
                letter = o | s
                aviol, qa2 = assume.step(qa, letter)
                dst = vid(("good1", s)) if aviol else vid(("dead1", qa2, s))
                edges.append((src, dst))

    game = ParityGame(GameGraph(owners, edges, labels), prios)
    initial = 0
    good = frozenset(i for key, i in index.items() if key[0] in ("good0", "good1"))
    if minimize:
        game, mapping = bisim_quotient(game, order_by=[initial])
        initial = mapping[initial]
        good = frozenset(mapping[v] for v in good)
    return CompiledSpec(game=game, initial=initial, fragment=frag, good=good)


def bisim_quotient(game: ParityGame, order_by=()):
    """Strong bisimulation quotient preserving owner, label and priority.

    Returns (quotient_game, mapping old->new).  Classes are numbered by
    their smallest member, after the vertices listed in order_by.
    """
    graph = game.graph
    n = graph.n
    block = {
        v: (graph.owners[v], graph.labels[v], game.priority[v]) for v in range(n)
    }
    ids = {}
    cls = [0] * n
    for v in range(n):
        key = block[v]
        if key not in ids:
            ids[key] = len(ids)
        cls[v] = ids[key]

    while True:
        sig = {}
        new_cls = [0] * n
        for v in range(n):
            key = (cls[v], frozenset(cls[s] for s in graph.succ[v]))
            if key not in sig:
                sig[key] = len(sig)
            new_cls[v] = sig[key]
        # each round refines the previous partition, so equal class counts
        # mean the partition is stable (numbering may differ)
        if len(sig) == len(set(cls)):
            break
        cls = new_cls

    # deterministic class order: forced vertices first, then smallest member
    reps = {}
    for v in range(n):
        reps.setdefault(cls[v], v)
    ordered = []
    seen = set()
    for v in list(order_by) + sorted(reps.values()):
        c = cls[v]
        if c not in seen:
            seen.add(c)
            ordered.append(c)
    renum = {c: i for i, c in enumerate(ordered)}
    mapping = {v: renum[cls[v]] for v in range(n)}

    m = len(ordered)
    owners = [0] * m
    labels = [frozenset()] * m
    prios = [0] * m
    for v in range(n):
        i = mapping[v]
        owners[i] = graph.owners[v]
        labels[i] = graph.labels[v]
        prios[i] = game.priority[v]
    new_edges = sorted({(mapping[u], mapping[v]) for (u, v) in graph.edges})
    quotient = ParityGame(GameGraph(owners, new_edges, labels), prios)
    return quotient, mapping
