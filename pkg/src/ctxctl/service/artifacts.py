"""The end-to-end synthesis driver and artifact persistence.

Stages: compile the specification into the initial arena (realizable letter
alphabet, structural modes), compute the winning strategy template, extract
and consolidate cRWAs, synthesize certified controllers, build the merged
game / control graph / live-groups / final product, and solve the augmented
parity game.  Stage outputs are written as one file per stage with a
manifest of content hashes; rebuilding from identical inputs is
byte-identical (timings go to a separate build log).
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ctxctl.clf.dynamics import AffineDynamics
from ctxctl.clf.sdp import Infeasible
from ctxctl.clf.synth import Assumption3Violated, ContextRWA, QuadraticCLF, assemble_clf
from ctxctl.clf.verify import verify_clf
from ctxctl.clf.geometry import region_disjoint
from ctxctl.games import compute_template
from ctxctl.games.augmented import AugmentedSolution, solve_augmented_parity
from ctxctl.pipeline import (
    CatalogEntry, ControllerCatalog, build_control_graph, build_live_groups,
    extract_crwas, merge_game, product_final_game,
)
from ctxctl.pipeline.controlgraph import verify_control_graph_laws
from ctxctl.pipeline.product import FinalGame
from ctxctl.runtime.labeling import LabelMap
from ctxctl.runtime.policy import HybridPolicy
from ctxctl.runtime.scenario import Scenario
from ctxctl.spec.compiler import CompiledSpec, compile_fragment
from ctxctl.spec.fragment import classify_fragment
from ctxctl.spec.gamefile import parse_game_text, render_game_text


class PipelineError(RuntimeError):
    """An internal invariant broke mid-pipeline (CLI exit code 4)."""


class SynthesisInfeasible(RuntimeError):
    """Empty winning region or an unrealizable stage (CLI exit code 2)."""


@dataclass
class PipelineArtifacts:
    scenario: Scenario
    compiled: CompiledSpec
    win0: frozenset
    template: object
    crwas: tuple
    skipped_crwas: tuple
    catalog: ControllerCatalog
    cert_reports: tuple
    merged: object
    control: object
    groups: tuple
    final: FinalGame
    solution: AugmentedSolution
    labelmap: LabelMap
    sizes: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    notes: tuple = ()

    def policy(self) -> HybridPolicy:
        return HybridPolicy(self.final, self.solution, self.catalog)


def consolidate_crwas(extraction, scenario: Scenario, drop_empty_reach=True):
    """One cRWA per (context, reach, flavor) with the union of the avoid
    sets seen across template edges; avoid propositions whose regions meet a
    reach region are dropped (reported), geometrically unrealizable reach
    combinations are skipped."""
    merged: dict = {}
    for entry in extraction.entries:
        for crwa in (entry.always, entry.eventual):
            if crwa is None:
                continue
            if drop_empty_reach and not crwa.reach:
                continue
            key = (crwa.context, crwa.reach, crwa.flavor)
            merged.setdefault(key, set()).update(crwa.avoid)

    # the two flavors of a (context, reach) pair often end up with the same
    # avoid union; keep a single certificate then.  Additionally emit one
    # synthetic strict variant per (context, reach): the always-avoid base
    # plus every proposition whose entry effect would change this context
    # (e.g. the target that closes the door while it is open).  The per-edge
    # template avoid sets are only lower bounds, and the progress arguments
    # need one controller per objective whose basin cannot be steered
    # through a context flip; conversely the template's co-live unions may
    # proscribe harmless waypoints the strict course must stay engageable
    # from, so they do not feed the synthetic variant.
    def harmful_triggers(context, reach):
        out = set()
        for rule in scenario.effects:
            if rule.trigger in reach:
                continue
            if scenario.apply_effects({rule.trigger}, context) != frozenset(context):
                out.add(rule.trigger)
        return out

    candidates = []
    pairs = set()
    for (context, reach, flavor), avoid in merged.items():
        candidates.append((context, reach, frozenset(avoid), flavor))
        pairs.add((context, reach))
    for (context, reach) in pairs:
        base = set(merged.get((context, reach, "always"), ()))
        synth = (base | harmful_triggers(context, reach)) - set(reach)
        candidates.append((context, reach, frozenset(synth), "eventually-always"))

    collapsed = {}
    for (context, reach, avoid, flavor) in candidates:
        key = (context, reach, avoid)
        prev = collapsed.get(key)
        if prev is None or (prev == "eventually-always" and flavor == "always"):
            collapsed[key] = flavor

    out, skipped = [], []
    for (context, reach, avoid_key) in sorted(
        collapsed, key=lambda k: (sorted(k[0]), sorted(k[1]), sorted(k[2]))
    ):
        flavor = collapsed[(context, reach, avoid_key)]
        avoid = set(avoid_key)
        reach_regions = []
        realizable = True
        for prop in sorted(reach):
            regions = scenario.regions_for(prop, context)
            if not regions:
                realizable = False
                break
            reach_regions.extend(regions)
        if realizable:
            for i in range(len(reach_regions)):
                for j in range(i + 1, len(reach_regions)):
                    if region_disjoint(reach_regions[i], reach_regions[j]):
                        realizable = False
        if not realizable:
            skipped.append((context, reach, flavor, "unrealizable reach conjunction"))
            continue
        clean_avoid = set()
        for prop in sorted(avoid):
            hit = False
            for region in scenario.regions_for(prop, context):
                if any(not region_disjoint(region, r) and not region_disjoint(r, region)
                       for r in reach_regions):
                    hit = True
            if hit:
                skipped.append((context, reach | {prop}, flavor, f"avoid {prop} meets reach"))
            else:
                clean_avoid.add(prop)
        out.append(ContextRWA(frozenset(context), frozenset(reach),
                              frozenset(clean_avoid), flavor))
    return tuple(out), tuple(skipped)


def realize_catalog(scenario: Scenario, crwas, notes):
    """Synthesize one certified controller per consolidated cRWA; infeasible
    objectives are skipped with a note."""
    cfg = scenario.config
    box_avoid = scenario.box_complement_halfspaces()
    entries = []
    reports = []
    for crwa in crwas:
        reach_sets = []
        for prop in sorted(crwa.reach):
            reach_sets.extend(scenario.regions_for(prop, crwa.context))
        avoid_sets = list(box_avoid)
        for prop in sorted(crwa.avoid):
            avoid_sets.extend(scenario.regions_for(prop, crwa.context))
        # waypoint coverage: other harmless state regions of this context, so
        # the controller stays engageable from them when geometry allows
        # (only ellipsoidal regions are used as cover; walls are polytopes)
        cover = []
        for prop in sorted(scenario.state_atoms - crwa.reach - crwa.avoid):
            cover.extend(scenario.regions_for(prop, crwa.context))
        try:
            clf = assemble_clf(scenario.dynamics, crwa, reach_sets, avoid_sets,
                               rho_list=cfg["rho_list"], eps_feas=cfg["eps_feas"],
                               cover_regions=cover)
        except Assumption3Violated as err:
            notes.append(f"assumption violation for {_crwa_str(crwa)}: {err}")
            continue
        except Infeasible as err:
            notes.append(f"infeasible cRWA {_crwa_str(crwa)}: {err.reason}")
            continue
        idx = len(entries)
        entries.append(CatalogEntry(f"C{idx}", f"X{idx}", crwa, clf))
        report = verify_clf(clf, scenario.dynamics, reach_sets, avoid_sets,
                            samples=10_000, tolerance=1e-8)
        reports.append((f"C{idx}", report))
        if not report.passed:
            raise PipelineError(
                f"certificate for {_crwa_str(crwa)} failed verification:\n{report.render()}"
            )
    return entries, reports


def _crwa_str(crwa: ContextRWA) -> str:
    return (f"({','.join(sorted(crwa.context)) or '-'} | "
            f"reach {','.join(sorted(crwa.reach)) or '-'} | "
            f"avoid {','.join(sorted(crwa.avoid)) or '-'} | {crwa.flavor})")


def run_synthesis(scenario: Scenario) -> PipelineArtifacts:
    notes: list = []
    timings: dict = {}
    sizes: dict = {}

    def stage(name):
        timings[name] = time.perf_counter()

    def done(name):
        timings[name] = time.perf_counter() - timings[name]

    stage("compile")
    frag = classify_fragment(scenario.spec.formula, scenario.spec.atom_classes)
    base_map = LabelMap(scenario, catalog=None)
    alphabet_cache: dict = {}

    def state_sets(obs):
        key = frozenset(obs)
        if key not in alphabet_cache:
            alphabet_cache[key] = sorted(base_map.realizable_state_labels(key), key=sorted)
        return alphabet_cache[key]

    compiled = compile_fragment(frag, structural_modes=True, state_sets=state_sets)
    done("compile")
    sizes["initial"] = (compiled.game.graph.n, len(compiled.game.graph.edges))

    stage("template")
    win0, template = compute_template(compiled.game)
    done("template")
    if compiled.initial not in win0:
        raise SynthesisInfeasible("the specification is unrealizable at the logical layer")

    stage("crwa")
    extraction = extract_crwas(
        compiled.game, template, frag.player1_atoms, frag.player0_atoms,
        region=win0 - compiled.good, skip_targets=compiled.good,
    )
    crwas, skipped = consolidate_crwas(
        extraction, scenario, drop_empty_reach=scenario.config["drop_empty_reach"]
    )
    done("crwa")
    for s in skipped:
        notes.append(f"skipped cRWA {s}")

    stage("certificates")
    entries, reports = realize_catalog(scenario, crwas, notes)
    if not entries:
        raise SynthesisInfeasible("no cRWA admits a certified controller")
    catalog = ControllerCatalog(tuple(entries), scenario.state_atoms,
                                frozenset(scenario.obs_atoms))
    labelmap = LabelMap(scenario, catalog)
    done("certificates")
    sizes["catalog"] = (len(entries), 0)

    stage("merge")
    merged = merge_game(compiled.game, good=compiled.good,
                        initial=compiled.initial, reachable_only=True)
    done("merge")
    sizes["merged"] = (merged.game.graph.n, len(merged.game.graph.edges))

    stage("control-graph")
    mg = merged.game.graph
    obs_domain = {
        mg.labels[v] & scenario.obs_atoms
        for v in mg.vertices
        if mg.owners[v] == 0 and v not in merged.good
    } | {e.crwa.context for e in entries}
    labels_by_obs = {obs: labelmap.realizable_state_labels(obs) for obs in sorted(obs_domain, key=sorted)}
    control = build_control_graph(catalog, labels_by_obs)
    violations = verify_control_graph_laws(control)
    if violations:
        raise PipelineError("control graph law violations:\n  " + "\n  ".join(violations))
    groups = build_live_groups(control)
    done("control-graph")
    sizes["control"] = (control.graph.n, len(control.graph.edges))

    stage("product")
    final = product_final_game(merged, control, groups)
    done("product")
    sizes["final"] = (final.game.graph.n, len(final.game.graph.edges))

    stage("solve")
    solution = solve_augmented_parity(final.game, final.groups)
    done("solve")
    sizes["winning"] = (len(solution.win0), 0)
    if not solution.win0:
        raise SynthesisInfeasible("the final augmented game has an empty winning region")

    return PipelineArtifacts(
        scenario=scenario, compiled=compiled, win0=win0, template=template,
        crwas=crwas, skipped_crwas=skipped, catalog=catalog,
        cert_reports=tuple(reports), merged=merged, control=control,
        groups=groups, final=final, solution=solution, labelmap=labelmap,
        sizes=sizes, timings=timings, notes=tuple(notes),
    )


# ---------------------------------------------------------------- persistence

def _f(x) -> str:
    return format(float(x), ".17g")


def _matrix(m) -> list:
    return [[_f(v) for v in row] for row in np.atleast_2d(np.asarray(m, dtype=float)).tolist()]


def _vector(v) -> list:
    return [_f(x) for x in np.asarray(v, dtype=float).reshape(-1).tolist()]


def catalog_to_json(catalog: ControllerCatalog) -> str:
    entries = []
    for e in catalog.entries:
        clf = e.clf
        entries.append({
            "control": e.control_prop,
            "basin": e.basin_prop,
            "context": sorted(e.crwa.context),
            "reach": sorted(e.crwa.reach),
            "avoid": sorted(e.crwa.avoid),
            "flavor": e.crwa.flavor,
            "P": _matrix(clf.P),
            "x_c": _vector(clf.x_c),
            "c": _f(clf.c),
            "C": _f(clf.C),
            "K": _matrix(clf.K),
            "u0": _vector(clf.u0),
            "rho": _f(clf.rho),
        })
    payload = {
        "entries": entries,
        "state_atoms": sorted(catalog.state_atoms),
        "obs_atoms": sorted(catalog.obs_atoms),
    }
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def catalog_from_json(text: str) -> ControllerCatalog:
    doc = json.loads(text)
    entries = []
    for e in doc["entries"]:
        crwa = ContextRWA(frozenset(e["context"]), frozenset(e["reach"]),
                          frozenset(e["avoid"]), e["flavor"])
        clf = QuadraticCLF(
            P=np.array(e["P"], dtype=float), x_c=np.array(e["x_c"], dtype=float),
            c=float(e["c"]), C=float(e["C"]), K=np.array(e["K"], dtype=float),
            u0=np.array(e["u0"], dtype=float), rho=float(e["rho"]), crwa=crwa,
        )
        entries.append(CatalogEntry(e["control"], e["basin"], crwa, clf))
    return ControllerCatalog(tuple(entries), frozenset(doc["state_atoms"]),
                             frozenset(doc["obs_atoms"]))


def template_to_text(win0, template) -> str:
    lines = ["win0 " + ",".join(map(str, sorted(win0)))]
    lines.append("unsafe " + ",".join(f"{u}:{v}" for (u, v) in sorted(template.unsafe)))
    lines.append("colive " + ",".join(f"{u}:{v}" for (u, v) in sorted(template.colive)))
    for g in template.livegroups:
        lines.append("livegroup " + ",".join(f"{u}:{v}" for (u, v) in sorted(g)))
    return "\n".join(lines) + "\n"


def save_artifacts(art: PipelineArtifacts, out_dir, scenario_text: str = "") -> dict:
    from ctxctl.service.scenario_io import render_scenario_toml

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}

    def write(name, text):
        path = out / name
        path.write_text(text, encoding="utf-8")
        files[name] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    # a canonical, self-contained document: reloading needs no side files
    write("scenario.toml", render_scenario_toml(art.scenario))
    write("initial.ctxgame", render_game_text(art.compiled.game))
    write("template.txt", template_to_text(art.win0, art.template))
    write("crwas.txt", "".join(_crwa_str(c) + "\n" for c in art.crwas))
    write("catalog.json", catalog_to_json(art.catalog))
    entry_by_name = {e.control_prop: e for e in art.catalog.entries}
    cert_lines = []
    for (name, report) in art.cert_reports:
        e = entry_by_name[name]
        cert_lines.append(f"== {name} ({_crwa_str(e.crwa)})")
        cert_lines.append(f"P = {_matrix(e.clf.P)}")
        cert_lines.append(f"K = {_matrix(e.clf.K)}")
        cert_lines.append(f"x_c = {_vector(e.clf.x_c)}")
        cert_lines.append(f"u0 = {_vector(e.clf.u0)}")
        cert_lines.append(f"c = {_f(e.clf.c)}  C = {_f(e.clf.C)}  rho = {_f(e.clf.rho)}")
        cert_lines.append(report.render())
    write("certificates.txt", "\n".join(cert_lines) + "\n")
    write("merged.ctxgame", render_game_text(art.merged.game))
    from ctxctl.games import ParityGame

    write("control.ctxgame", render_game_text(
        ParityGame(art.control.graph, [0] * art.control.graph.n), art.groups
    ))
    write("final.ctxgame", render_game_text(art.final.game, art.final.groups))
    meta = {
        "initial_vertex": art.compiled.initial,
        "good_sinks": list(art.final.good_sinks),
        "control_entry": {str(v): i for v, i in sorted(art.final.control_entry.items())
                          if i is not None},
        "sizes": {k: list(v) for k, v in sorted(art.sizes.items())},
        "notes": list(art.notes),
    }
    write("final_meta.json", json.dumps(meta, indent=1, sort_keys=True) + "\n")
    solution = {
        "win0": sorted(art.solution.win0),
        "strategy": {str(k): v for k, v in sorted(art.solution.strategy0.items())},
    }
    write("solution.json", json.dumps(solution, indent=1, sort_keys=True) + "\n")
    manifest = {"files": files}
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    log = ["stage timings (seconds):"]
    for k, v in art.timings.items():
        log.append(f"  {k}: {v:.3f}")
    log.append("sizes:")
    for k, (n, m) in art.sizes.items():
        log.append(f"  {k}: {n} vertices, {m} edges" if m else f"  {k}: {n}")
    (out / "build_log.txt").write_text("\n".join(log) + "\n", encoding="utf-8")
    return files


@dataclass
class LoadedArtifacts:
    scenario: Scenario
    catalog: ControllerCatalog
    final: FinalGame
    solution: AugmentedSolution
    labelmap: LabelMap

    def policy(self) -> HybridPolicy:
        return HybridPolicy(self.final, self.solution, self.catalog)


def load_artifacts(art_dir) -> LoadedArtifacts:
    from ctxctl.service.scenario_io import load_scenario

    art = Path(art_dir)
    scenario = load_scenario(art / "scenario.toml")
    catalog = catalog_from_json((art / "catalog.json").read_text(encoding="utf-8"))
    game, groups = parse_game_text((art / "final.ctxgame").read_text(encoding="utf-8"))
    meta = json.loads((art / "final_meta.json").read_text(encoding="utf-8"))
    sol = json.loads((art / "solution.json").read_text(encoding="utf-8"))
    label_p0 = {}
    for v in game.graph.vertices:
        if game.graph.owners[v] == 0:
            label_p0.setdefault(game.graph.labels[v], []).append(v)
    final = FinalGame(
        game=game,
        groups=groups,
        components={},
        control_entry={int(k): v for k, v in meta["control_entry"].items()},
        label_p0={k: tuple(sorted(vs)) for k, vs in label_p0.items()},
        good_sinks=tuple(meta["good_sinks"]),
    )
    solution = AugmentedSolution(
        win0=frozenset(sol["win0"]),
        win1=frozenset(game.graph.vertices) - frozenset(sol["win0"]),
        strategy0={int(k): v for k, v in sol["strategy"].items()},
    )
    labelmap = LabelMap(scenario, catalog)
    return LoadedArtifacts(scenario, catalog, final, solution, labelmap)
