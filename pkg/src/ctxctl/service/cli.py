"""Command line interface.

    ctxctl synth <scenario.toml> --out <dir>
    ctxctl solve <game.ctxgame> --out <dir>
    ctxctl simulate <artifacts> (--schedule <file> | --random <seed>) [--horizon S]
    ctxctl serve <artifacts> [--port P] [--pace R]

Exit codes: 0 success, 2 infeasible / empty winning region, 3 input error,
4 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_INPUT = 3
EXIT_INTERNAL = 4


def cmd_synth(args) -> int:
    from ctxctl.service.artifacts import (
        PipelineError, SynthesisInfeasible, run_synthesis, save_artifacts,
    )
    from ctxctl.service.scenario_io import ScenarioError, load_scenario
    from ctxctl.spec.fragment import UnsupportedFragment

    path = Path(args.scenario)
    try:
        scenario = load_scenario(path)
    except (ScenarioError, OSError, ValueError) as err:
        print(f"scenario error: {err}", file=sys.stderr)
        return EXIT_INPUT
    try:
        art = run_synthesis(scenario)
    except UnsupportedFragment as err:
        print(f"specification outside the native fragment: {err}", file=sys.stderr)
        print("build the parity game externally and use `ctxctl solve`", file=sys.stderr)
        return EXIT_INPUT
    except SynthesisInfeasible as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except PipelineError as err:
        print(f"internal invariant breach: {err}", file=sys.stderr)
        return EXIT_INTERNAL

    out = Path(args.out or (path.stem + "-artifacts"))
    save_artifacts(art, out, scenario_text=path.read_text(encoding="utf-8"))
    print(f"artifacts written to {out}")
    print(f"{'stage':<12} {'vertices':>9} {'edges':>9} {'seconds':>9}")
    for stage in ("initial", "merged", "control", "final"):
        n, m = art.sizes[stage]
        key = {"initial": "compile", "merged": "merge",
               "control": "control-graph", "final": "product"}[stage]
        print(f"{stage:<12} {n:>9} {m:>9} {art.timings.get(key, 0.0):>9.2f}")
    print(f"{'solve':<12} {len(art.solution.win0):>9} {'':>9} {art.timings['solve']:>9.2f}")
    print(f"winning region: {len(art.solution.win0)} of {art.final.game.graph.n} vertices")
    return EXIT_OK


def cmd_solve(args) -> int:
    from ctxctl.games import compute_template, solve_parity
    from ctxctl.games.augmented import solve_augmented_parity
    from ctxctl.spec.gamefile import GameFormatError, load_game

    try:
        game, groups = load_game(args.game)
    except (GameFormatError, OSError) as err:
        print(f"game file error: {err}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out or (Path(args.game).stem + "-solution"))
    out.mkdir(parents=True, exist_ok=True)

    if groups:
        sol = solve_augmented_parity(game, groups)
        win0, strategy = sol.win0, sol.strategy0
        win1 = frozenset(game.graph.vertices) - win0
        template_text = ""
    else:
        sol = solve_parity(game)
        win0, win1, strategy = sol.win0, sol.win1, sol.strategy0
        _, template = compute_template(game)
        lines = ["unsafe " + ",".join(f"{u}:{v}" for (u, v) in sorted(template.unsafe)),
                 "colive " + ",".join(f"{u}:{v}" for (u, v) in sorted(template.colive))]
        for g in template.livegroups:
            lines.append("livegroup " + ",".join(f"{u}:{v}" for (u, v) in sorted(g)))
        template_text = "\n".join(lines) + "\n"
        (out / "template.txt").write_text(template_text, encoding="utf-8")

    payload = {
        "win0": sorted(win0),
        "win1": sorted(win1),
        "strategy0": {str(k): v for k, v in sorted(strategy.items())},
    }
    (out / "regions.json").write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n",
                                      encoding="utf-8")
    print(f"win0: {len(win0)} vertices, win1: {len(win1)}; written to {out}")
    return EXIT_OK if win0 else EXIT_INFEASIBLE


def cmd_simulate(args) -> int:
    import numpy as np

    from ctxctl.runtime import DisturbanceSchedule, EventStorm, monitor_trace, simulate
    from ctxctl.runtime.policy import NoMatchingEdge, NotWinning
    from ctxctl.service.artifacts import load_artifacts
    from ctxctl.spec.fragment import classify_fragment

    try:
        loaded = load_artifacts(args.artifacts)
    except (OSError, ValueError, KeyError) as err:
        print(f"artifact error: {err}", file=sys.stderr)
        return EXIT_INPUT
    scenario = loaded.scenario
    frag = classify_fragment(scenario.spec.formula, scenario.spec.atom_classes)
    modes = sorted(frag.modes)

    if args.schedule:
        schedule = DisturbanceSchedule.from_file(args.schedule,
                                                 dwell=scenario.config["dwell"])
    else:
        schedule = DisturbanceSchedule.random_modes(
            modes, seed=args.random, horizon=args.horizon,
            dwell=scenario.config["dwell"],
        )
    x0 = np.asarray(args.x0 or scenario.initial_state, dtype=float)
    out = Path(args.out or "trace")
    out.mkdir(parents=True, exist_ok=True)
    try:
        trace = simulate(scenario, loaded.policy(), loaded.labelmap, schedule,
                         x0, horizon=args.horizon)
    except NotWinning as err:
        print(f"not a winning initial condition: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NoMatchingEdge, EventStorm) as err:
        print(f"runtime invariant breach: {err}", file=sys.stderr)
        return EXIT_INTERNAL
    (out / "trace.jsonl").write_text(trace.dump_json(), encoding="utf-8")
    (out / "events.txt").write_text(trace.dump_text(), encoding="utf-8")
    verdict, clauses = monitor_trace(trace, frag)
    lines = [f"overall {verdict.value}"]
    for cv in clauses:
        lines.append(f"{cv.verdict.value:13s} {cv.clause}")
    (out / "verdicts.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"simulated {args.horizon}s: {trace.switch_count} controller switches, "
          f"verdict {verdict.value}; trace in {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        from ctxctl.service.server import run_server
    except ImportError as err:
        print(f"server dependencies missing: {err}", file=sys.stderr)
        return EXIT_INPUT
    return run_server(args.artifacts, host=args.host, port=args.port, pace=args.pace)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ctxctl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="run the full synthesis pipeline")
    p.add_argument("scenario")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("solve", help="solve a .ctxgame file")
    p.add_argument("game")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run the closed loop from artifacts")
    p.add_argument("artifacts")
    p.add_argument("--schedule", default=None)
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--horizon", type=float, default=60.0)
    p.add_argument("--x0", type=float, nargs="+", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="live steering service")
    p.add_argument("artifacts")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8700)
    p.add_argument("--pace", type=float, default=1.0)
    p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
