"""Scenario files: one declarative TOML document holding the dynamics,
geometry, propositions, specification and solver configuration.

    name = "two-room-robot"

    [dynamics]
    A = [[0.0, 0.0], [0.0, 0.0]]
    B = [[1.0, 0.0], [0.0, 1.0]]
    g = [0.0, 0.0]
    input_box = 60.0           # or input_lo/input_hi vectors

    [box]
    lo = [0.0, 0.0]
    hi = [10.0, 10.0]

    [spec]
    file = "robot.ltlspec"     # or text = '''...'''

    [[regions]]
    prop = "T1"
    kind = "ball"              # ball | box
    center = [3.0, 4.0]
    radius = 0.2
    requires = []              # observation guards
    forbids = []

    [[effects]]
    trigger = "T1"
    clear = ["D"]

    [initial]
    x0 = [3.0, 6.0]
    obs = ["D"]

    [config]                   # merged over the runtime defaults
    rho_list = [3.0, 2.0, 1.0]
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import tomli

from ctxctl.clf.dynamics import AffineDynamics
from ctxctl.clf.geometry import Ellipsoid, Polytope, box_polytope
from ctxctl.runtime.scenario import EffectRule, GuardedRegion, Scenario
from ctxctl.spec.specfile import load_ltlspec, parse_ltlspec


class ScenarioError(ValueError):
    pass


def _region_from_table(tab, box_lo, box_hi):
    kind = tab.get("kind", "ball")
    if kind == "ball":
        center = np.asarray(tab["center"], dtype=float)
        r = float(tab["radius"])
        if r <= 0:
            raise ScenarioError(f"region {tab.get('prop')}: radius must be positive")
        return Ellipsoid(center, np.eye(len(center)) / r ** 2)
    if kind == "ellipse":
        return Ellipsoid(np.asarray(tab["center"], dtype=float),
                         np.asarray(tab["shape"], dtype=float))
    if kind == "box":
        return box_polytope(np.asarray(tab["lo"], dtype=float),
                            np.asarray(tab["hi"], dtype=float))
    if kind == "polytope":
        return Polytope(np.asarray(tab["anchor"], dtype=float),
                        np.asarray(tab["normals"], dtype=float))
    raise ScenarioError(f"unknown region kind {kind!r}")


def parse_scenario_toml(text: str, base_dir: Path | None = None) -> Scenario:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as err:
        raise ScenarioError(f"scenario file is not valid TOML: {err}") from err
    base = Path(base_dir) if base_dir else Path(".")

    dyn = doc.get("dynamics")
    if dyn is None:
        raise ScenarioError("missing [dynamics]")
    A = np.asarray(dyn["A"], dtype=float)
    B = np.asarray(dyn["B"], dtype=float)
    g = np.asarray(dyn["g"], dtype=float)
    m = B.shape[1]
    if "input_box" in dyn:
        u = float(dyn["input_box"])
        upoly = box_polytope(-u * np.ones(m), u * np.ones(m))
    elif "input_normals" in dyn:
        upoly = Polytope(np.asarray(dyn["input_anchor"], dtype=float),
                         np.asarray(dyn["input_normals"], dtype=float))
    else:
        upoly = box_polytope(np.asarray(dyn["input_lo"], dtype=float),
                             np.asarray(dyn["input_hi"], dtype=float))
    dynamics = AffineDynamics(A, B, g, upoly)

    box = doc.get("box")
    if box is None:
        raise ScenarioError("missing [box]")
    lo = np.asarray(box["lo"], dtype=float)
    hi = np.asarray(box["hi"], dtype=float)

    spec_tab = doc.get("spec")
    if spec_tab is None:
        raise ScenarioError("missing [spec]")
    if "text" in spec_tab:
        spec = parse_ltlspec(spec_tab["text"])
    else:
        spec = load_ltlspec(base / spec_tab["file"])

    props: dict = {}
    for tab in doc.get("regions", []):
        prop = tab["prop"]
        if prop not in spec.atom_classes or spec.atom_classes[prop] != "state":
            raise ScenarioError(f"region for undeclared state proposition {prop!r}")
        region = _region_from_table(tab, lo, hi)
        guarded = GuardedRegion(
            region,
            frozenset(tab.get("requires", [])),
            frozenset(tab.get("forbids", [])),
        )
        props.setdefault(prop, []).append(guarded)
    missing = [p for p, c in spec.atom_classes.items() if c == "state" and p not in props]
    if missing:
        raise ScenarioError(f"state propositions without geometry: {missing}")

    effects = tuple(
        EffectRule(tab["trigger"], frozenset(tab.get("set", [])), frozenset(tab.get("clear", [])))
        for tab in doc.get("effects", [])
    )

    initial = doc.get("initial", {})
    x0 = np.asarray(initial["x0"], dtype=float) if "x0" in initial else None
    obs0 = frozenset(initial.get("obs", []))

    obs_atoms = frozenset(p for p, c in spec.atom_classes.items() if c == "observation")
    return Scenario(
        name=doc.get("name", "scenario"),
        dynamics=dynamics,
        box_lo=lo,
        box_hi=hi,
        props=props,
        obs_atoms=obs_atoms,
        spec=spec,
        effects=effects,
        initial_state=x0,
        initial_obs=obs0,
        config=dict(doc.get("config", {})),
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario_toml(path.read_text(encoding="utf-8"), base_dir=path.parent)


def render_ltlspec(spec) -> str:
    from ctxctl.spec.ltl import format_ltl

    by_class = {"state": [], "observation": [], "control": []}
    for name, cls in spec.atom_classes.items():
        by_class[cls].append(name)
    lines = []
    header = {"state": "state", "observation": "obs", "control": "control"}
    for cls in ("state", "observation", "control"):
        if by_class[cls]:
            lines.append(f"{header[cls]}: {' '.join(sorted(by_class[cls]))}")
    if spec.assume:
        lines.append("assume:")
        lines.extend(f"  {format_ltl(f)}" for f in spec.assume)
    lines.append("guarantee:")
    lines.extend(f"  {format_ltl(f)}" for f in spec.guarantee)
    return "\n".join(lines) + "\n"


def _toml_float(x) -> str:
    s = format(float(x), ".17g")
    if "." not in s and "e" not in s and "inf" not in s and "nan" not in s:
        s += ".0"
    return s


def _toml_vec(v) -> str:
    return "[" + ", ".join(_toml_float(x) for x in np.asarray(v, dtype=float).reshape(-1)) + "]"


def _toml_mat(m) -> str:
    rows = [_toml_vec(row) for row in np.atleast_2d(np.asarray(m, dtype=float))]
    return "[" + ", ".join(rows) + "]"


def render_scenario_toml(scenario: Scenario) -> str:
    """A canonical, self-contained scenario document (spec inlined)."""
    from ctxctl.clf.geometry import Ellipsoid

    dyn = scenario.dynamics
    out = [f'name = "{scenario.name}"', ""]
    out.append("[dynamics]")
    out.append(f"A = {_toml_mat(dyn.A)}")
    out.append(f"B = {_toml_mat(dyn.B)}")
    out.append(f"g = {_toml_vec(dyn.g)}")
    U = dyn.input_polytope
    out.append(f"input_anchor = {_toml_vec(U.anchor)}")
    out.append(f"input_normals = {_toml_mat(U.normals)}")
    out.append("")
    out.append("[box]")
    out.append(f"lo = {_toml_vec(scenario.box_lo)}")
    out.append(f"hi = {_toml_vec(scenario.box_hi)}")
    out.append("")
    out.append("[spec]")
    out.append('text = """')
    out.append(render_ltlspec(scenario.spec).rstrip("\n"))
    out.append('"""')
    for prop in sorted(scenario.props):
        for g in scenario.props[prop]:
            out.append("")
            out.append("[[regions]]")
            out.append(f'prop = "{prop}"')
            r = g.region
            if isinstance(r, Ellipsoid):
                out.append('kind = "ellipse"')
                out.append(f"center = {_toml_vec(r.center)}")
                out.append(f"shape = {_toml_mat(r.shape)}")
            else:
                out.append('kind = "polytope"')
                out.append(f"anchor = {_toml_vec(r.anchor)}")
                out.append(f"normals = {_toml_mat(r.normals)}")
            if g.requires:
                out.append(f"requires = {sorted(g.requires)!r}".replace("'", '"'))
            if g.forbids:
                out.append(f"forbids = {sorted(g.forbids)!r}".replace("'", '"'))
    for rule in scenario.effects:
        out.append("")
        out.append("[[effects]]")
        out.append(f'trigger = "{rule.trigger}"')
        if rule.set_obs:
            out.append(f"set = {sorted(rule.set_obs)!r}".replace("'", '"'))
        if rule.clear_obs:
            out.append(f"clear = {sorted(rule.clear_obs)!r}".replace("'", '"'))
    out.append("")
    out.append("[initial]")
    if scenario.initial_state is not None:
        out.append(f"x0 = {_toml_vec(scenario.initial_state)}")
    out.append(f"obs = {sorted(scenario.initial_obs)!r}".replace("'", '"'))
    out.append("")
    out.append("[config]")
    for key in sorted(scenario.config):
        val = scenario.config[key]
        if isinstance(val, bool):
            out.append(f"{key} = {'true' if val else 'false'}")
        elif isinstance(val, (int,)):
            out.append(f"{key} = {val}")
        elif isinstance(val, float):
            out.append(f"{key} = {_toml_float(val)}")
        elif isinstance(val, (list, tuple)):
            out.append(f"{key} = [" + ", ".join(_toml_float(v) for v in val) + "]")
    return "\n".join(out) + "\n"
