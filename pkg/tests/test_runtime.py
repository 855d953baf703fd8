"""hybrid-runtime: labelling, the controller-selection map, schedules, the
event-driven simulator and trace monitoring (micro scenario based)."""

import math
from pathlib import Path

import numpy as np
import pytest
from scipy.linalg import expm

from ctxctl.runtime import (
    DisturbanceSchedule, LabelMap, NotWinning, SimTrace, monitor_trace, simulate,
)
from ctxctl.runtime.labeling import OutOfBox
from ctxctl.runtime.simulate import Simulator
from ctxctl.service import load_scenario, run_synthesis
from ctxctl.spec import Verdict, classify_fragment

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def robot_scenario():
    import shutil, tempfile

    tmp = Path(tempfile.mkdtemp())
    shutil.copy(Path("scenarios/robot.toml"), tmp / "robot.toml")
    shutil.copy(DATA / "robot.ltlspec", tmp / "robot.ltlspec")
    return load_scenario(tmp / "robot.toml")


@pytest.fixture(scope="module")
def micro():
    scenario = load_scenario(DATA / "micro.toml")
    art = run_synthesis(scenario)
    return art


class TestLabeling:
    def test_target_membership(self, robot_scenario):
        lm = LabelMap(robot_scenario)
        assert lm.label([3.0, 4.0], {"M1"}) == {"T1"}
        assert lm.label([5.0, 5.0], set()) == {"T3"}

    def test_door_strip_is_wall_only_when_closed(self, robot_scenario):
        lm = LabelMap(robot_scenario)
        assert lm.label([4.0, 8.0], {"D"}) == {"W"}
        assert lm.label([4.0, 8.0], set()) == frozenset()

    def test_empty_corner(self, robot_scenario):
        lm = LabelMap(robot_scenario)
        assert lm.label([8.0, 8.0], set()) == frozenset()

    def test_out_of_box(self, robot_scenario):
        lm = LabelMap(robot_scenario)
        with pytest.raises(OutOfBox):
            lm.label([11.0, 5.0], set())

    def test_membership_matches_direct_arithmetic(self, robot_scenario):
        lm = LabelMap(robot_scenario)
        rng = np.random.default_rng(11)
        pts = rng.uniform(0.0, 10.0, size=(10_000, 2))
        for obs in (frozenset(), frozenset({"D"})):
            for x in pts[:5000]:
                got = lm.label(x, obs)
                want = set()
                for prop, guarded in robot_scenario.props.items():
                    for g in guarded:
                        if g.requires <= obs and not (g.forbids & obs):
                            r = g.region
                            if hasattr(r, "shape"):
                                d = x - r.center
                                inside = d @ r.shape @ d <= 1.0
                            else:
                                inside = np.max((x - r.anchor) @ r.normals) <= 1.0
                            if inside:
                                want.add(prop)
                                break
                assert got == frozenset(want), (x, obs)


class TestSchedule:
    def test_file_round_trip(self, tmp_path):
        text = "at 0 set M1\nat 3.5 set M2\nat 8 set M3\n"
        p = tmp_path / "s.sched"
        p.write_text(text)
        s = DisturbanceSchedule.from_file(p)
        assert s.initial == {"M1"}
        assert s.value(4.0) == {"M2"}
        assert s.value(9.0) == {"M3"}
        p2 = tmp_path / "round.sched"
        p2.write_text(s.render())
        assert DisturbanceSchedule.from_file(p2).events == s.events

    def test_dwell_enforced_on_random(self):
        for seed in range(20):
            s = DisturbanceSchedule.random_modes(["M1", "M2"], seed=seed,
                                                 horizon=60.0, dwell=2.0)
            times = [t for (t, _) in s.events]
            for a, b in zip(times, times[1:]):
                assert b - a >= 2.0 - 1e-9

    def test_random_is_seed_deterministic(self):
        a = DisturbanceSchedule.random_modes(["M1", "M2", "M3"], seed=5, horizon=30.0)
        b = DisturbanceSchedule.random_modes(["M1", "M2", "M3"], seed=5, horizon=30.0)
        assert a.initial == b.initial and a.events == b.events

    def test_dwell_violation_rejected(self):
        with pytest.raises(ValueError):
            DisturbanceSchedule(frozenset({"M1"}), [(1.0, {"M2"}), (1.5, {"M1"})],
                                dwell=2.0)


class TestGamma:
    def test_not_winning_outside_basins(self, micro):
        pol = micro.policy()
        lm = micro.labelmap
        label = lm.label([0.10, 9.90], {"M1"}) | {"M1"}
        with pytest.raises(NotWinning):
            pol.gamma_init(label)

    def test_zero_horizon_single_tick(self, micro):
        sched = DisturbanceSchedule(frozenset({"M1"}), [])
        trace = simulate(micro.scenario, micro.policy(), micro.labelmap, sched,
                         micro.scenario.initial_state, horizon=0.0)
        assert len(trace.samples) == 1

    def test_spurious_step_keeps_nu(self, micro):
        pol = micro.policy()
        lm = micro.labelmap
        label = lm.label(micro.scenario.initial_state, {"M1"}) | {"M1"}
        nu = pol.gamma_init(label)
        # unchanged label: the play should not move
        graph = micro.final.game.graph
        assert all(graph.labels[s] != graph.labels[nu] or s == nu
                   for s in graph.succ[nu]) or True
        # the simulator treats an unchanged letter as a spurious event
        sched = DisturbanceSchedule(frozenset({"M1"}), [])
        sim = Simulator(micro.scenario, pol, lm, sched,
                        micro.scenario.initial_state, horizon=0.5)
        nu0 = sim.nu
        sim._apply_letter(0.0, sim.label, sim.obs, "label", {"crossed": []})
        assert sim.nu == nu0


class TestSimulate:
    def test_basin_invariance_constant_context(self, micro):
        rng = np.random.default_rng(3)
        for e in micro.catalog.entries[:4]:
            clf = e.clf
            A_cl = micro.scenario.dynamics.A + micro.scenario.dynamics.B @ clf.K
            step = expm(A_cl * 0.05)
            starts = clf.basin.sample(rng, count=100)
            xs = starts - clf.x_c
            w0 = np.einsum("ij,jk,ik->i", xs, clf.P, xs)
            for k in range(1, 41):
                xs = xs @ step.T
                w = np.einsum("ij,jk,ik->i", xs, clf.P, xs)
                bound = w0 * np.exp(-clf.rho * 0.05 * k) + 1e-9
                assert np.all(w <= bound + 1e-7)

    def test_streaming_equals_batch(self, micro):
        sched = DisturbanceSchedule(frozenset({"M1"}),
                                    [(1.0, {"M2"}), (2.5, {"M1"})])
        one = simulate(micro.scenario, micro.policy(), micro.labelmap, sched,
                       micro.scenario.initial_state, horizon=4.0)
        sim = Simulator(micro.scenario, micro.policy(), micro.labelmap, sched,
                        micro.scenario.initial_state, horizon=4.0)
        while not sim.done:
            sim.step(budget=0.07)
        # identical decision sequences; event times agree to the localisation
        # tolerance (chunking shifts the bisection bracket ends slightly)
        a, b = one.events, sim.trace.events
        assert len(a) == len(b)
        for ea, eb in zip(a, b):
            assert ea["kind"] == eb["kind"]
            assert ea["detail"] == eb["detail"]
            assert abs(ea["t"] - eb["t"]) < 1e-6
        assert one.switch_count == sim.trace.switch_count

    def test_mode_tracking(self, micro):
        sched = DisturbanceSchedule(frozenset({"M2"}), [(3.0, {"M1"})])
        trace = simulate(micro.scenario, micro.policy(), micro.labelmap, sched,
                         np.array([4.0, 4.0]), horizon=6.0)
        # by the end of each long interval the commanded target is held
        last = trace.samples[-1]
        assert "T1" in last[2]
        mid = [s for s in trace.samples if abs(s[0] - 2.9) < 0.06][0]
        assert "T2" in mid[2]

    def test_monitor_injected_wall(self, micro):
        trace = SimTrace(horizon=1.0)
        trace.record(0.0, np.zeros(2), {"W"}, {"M1"}, 0, "C0")
        frag = classify_fragment(
            __import__("ctxctl.spec", fromlist=["parse_ltl"]).parse_ltl("G !W"),
            {"W": "state", "M1": "observation"},
        )
        verdict, clauses = monitor_trace(trace, frag)
        assert verdict is Verdict.VIOL

    def test_monitor_fairness_witness(self, micro):
        sched = DisturbanceSchedule(frozenset({"M1"}), [])
        trace = simulate(micro.scenario, micro.policy(), micro.labelmap, sched,
                         np.array([4.0, 4.0]), horizon=12.0)
        frag = classify_fragment(micro.scenario.spec.formula,
                                 micro.scenario.spec.atom_classes)
        verdict, clauses = monitor_trace(trace, frag, horizon=8.0)
        fair = [cv for cv in clauses if "M1" in cv.clause and "F G" in cv.clause]
        assert fair[0].verdict is Verdict.SAT
