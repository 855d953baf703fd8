"""Scenario data: dynamics, the state box, proposition geometry (possibly
conditioned on observations, e.g. a door strip that is a wall only while
closed), the specification, and the rules linking state events to
observation updates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ctxctl.clf.dynamics import AffineDynamics
from ctxctl.clf.geometry import Ellipsoid, Polytope, halfspace
from ctxctl.spec.specfile import LtlSpec


@dataclass(frozen=True)
class GuardedRegion:
    """A region that counts for its proposition only under matching
    observations: every atom in requires present, none in forbids."""

    region: object  # Ellipsoid | Polytope
    requires: frozenset = frozenset()
    forbids: frozenset = frozenset()

    def active(self, obs) -> bool:
        obs = frozenset(obs)
        return self.requires <= obs and not (self.forbids & obs)


@dataclass(frozen=True)
class EffectRule:
    """Entering the trigger proposition's region updates observations
    atomically with the state event."""

    trigger: str
    set_obs: frozenset = frozenset()
    clear_obs: frozenset = frozenset()


DEFAULT_CONFIG = {
    "rho_list": (0.25, 0.5, 1.0),
    "eps_mem": 1e-7,
    "eps_event": 1e-9,
    "zeno_cap": 64,
    "dwell": 0.0,
    "label_grid": 140,
    "max_regions": 12,
    "drop_empty_reach": True,
    "eps_feas": 1e-6,
    "rtol": 1e-8,
    "atol": 1e-10,
    "sample_dt": 0.05,
}


@dataclass
class Scenario:
    name: str
    dynamics: AffineDynamics
    box_lo: np.ndarray
    box_hi: np.ndarray
    props: dict                  # state prop -> list[GuardedRegion]
    obs_atoms: frozenset
    spec: LtlSpec
    effects: tuple = ()
    initial_state: np.ndarray | None = None
    initial_obs: frozenset = frozenset()
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.box_lo = np.asarray(self.box_lo, dtype=float)
        self.box_hi = np.asarray(self.box_hi, dtype=float)
        cfg = dict(DEFAULT_CONFIG)
        cfg.update(self.config)
        self.config = cfg
        for rule in self.effects:
            if rule.trigger not in self.props:
                raise ValueError(f"effect rule triggers on undeclared proposition {rule.trigger}")
            if not (rule.set_obs | rule.clear_obs) <= self.obs_atoms:
                raise ValueError("effect rule updates undeclared observations")

    @property
    def state_atoms(self) -> frozenset:
        return frozenset(self.props)

    def in_box(self, x, tol=1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.box_lo - tol) and np.all(x <= self.box_hi + tol))

    def regions_for(self, prop: str, obs) -> list:
        return [g.region for g in self.props[prop] if g.active(obs)]

    def box_complement_halfspaces(self) -> list:
        """The outside of the state box as one halfspace per facet; used as
        implicit avoid regions so basins stay inside the box."""
        out = []
        n = self.box_lo.shape[0]
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0
            out.append(halfspace(-e, -self.box_lo[i]))
            out.append(halfspace(e, self.box_hi[i]))
        return out

    def apply_effects(self, entered_props, obs) -> frozenset:
        """Observation set after atomically applying the entry effects."""
        obs = set(obs)
        for rule in self.effects:
            if rule.trigger in entered_props:
                obs -= set(rule.clear_obs)
                obs |= set(rule.set_obs)
        return frozenset(obs)
