"""Game graphs, parity games, attractors, Zielonka solving and strategy templates."""

from ctxctl.games.graph import GameGraph, ParityGame, P0, P1
from ctxctl.games.attractor import attractor, AttractorResult
from ctxctl.games.zielonka import solve_parity, compute_template, ParitySolution
from ctxctl.games.templates import StrategyTemplate, template_compliant, compliant_strategies
from ctxctl.games.oracle import brute_force_win, strategy_wins_from

__all__ = [
    "GameGraph",
    "ParityGame",
    "P0",
    "P1",
    "attractor",
    "AttractorResult",
    "solve_parity",
    "compute_template",
    "ParitySolution",
    "StrategyTemplate",
    "template_compliant",
    "compliant_strategies",
    "brute_force_win",
    "strategy_wins_from",
]
