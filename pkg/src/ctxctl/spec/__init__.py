"""LTL frontend: parsing, the supported fragment, compilation to parity
games, game file I/O, and finite-trace monitoring."""

from ctxctl.spec.ltl import (
    Atom, Not, And, Or, Implies, Iff, Next, Until, WeakUntil, Eventually, Always,
    parse_ltl, format_ltl, LtlError, atoms_of,
)
from ctxctl.spec.fragment import (
    SpecFragment, SafetyClause, UnsupportedFragment, classify_fragment,
)
from ctxctl.spec.compiler import CompiledSpec, compile_fragment, bisim_quotient
from ctxctl.spec.gamefile import load_game, save_game, parse_game_text, render_game_text
from ctxctl.spec.monitor import Verdict, trace_check, eval_lasso
from ctxctl.spec.specfile import LtlSpec, load_ltlspec, parse_ltlspec

__all__ = [
    "Atom", "Not", "And", "Or", "Implies", "Iff", "Next", "Until", "WeakUntil",
    "Eventually", "Always", "parse_ltl", "format_ltl", "LtlError", "atoms_of",
    "SpecFragment", "SafetyClause", "UnsupportedFragment", "classify_fragment",
    "CompiledSpec", "compile_fragment", "bisim_quotient",
    "load_game", "save_game", "parse_game_text", "render_game_text",
    "Verdict", "trace_check", "eval_lasso",
    "LtlSpec", "load_ltlspec", "parse_ltlspec",
]
