"""Finite-prefix monitoring and exact lasso evaluation.

trace_check gives the three-valued verdict of a finite prefix against a
formula: VIOL iff every infinite extension violates it, SAT iff every
extension satisfies it, INCONCLUSIVE otherwise.  The implementation is exact
for the supported fragment's clauses; a whole assume=>guarantee formula is
monitored clause-wise with the aggregation rule stated in the docstring of
trace_check.  Fairness clauses are never finitely decidable, so their SAT
verdict is relative to a declared witness horizon.

eval_lasso decides full LTL exactly on ultimately periodic traces; it is the
independent oracle the compiled games are checked against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ctxctl.spec.fragment import SpecFragment, UnsupportedFragment, classify_fragment
from ctxctl.spec.ltl import (
    Always, And, Atom, Eventually, Iff, Implies, Next, Not, Or, Until, WeakUntil,
    eval_prop,
)


class Verdict(enum.Enum):
    SAT = "sat"
    VIOL = "viol"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class ClauseVerdict:
    clause: str
    verdict: Verdict
    position: int | None = None
    reason: str = ""


def _check_safety_clause(sc, trace):
    """Exact three-valued verdict for one safety clause on a finite prefix."""
    if sc.kind == "invariant":
        for i, letter in enumerate(trace):
            if not eval_prop(sc.trigger, letter):
                return Verdict.VIOL, i
        return Verdict.INCONCLUSIVE, None
    if sc.kind == "next":
        for i in range(len(trace) - 1):
            if eval_prop(sc.trigger, trace[i]) and not eval_prop(sc.then, trace[i + 1]):
                return Verdict.VIOL, i + 1
        return Verdict.INCONCLUSIVE, None
    active = False
    for i, letter in enumerate(trace):
        if active or eval_prop(sc.trigger, letter):
            if eval_prop(sc.until, letter):
                active = False
            elif eval_prop(sc.then, letter):
                active = True
            else:
                return Verdict.VIOL, i
    return Verdict.INCONCLUSIVE, None


def _check_fairness(mode, target, trace, durations, horizon):
    """SAT iff the mode was constant over the last `horizon` time units and
    the target held over the trailing half of that window; never VIOL."""
    if not trace or horizon <= 0:
        return Verdict.INCONCLUSIVE
    if durations is None:
        durations = [1.0] * len(trace)
    acc = 0.0
    mode_ok = True
    target_ok = True
    for letter, dur in zip(reversed(trace), reversed(durations)):
        if acc < horizon and mode not in letter:
            mode_ok = False
            break
        if acc < horizon / 2 and target not in letter:
            target_ok = False
        acc += dur
        if acc >= horizon:
            break
    if acc < horizon:
        return Verdict.INCONCLUSIVE
    return Verdict.SAT if (mode_ok and target_ok) else Verdict.INCONCLUSIVE


def trace_check(trace, formula, atom_classes=None, durations=None, horizon=8.0):
    """Three-valued verdict of a finite prefix against a fragment formula.

    Returns (verdict, clause_verdicts).  Aggregation over an
    assumption=>guarantee fragment: any violated assumption clause makes the
    whole formula SAT; otherwise any violated guarantee safety clause makes
    it VIOL; otherwise SAT only when every guarantee clause is individually
    SAT under the declared fairness witness rule; INCONCLUSIVE else.
    Formulas outside the fragment get INCONCLUSIVE with a reason.
    """
    trace = [frozenset(l) for l in trace]
    if isinstance(formula, SpecFragment):
        frag = formula
    else:
        if atom_classes is None:
            names = set()
            for l in trace:
                names |= l
            from ctxctl.spec.ltl import atoms_of

            names |= atoms_of(formula)
            atom_classes = {n: "state" for n in names}
        try:
            frag = classify_fragment(formula, atom_classes)
        except UnsupportedFragment as err:
            return Verdict.INCONCLUSIVE, [
                ClauseVerdict("<formula>", Verdict.INCONCLUSIVE, reason=str(err))
            ]

    clause_verdicts = []
    assumption_broken = False
    guarantee_broken = False
    all_guarantees_sat = True

    if frag.modes:
        ok = all(len(l & set(frag.modes)) == 1 for l in trace)
        if not ok:
            assumption_broken = True
        clause_verdicts.append(
            ClauseVerdict(
                "mode-exclusivity",
                Verdict.INCONCLUSIVE if ok else Verdict.VIOL,
                reason="" if ok else "non-exclusive letter",
            )
        )

    for sc in frag.safety:
        verdict, pos = _check_safety_clause(sc, trace)
        clause_verdicts.append(ClauseVerdict(str(sc), verdict, pos))
        if verdict is Verdict.VIOL:
            if sc.side == "assumption":
                assumption_broken = True
            else:
                guarantee_broken = True
        elif sc.side == "guarantee" and verdict is not Verdict.SAT:
            # an unviolated safety clause can still be violated later
            all_guarantees_sat = False

    for (m, t) in frag.fairness:
        verdict = _check_fairness(m, t, trace, durations, horizon)
        clause_verdicts.append(ClauseVerdict(f"F G {m} -> F G {t}", verdict))
        if verdict is not Verdict.SAT:
            all_guarantees_sat = False

    if assumption_broken:
        return Verdict.SAT, clause_verdicts
    if guarantee_broken:
        return Verdict.VIOL, clause_verdicts
    if all_guarantees_sat and (frag.safety or frag.fairness):
        return Verdict.SAT, clause_verdicts
    return Verdict.INCONCLUSIVE, clause_verdicts


def eval_lasso(formula, stem, cycle) -> bool:
    """Exact LTL evaluation on the ultimately periodic trace stem.cycle^w."""
    stem = [frozenset(l) for l in stem]
    cycle = [frozenset(l) for l in cycle]
    if not cycle:
        raise ValueError("cycle must be nonempty")
    letters = stem + cycle
    n = len(letters)
    loop = len(stem)

    def succ(p):
        return p + 1 if p + 1 < n else loop

    cache = {}

    def ev(f):
        key = f
        if key in cache:
            return cache[key]
        if isinstance(f, Atom):
            if f.name == "true":
                vals = [True] * n
            elif f.name == "false":
                vals = [False] * n
            else:
                vals = [f.name in letters[p] for p in range(n)]
        elif isinstance(f, Not):
            vals = [not v for v in ev(f.arg)]
        elif isinstance(f, And):
            a, b = ev(f.left), ev(f.right)
            vals = [x and y for x, y in zip(a, b)]
        elif isinstance(f, Or):
            a, b = ev(f.left), ev(f.right)
            vals = [x or y for x, y in zip(a, b)]
        elif isinstance(f, Implies):
            a, b = ev(f.left), ev(f.right)
            vals = [(not x) or y for x, y in zip(a, b)]
        elif isinstance(f, Iff):
            a, b = ev(f.left), ev(f.right)
            vals = [x == y for x, y in zip(a, b)]
        elif isinstance(f, Next):
            a = ev(f.arg)
            vals = [a[succ(p)] for p in range(n)]
        elif isinstance(f, Until):
            a, b = ev(f.left), ev(f.right)
            vals = [False] * n
            for _ in range(n + 1):  # least fixpoint over the lasso
                changed = False
                for p in range(n - 1, -1, -1):
                    nv = b[p] or (a[p] and vals[succ(p)])
                    if nv != vals[p]:
                        vals[p] = nv
                        changed = True
                if not changed:
                    break
        elif isinstance(f, WeakUntil):
            return ev(Or(Until(f.left, f.right), Always(f.left)))
        elif isinstance(f, Eventually):
            return ev(Until(Atom("true"), f.arg))
        elif isinstance(f, Always):
            a = ev(f.arg)
            vals = [True] * n
            for _ in range(n + 1):  # greatest fixpoint
                changed = False
                for p in range(n - 1, -1, -1):
                    nv = a[p] and vals[succ(p)]
                    if nv != vals[p]:
                        vals[p] = nv
                        changed = True
                if not changed:
                    break
        else:
            raise ValueError(f"cannot evaluate {f!r}")
        cache[key] = vals
        return vals

    return bool(ev(formula)[0])
