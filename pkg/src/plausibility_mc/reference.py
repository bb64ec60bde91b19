"""A deliberately naive evaluator used as a test oracle.

Works on :class:`~plausibility_mc.randomgen.RawModel` data directly: the
preorder is closed by a fixed-point loop over pairs, components are found by
repeated relaxation, and every subformula is re-evaluated from scratch.
"""

from __future__ import annotations

from .formula import And, Formula, Height, Know, Not, Reason, Top


def close_preorder(states, pairs) -> set:
    leq = {(s, s) for s in states} | set(pairs)
    while True:
        extra = {(a, d) for (a, b) in leq for (c, d) in leq if b == c} - leq
        if not extra:
            return leq
        leq |= extra


def component(states, leq, w) -> set:
    comp = {w}
    grew = True
    while grew:
        grew = False
        for x in states:
            if x not in comp and any((x, y) in leq or (y, x) in leq for y in comp):
                comp.add(x)
                grew = True
    return comp


def maximal(leq, xs) -> set:
    def strictly_below(a, b):
        return (a, b) in leq and (b, a) not in leq

    return {x for x in xs if not any(strictly_below(x, y) for y in xs)}


def atom_holds(raw, atom, w) -> bool:
    if isinstance(atom, Top):
        return True
    return w in raw.valuation.get(atom.n, ())


def holds(raw, w, f: Formula, _leq=None) -> bool:
    leq = _leq or {a: close_preorder(raw.states, raw.pairs[a]) for a in raw.agents}
    if isinstance(f, (Top, Height)):
        return atom_holds(raw, f, w)
    if isinstance(f, Not):
        return not holds(raw, w, f.body, leq)
    if isinstance(f, And):
        return holds(raw, w, f.left, leq) and holds(raw, w, f.right, leq)
    if isinstance(f, Know):
        return all(holds(raw, v, f.body, leq) for v in component(raw.states, leq[f.agent], w))
    if isinstance(f, Reason):
        anchor = raw.selection[(f.cond, w)]
        comp = component(raw.states, leq[f.agent], anchor)
        best = maximal(leq[f.agent], {v for v in comp if atom_holds(raw, f.cond, v)})
        return all(holds(raw, v, f.body, leq) for v in best)
    raise TypeError(f"not a formula: {f!r}")
