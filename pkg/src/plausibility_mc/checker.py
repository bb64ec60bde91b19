"""Model checking for knowledge and conditional reasons to believe.

Truth conditions, for a structure with selection function ``f``:

* ``w |= R_i(phi | p)`` iff every maximally ``<=_i``-plausible ``p``-state in
  the ``i``-component of ``f(p, w)`` satisfies ``phi`` (vacuously true when
  there is none);
* ``w |= K_i phi`` iff every state in the ``i``-component of ``w`` satisfies
  ``phi``.

Evaluation is pointwise and memoized per (subformula, state), so lazily built
structures such as flutters are only explored where a verdict depends on
them.  Alongside each truth value the checker tracks whether the verdict
would survive extending a depth-truncated structure: components that touch a
frontier leaf may still grow, so a universal verdict that relies on such a
component is flagged :attr:`Soundness.FRONTIER_CONTAMINATED` unless a
counterexample inside the generated part already settles it.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .butterfly import Flutter
from .formula import (
    TOP,
    Formula,
    Height,
    Know,
    Not,
    Reason,
    Top,
    And,
    AgentSetError,
    agents_of,
    expand_diamond_chain,
    to_text,
)
from .model import MissingSelectionTarget, ModelError

__all__ = [
    "Soundness",
    "CheckResult",
    "StabilizationReport",
    "ChainWitness",
    "CommonKnowledge",
    "Checker",
    "evaluate",
    "extension",
    "eval_iter_reason",
    "eval_counterfactual_iter",
    "diamond_chain_search",
    "diamond_chain_depths",
    "chain_formula",
    "iterative_ck",
    "safe_modal_depth",
]

# packed verdicts: bit 0 = truth value, bit 1 = exact
_T = 1
_E = 2
_EXACT_FALSE = _E


class Soundness(enum.Enum):
    EXACT = "exact"
    FRONTIER_CONTAMINATED = "frontier-contaminated"


@dataclass(frozen=True)
class CheckResult:
    value: bool
    soundness: Soundness
    trace: tuple = ()

    @property
    def exact(self) -> bool:
        return self.soundness is Soundness.EXACT


def _prop_value(f: Formula, heights: frozenset) -> int:
    t = type(f)
    if t is Top:
        return 1
    if t is Height:
        return 1 if f.n in heights else 0
    if t is Not:
        return 1 - _prop_value(f.body, heights)
    if t is And:
        return _prop_value(f.left, heights) and _prop_value(f.right, heights)
    raise TypeError(f"not a modal-free formula: {f!r}")


@lru_cache(maxsize=4096)
def _reason_free(f: Formula) -> bool:
    t = type(f)
    if t is Reason:
        return False
    if t is Not or t is Know:
        return _reason_free(f.body)
    if t is And:
        return _reason_free(f.left) and _reason_free(f.right)
    return True


# deep reason-free formulas on flutters are evaluated for a whole butterfly at once
BULK_MIN_DEPTH = 8


class _Bulk:
    """Packed verdicts of reason-free formulas over every slot of one butterfly.

    Knowledge components in a butterfly are stars: each non-center slot
    heads the star of the agent that does not link it to its parent, and
    belongs to its parent's star for the linking agent.  A star verdict is
    the packed AND over its members, exactly as in :meth:`Checker._eval`.
    """

    def __init__(self, bf):
        self.bf = bf
        self.A = bf.arrays()
        self._memo: dict = {}

    def eval(self, f: Formula):
        """``(center_verdict, wing_array)`` for ``f``."""
        r = self._memo.get(f)
        if r is None:
            r = self._memo[f] = self._compute(f)
        return r

    def _compute(self, f: Formula):
        A, bf = self.A, self.bf
        t = type(f)
        if t is Top:
            return 3, np.full(A.value.shape, 3, dtype=np.uint8)
        if t is Height:
            arr = np.where(A.value == f.n, 3, 2).astype(np.uint8)
            return (3 if bf.k == f.n else 2), arr
        if t is Not:
            c, arr = self.eval(f.body)
            return c ^ 1, arr ^ np.uint8(1)
        if t is And:
            cl, al = self.eval(f.left)
            cr, ar = self.eval(f.right)
            c = 2 if 2 in (cl, cr) else cl & cr
            arr = np.where((al == 2) | (ar == 2), np.uint8(2), al & ar)
            return c, arr
        if t is Know:
            return self._know(bf.agents.index(f.agent), *self.eval(f.body))
        raise TypeError(f"bulk evaluation cannot handle {f!r}")

    def _know(self, a: int, c0: int, phi):
        A = self.A
        phi = np.where(A.exists, phi, np.uint8(3))
        n_int = A.internal
        # stars headed by each slot (agent = 1 - link)
        acc = phi.copy()
        bad = phi == 2
        for off in (1, 2):
            kids = phi[:, off : off + 2 * n_int : 2]
            acc[:, :n_int] &= kids
            bad[:, :n_int] |= kids == 2
        acc[:, n_int:] &= np.uint8(1)  # leaf stars may still grow
        star = np.where(bad, np.uint8(2), acc)
        # the two center stars
        cstar = []
        for rows in ((0, 1), (2, 3)):
            members = (c0, int(phi[rows[0], 0]), int(phi[rows[1], 0]))
            v = 2 if 2 in members else members[0] & members[1] & members[2]
            cstar.append(v)
        out = star.copy()
        parent_star = np.empty_like(star)
        parent_star[:, 1:] = star[:, (np.arange(1, star.shape[1]) - 1) // 2]
        parent_star[:, 0] = [cstar[0], cstar[0], cstar[1], cstar[1]]
        via_parent = A.link == a
        out[via_parent] = parent_star[via_parent]
        return cstar[a], out


def _as_diamond(f: Formula):
    if type(f) is Not and type(f.body) is Know and type(f.body.body) is Not:
        return f.body.agent, f.body.body.body
    return None


class Checker:
    """Memoizing evaluator bound to one structure and selection function.

    A structure is a :class:`~plausibility_mc.model.Model`, a
    :class:`~plausibility_mc.butterfly.Flutter`, or anything offering the
    same query methods.  Memo tables live on the instance; share one checker
    across queries on the same structure, or create one per query.
    """

    def __init__(self, structure, selection=None):
        self.structure = structure
        self.selection = selection if selection is not None else getattr(structure, "selection", None)
        self._memo: dict[Formula, dict] = {}
        self._prop: dict[tuple, int] = {}
        self._bulk: dict[int, _Bulk] = {}
        self._use_bulk = isinstance(structure, Flutter)

    def select(self, atom: Formula, w):
        if self.selection is None:
            raise MissingSelectionTarget("the model has no selection function")
        return self.selection.select(atom, w)

    def packed(self, f: Formula, w) -> int:
        return self._eval(f, w)

    def holds(self, f: Formula, w) -> bool:
        return bool(self._eval(f, w) & _T)

    def _eval(self, f: Formula, w) -> int:
        if f.depth == 0:
            hs = self.structure.heights_at(w)
            key = (f, hs)
            v = self._prop.get(key)
            if v is None:
                v = self._prop[key] = _prop_value(f, hs) | _E
            return v
        memo = self._memo.get(f)
        if memo is None:
            memo = self._memo[f] = {}
        else:
            r = memo.get(w)
            if r is not None:
                return r
        if self._use_bulk and f.depth >= BULK_MIN_DEPTH and _reason_free(f):
            r = memo[w] = self._bulk_value(f, w)
            return r
        t = type(f)
        if t is Not:
            r = self._eval(f.body, w) ^ _T
        elif t is And:
            r = self._eval(f.left, w)
            if r != _EXACT_FALSE:
                b = self._eval(f.right, w)
                r = _EXACT_FALSE if b == _EXACT_FALSE else r & b
        elif t is Know:
            S = self.structure
            r = _T | _E
            for x in S.component(f.agent, w):
                v = self._eval(f.body, x)
                if v == _EXACT_FALSE:
                    r = _EXACT_FALSE
                    break
                r &= v
            else:
                if not S.component_complete(f.agent, w):
                    r &= _T
        elif t is Reason:
            S = self.structure
            c = self.select(f.cond, w)
            complete = S.component_complete(f.agent, c)
            r = _T | _E
            for x in self._max_states(f.agent, f.cond, c):
                v = self._eval(f.body, x)
                if v == _EXACT_FALSE and complete:
                    r = _EXACT_FALSE
                    break
                r &= v
            if not complete:
                r &= _T
        else:
            raise TypeError(f"not a formula: {f!r}")
        memo[w] = r
        return r

    def _bulk_value(self, f: Formula, w) -> int:
        bf, idx = self.structure.split(w)
        bulk = self._bulk.get(bf.k)
        if bulk is None:
            bulk = self._bulk[bf.k] = _Bulk(bf)
        c0, arr = bulk.eval(f)
        if idx == 0:
            return c0
        b, h = divmod(idx - 1, bf.block)
        return int(arr[b, h])

    def _max_states(self, agent: str, cond: Formula, anchor) -> tuple:
        S = self.structure
        cands = [x for x in S.component(agent, anchor) if S.holds(cond, x)]
        return S.max_plausible(agent, cands)

    # -- witnesses ----------------------------------------------------------------

    def trace(self, f: Formula, w) -> tuple:
        """States that explain the verdict of ``f`` at ``w``.

        For a true diamond chain this is the chain of states from ``w``; for
        a false box (knowledge or reason) it is the offending state.
        """
        if self._eval(f, w) & _T:
            return self._support(f, w)
        return self._refute(f, w)

    def _support(self, f: Formula, w) -> tuple:
        if _as_diamond(f) is not None:
            out = [w]
            while True:
                d = _as_diamond(f)
                if d is None or not self._eval(f, w) & _T:
                    break
                agent, g = d
                x = self._first(self.structure.component(agent, w), g, want=True)
                out.append(x)
                f, w = g, x
            return tuple(out)
        if type(f) is Not:
            return self._refute(f.body, w)
        if type(f) is And:
            return ()
        return ()

    def _refute(self, f: Formula, w) -> tuple:
        t = type(f)
        if t is Know:
            return (self._first(self.structure.component(f.agent, w), f.body, want=False),)
        if t is Reason:
            c = self.select(f.cond, w)
            return (self._first(self._max_states(f.agent, f.cond, c), f.body, want=False),)
        if t is And:
            side = f.left if not self._eval(f.left, w) & _T else f.right
            return self._refute(side, w)
        if t is Not:
            return self._support(f.body, w)
        return ()

    def _first(self, xs: Iterable, g: Formula, want: bool):
        fallback = None
        for x in xs:
            v = self._eval(g, x)
            if bool(v & _T) == want:
                if v & _E:
                    return x
                if fallback is None:
                    fallback = x
        return fallback

    # -- results ------------------------------------------------------------------

    def check(self, w, f: Formula) -> CheckResult:
        _check_agents(self.structure, f)
        r = self._eval(f, w)
        exact = bool(r & _E) or f.depth <= safe_modal_depth(self.structure, w, self.selection)
        return CheckResult(
            bool(r & _T),
            Soundness.EXACT if exact else Soundness.FRONTIER_CONTAMINATED,
            self.trace(f, w),
        )


def _check_agents(structure, f: Formula) -> None:
    unknown = agents_of(f) - set(structure.agents)
    if unknown:
        raise AgentSetError(f"undeclared agent(s) in formula: {', '.join(sorted(unknown))}")


def evaluate(structure, w, f: Formula, selection=None) -> CheckResult:
    """Truth value, soundness and witness of ``f`` at state ``w``."""
    return Checker(structure, selection).check(w, f)


def extension(structure, f: Formula, selection=None, states: Iterable | None = None) -> frozenset:
    """``||f||`` over ``states`` (all states of an explicit model by default)."""
    ch = Checker(structure, selection)
    _check_agents(structure, f)
    dom = structure.states if states is None else states
    return frozenset(w for w in dom if ch.holds(f, w))


# -- iterated reasons -------------------------------------------------------------


@dataclass(frozen=True)
class StabilizationReport:
    """Level-by-level evaluation of ``r^n(body | cond)`` at one state.

    ``support_sets[n]`` holds the states at which ``body`` itself is evaluated
    for ``r^n``; ``r^n`` holds iff ``body`` holds on all of them.  Each support
    set is a function of the previous one, so once two consecutive sets
    coincide the sequence, and hence the verdict, is constant from then on.
    """

    operator: str
    depth_reached: int
    support_sets: tuple
    verdicts: tuple
    stabilized: bool
    stable_level: int | None
    exact: bool

    @property
    def holds_for_all_n(self) -> bool:
        return self.stabilized and all(self.verdicts)

    def stable_support(self):
        return None if self.stable_level is None else self.support_sets[self.stable_level]


def eval_iter_reason(
    structure,
    w,
    depth_max: int,
    body: Formula,
    cond: Formula = TOP,
    selection=None,
    checker: Checker | None = None,
) -> StabilizationReport:
    if depth_max < 1:
        raise ValueError("depth_max must be at least 1")
    ch = checker or Checker(structure, selection)
    _check_agents(structure, body)
    S = structure
    support = frozenset((w,))
    supports: list[frozenset] = []
    verdicts: list[bool] = []
    exact = True
    stable_level = None
    level = 0
    while level <= depth_max or (stable_level is not None and level <= stable_level + 2):
        nxt = set()
        for s in sorted(support, key=S.sort_key):
            for a in S.agents:
                c = ch.select(cond, s)
                if not S.component_complete(a, c):
                    exact = False
                nxt.update(ch._max_states(a, cond, c))
        support = frozenset(nxt)
        supports.append(support)
        ok = True
        for x in sorted(support, key=S.sort_key):
            v = ch.packed(body, x)
            ok = ok and bool(v & _T)
            exact = exact and bool(v & _E)
        verdicts.append(ok)
        if stable_level is None and level >= 1 and supports[level] == supports[level - 1]:
            stable_level = level - 1
        level += 1
    stabilized = stable_level is not None and all(
        s == supports[stable_level] for s in supports[stable_level:]
    )
    return StabilizationReport(
        operator=f"r^n({to_text(body)} || {to_text(cond)})",
        depth_reached=len(supports) - 1,
        support_sets=tuple(supports),
        verdicts=tuple(verdicts),
        stabilized=stabilized,
        stable_level=stable_level if stabilized else None,
        exact=exact,
    )


def eval_counterfactual_iter(
    structure,
    w,
    depth_max: int,
    k: int,
    target_agent: str,
    selection=None,
    checker: Checker | None = None,
) -> StabilizationReport:
    """``r^n(R_j([k]) | [k])`` at ``w`` with ``j = target_agent``."""
    ch = checker or Checker(structure, selection)
    if target_agent not in structure.agents:
        raise AgentSetError(f"undeclared agent {target_agent!r}")
    ch.select(Height(k), w)
    return eval_iter_reason(
        structure, w, depth_max, Reason(target_agent, Height(k), TOP), Height(k), checker=ch
    )


# -- alternating diamond chains ----------------------------------------------------


@dataclass(frozen=True)
class ChainWitness:
    """``depth`` alternating ``<K>`` steps from ``chain[0]`` reach ``target``.

    ``chain`` has ``depth + 1`` states; step ``s`` uses the first agent when
    ``s`` is odd and the other agent when even.  Depth 0 means the start
    state already satisfies the target.
    """

    target: Formula
    first: str
    depth: int
    chain: tuple


def chain_formula(first: str, steps: int, target: Formula, agents: Sequence[str]) -> Formula:
    """The formula with ``steps`` alternating diamonds (``steps >= 1``)."""
    if steps < 1:
        raise ValueError("a chain formula has at least one diamond")
    return expand_diamond_chain(first, steps - 1, target, agents)


def _two_agents(structure, first: str) -> int:
    if len(structure.agents) != 2:
        raise AgentSetError("alternating chains need exactly two agents")
    if first not in structure.agents:
        raise AgentSetError(f"undeclared agent {first!r}")
    return structure.agents.index(first)


def _generic_chain_bfs(structure, w, first_pos: int, preds: dict, max_depth: int) -> dict:
    S = structure
    agents = S.agents
    step_of = {w: 0}
    parent = {w: None}
    reached = [w]
    found: dict = {}

    def hit(y, t):
        for key, pred in preds.items():
            if key not in found and pred(y):
                found[key] = (t, y)

    hit(w, 0)
    ptr = [0, 0]
    for t in range(1, max_depth + 1):
        if len(found) == len(preds):
            break
        a = (first_pos + t - 1) % 2
        end = len(reached)
        for i in range(ptr[a], end):
            x = reached[i]
            for y in S.component(agents[a], x):
                if y not in step_of:
                    step_of[y] = t
                    parent[y] = x
                    reached.append(y)
                    hit(y, t)
        ptr[a] = end
    out = {}
    for key, (t, y) in found.items():
        out[key] = (t, _unwind(y, t, parent, step_of))
    return out


def _unwind(y, t: int, parent: Mapping, step_of: Mapping) -> tuple:
    chain = [None] * (t + 1)
    hi = t
    cur = y
    while cur is not None:
        lo = step_of[cur]
        for pos in range(lo, hi + 1):
            chain[pos] = cur
        hi = lo - 1
        cur = parent[cur]
    return tuple(chain)


def diamond_chain_depths(
    structure,
    w,
    first: str,
    targets: Sequence[Formula],
    max_depth: int,
    *,
    backend: str = "auto",
) -> dict:
    """Least alternating chain depth to each target atom, by breadth-first search.

    Returns ``{target: ChainWitness}`` for the targets reachable within
    ``max_depth`` steps.  On flutters the search runs in the compiled kernel
    when available (``backend="auto"``/``"kernel"``); ``backend="generic"``
    forces the structure-agnostic search.
    """
    first_pos = _two_agents(structure, first)
    for t in targets:
        if not isinstance(t, (Top, Height)):
            raise TypeError("chain targets are atoms")
    if isinstance(structure, Flutter) and backend != "generic":
        bf, idx = structure.split(w)
        heights = sorted({t.n for t in targets if isinstance(t, Height)})
        impl = kernels.python if backend == "python" else kernels
        raw = impl.alt_bfs(bf.k, bf.m, bf.d, idx, first_pos, heights, max_depth)
        base = w & ~((1 << 40) - 1)
        out = {}
        for t in targets:
            if isinstance(t, Top):
                out[t] = ChainWitness(t, first, 0, (w,))
            elif t.n in raw:
                depth, chain = raw[t.n]
                out[t] = ChainWitness(t, first, depth, tuple(base | i for i in chain))
        return out
    preds = {t: (lambda y, t=t: structure.holds(t, y)) for t in targets}
    raw = _generic_chain_bfs(structure, w, first_pos, preds, max_depth)
    return {t: ChainWitness(t, first, d, c) for t, (d, c) in raw.items()}


def diamond_chain_search(
    structure, w, first: str, target: Formula, max_depth: int, *, backend: str = "auto"
) -> ChainWitness | None:
    return diamond_chain_depths(structure, w, first, [target], max_depth, backend=backend).get(target)


# -- iterative common knowledge ------------------------------------------------------


@dataclass
class CommonKnowledge:
    """Greatest fixed point of ``X -> ||phi|| & {w : [w]_i <= X for all i}``.

    ``exact[w]`` is True when the membership verdict for ``w`` cannot change
    in any extension of a truncated structure: a non-member is settled by a
    reachable exact counterexample, a member by a fully generated,
    frontier-free reachable region.
    """

    formula: Formula
    group: tuple
    domain: tuple
    members: frozenset
    exact: dict
    _regions: dict = field(repr=False, default_factory=dict)
    _bad: frozenset = field(repr=False, default=frozenset())
    _structure: object = field(repr=False, default=None)

    def __contains__(self, w) -> bool:
        return w in self.members

    def soundness(self, w) -> Soundness:
        return Soundness.EXACT if self.exact[w] else Soundness.FRONTIER_CONTAMINATED

    def refutation_path(self, w) -> tuple:
        """Shortest path of component steps from ``w`` to a state refuting phi."""
        if w in self.members:
            return ()
        S = self._structure
        prev = {w: None}
        q = deque([w])
        while q:
            x = q.popleft()
            if x in self._bad:
                path = []
                while x is not None:
                    path.append(x)
                    x = prev[x]
                return tuple(reversed(path))
            for a in self.group:
                for y in S.component(a, x):
                    if y not in prev:
                        prev[y] = x
                        q.append(y)
        return ()

    def verdict(self, w) -> CheckResult:
        return CheckResult(w in self.members, self.soundness(w), self.refutation_path(w))


def iterative_ck(
    structure,
    group: Iterable[str],
    phi: Formula,
    states: Iterable | None = None,
    selection=None,
    checker: Checker | None = None,
) -> CommonKnowledge:
    """States where ``phi`` is iterative common knowledge among ``group``.

    ``states`` must be closed under the group's components; it defaults to
    all states of an explicit model (flutters need e.g.
    ``flutter.butterfly_states(k)``).
    """
    S = structure
    group = tuple(group)
    for a in group:
        if a not in S.agents:
            raise AgentSetError(f"undeclared agent {a!r}")
    _check_agents(S, phi)
    if states is None:
        if isinstance(S, Flutter):
            raise ValueError("pass states= (e.g. flutter.butterfly_states(k)) for a flutter")
        states = S.states
    dom = tuple(states)
    index = {s: i for i, s in enumerate(dom)}
    ch = checker or Checker(S, selection)
    vals = [ch.packed(phi, s) for s in dom]
    labels = []
    for a in group:
        lab = [0] * len(dom)
        for i, s in enumerate(dom):
            comp = S.component(a, s)
            try:
                lab[i] = min(index[x] for x in comp)
            except KeyError:
                raise ModelError("states= is not closed under the group's components") from None
        labels.append(lab)
    mask = [v & _T for v in vals]
    fix = kernels.ck_fixpoint(labels, mask)
    members = frozenset(s for s, keep in zip(dom, fix) if keep)

    # regions: connected components of the union of the group's relations
    parent = list(range(len(dom)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for lab in labels:
        for i, r in enumerate(lab):
            a, b = find(i), find(r)
            if a != b:
                parent[b] = a
    has_bad = set()
    clean = {}
    for i, s in enumerate(dom):
        r = find(i)
        if vals[i] == _EXACT_FALSE:
            has_bad.add(r)
        ok = bool(vals[i] & _E) and all(S.component_complete(a, s) for a in group)
        clean[r] = clean.get(r, True) and ok
    exact = {}
    for i, s in enumerate(dom):
        r = find(i)
        exact[s] = clean[r] if s in members else r in has_bad
    bad = frozenset(s for i, s in enumerate(dom) if not vals[i] & _T)
    return CommonKnowledge(phi, group, dom, members, exact, {}, bad, S)


# -- soundness bound -----------------------------------------------------------------


def safe_modal_depth(structure, w, selection=None) -> float:
    """Largest modal depth whose verdicts at ``w`` cannot change under extension.

    On flutters a knowledge step moves at most one wing level outward and a
    reason step re-anchors at a butterfly center, so a state at wing level
    ``L`` (the center counts as level -1) is safe up to depth ``d - L``.  On
    explicit models the bound is the distance from ``w`` to the nearest state
    where some operator would read a possibly incomplete component;
    ``math.inf`` when there is none.
    """
    S = structure
    if isinstance(S, Flutter):
        return max(0, S.d - S.level(w))
    frontier = getattr(S, "frontier", None)
    if not frontier:
        return math.inf
    sel = selection if selection is not None else getattr(S, "selection", None)
    atoms = [TOP] + [Height(n) for n in getattr(S, "heights", ())]

    def anchors(x):
        if sel is None:
            return
        for p in atoms:
            try:
                c = sel.select(p, x)
            except MissingSelectionTarget:
                continue
            for a in S.agents:
                yield a, p, c

    dist = {w: 0}
    layer = [w]
    t = 0
    while layer:
        for x in layer:
            if not all(S.component_complete(a, x) for a in S.agents):
                return t
            for a, _, c in anchors(x):
                if not S.component_complete(a, c):
                    return t
        nxt = []
        for x in layer:
            succ = [y for a in S.agents for y in S.component(a, x)]
            for a, p, c in anchors(x):
                cands = [y for y in S.component(a, c) if S.holds(p, y)]
                succ.extend(S.max_plausible(a, cands))
            for y in succ:
                if y not in dist:
                    dist[y] = t + 1
                    nxt.append(y)
        layer = nxt
        t += 1
    return math.inf
