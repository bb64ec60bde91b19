"""Cubitt-Sugden conditions C1-C4 and the iterated-reason conclusion, over events.

Events are subsets of a finite state space, encoded as int bitmasks over an
:class:`EventSpace`.  The unconditional reason operator on events is

    R_i(E) = {w : max_{<=_i} [f(true, w)]_i  is a subset of E}

For a basis ``A`` and target ``B``:

* C1: ``A <= R_i(A)`` for every ``i``
* C2: ``R_i(A) <= R_i(R_j(A))`` for every ``i, j``
* C3: ``R_i(A) <= R_i(B)`` for every ``i``
* C4: for every event ``C`` and agents ``i, j``, if ``R_i(A) <= R_i(C)`` then
  the conclusion event ``R_i(-R_j(A) | R_j(C))`` contains ``R_i(A)``
  (``local`` reading) or is the whole space (``global`` reading).

The conclusion is ``r^n(B)``: ``r^0 = /\\_i R_i(B)``, ``r^{n+1} = /\\_i R_i(r^n)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .formula import TOP, Formula
from .model import MissingSelectionTarget, ModelError

__all__ = [
    "READINGS",
    "DEFAULT_GUARD",
    "SearchSpaceTooLarge",
    "EventSpace",
    "LewisReport",
    "reason_event",
    "check_c1_c3",
    "check_c4",
    "iterated_reasons",
    "verify_lewis_theorem",
    "replay_witness",
    "Replayer",
]

READINGS = ("local", "global")
DEFAULT_GUARD = 16


class SearchSpaceTooLarge(ModelError):
    pass


def _bits(mask: int) -> Iterable[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


class EventSpace:
    """Bitmask events over the states of a structure.

    ``states`` defaults to every state of an explicit model.  With
    ``close=True`` the space is enlarged by the states that unconditional
    reasons look at (the maximal states of ``[f(true, w)]_i``), so ``R_i`` is
    total on it; the added states are listed in :attr:`added`.
    """

    def __init__(self, structure, states: Iterable | None = None, selection=None, close: bool = True):
        self.structure = structure
        self.selection = selection if selection is not None else getattr(structure, "selection", None)
        if self.selection is None:
            raise MissingSelectionTarget("reasons need a selection function")
        base = list(structure.states if states is None else states)
        order = list(dict.fromkeys(base))
        seen = set(order)
        targets: dict = {}
        pos = 0
        while pos < len(order):
            w = order[pos]
            pos += 1
            anchor = self.selection.select(TOP, w)
            row = []
            for a in structure.agents:
                mx = structure.max_plausible(a, structure.component(a, anchor))
                row.append(mx)
                for x in mx:
                    if x not in seen:
                        if not close:
                            raise ModelError(f"reasons at {structure.label(w)} leave the state space")
                        seen.add(x)
                        order.append(x)
            targets[w] = row
        self.states = tuple(order)
        self.added = tuple(order[len(dict.fromkeys(base)):])
        self.agents = tuple(structure.agents)
        self.index = {s: i for i, s in enumerate(self.states)}
        self.full = (1 << len(self.states)) - 1
        self._max = [
            [sum(1 << self.index[x] for x in targets[w][ai]) for w in self.states]
            for ai in range(len(self.agents))
        ]
        self._cache: list[dict] = [{} for _ in self.agents]

    def __len__(self) -> int:
        return len(self.states)

    def event(self, spec) -> int:
        """Bitmask of a state collection, a formula's extension, or a bitmask."""
        if isinstance(spec, int):
            if spec & ~self.full:
                raise ModelError("event has bits outside the state space")
            return spec
        if isinstance(spec, Formula):
            from .checker import Checker

            ch = Checker(self.structure, self.selection)
            return sum(1 << i for i, s in enumerate(self.states) if ch.holds(spec, s))
        mask = 0
        for s in spec:
            try:
                mask |= 1 << self.index[s]
            except KeyError:
                raise ModelError(f"state {s!r} is not in the event space") from None
        return mask

    def members(self, mask: int) -> tuple:
        return tuple(self.states[i] for i in _bits(mask))

    def agent_pos(self, agent: str) -> int:
        try:
            return self.agents.index(agent)
        except ValueError:
            raise ModelError(f"undeclared agent {agent!r}") from None

    def reason(self, a: int, mask: int) -> int:
        """``R_a(mask)`` with ``a`` an agent position."""
        cache = self._cache[a]
        r = cache.get(mask)
        if r is None:
            r = 0
            outside = ~mask
            for i, mx in enumerate(self._max[a]):
                if not mx & outside:
                    r |= 1 << i
            cache[mask] = r
        return r


def reason_event(space: EventSpace, agent: str, event) -> frozenset:
    return frozenset(space.members(space.reason(space.agent_pos(agent), space.event(event))))


@dataclass
class LewisReport:
    """Per-condition verdicts with one witness per failed condition.

    Witnesses: C1 ``(w, i)``, C2 ``(w, i, j)``, C3 ``(w, i)``, C4
    ``(C, i, j, w)`` with ``C`` a tuple of states.  The conclusion fields are
    filled by :func:`verify_lewis_theorem`.
    """

    verdicts: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    c4_search_space: int = 0
    c4_reading: str = "local"
    r_levels: tuple = ()
    stabilized: bool = False
    stable_level: int | None = None
    conclusion_holds: bool | None = None
    counterexample: tuple | None = None

    @property
    def premises_hold(self) -> bool:
        return all(self.verdicts.get(c, False) for c in ("C1", "C2", "C3", "C4"))

    @property
    def theorem_respected(self) -> bool:
        return not self.premises_hold or bool(self.conclusion_holds)

    def merge(self, other: "LewisReport") -> "LewisReport":
        self.verdicts.update(other.verdicts)
        self.witnesses.update(other.witnesses)
        if "C4" in other.verdicts:
            self.c4_search_space = other.c4_search_space
            self.c4_reading = other.c4_reading
        return self

    def lines(self, space: EventSpace) -> list[str]:
        label = space.structure.label
        out = []
        for c in ("C1", "C2", "C3", "C4"):
            if c not in self.verdicts:
                continue
            w = self.witnesses.get(c)
            text = "holds" if self.verdicts[c] else "fails"
            if w is not None:
                if c == "C4":
                    ev = "{" + ", ".join(label(s) for s in w[0]) + "}"
                    text += f" (C={ev}, i={w[1]}, j={w[2]}, state={label(w[3])})"
                else:
                    text += f" (state={label(w[0])}, agents={','.join(w[1:])})"
            out.append(f"{c}: {text}")
        if self.r_levels:
            out.append(
                f"r^n(B) contains A for n <= {len(self.r_levels) - 1}: "
                f"{'yes' if self.conclusion_holds else 'no'}"
                + (f"; stabilized at n={self.stable_level}" if self.stabilized else "; not stabilized")
            )
        return out


def _first_violation(space: EventSpace, pairs) -> tuple | None:
    """Least (state index, agents) among (violation mask, agents) pairs."""
    best = None
    for mask, agents in pairs:
        if mask:
            cand = (_lowest(mask), agents)
            if best is None or cand[0] < best[0]:
                best = cand
    if best is None:
        return None
    return (space.states[best[0]],) + best[1]


def check_c1_c3(space: EventSpace, A, B) -> LewisReport:
    A, B = space.event(A), space.event(B)
    ags = range(len(space.agents))
    name = space.agents
    R = space.reason
    rep = LewisReport()
    w1 = _first_violation(space, ((A & ~R(i, A), (name[i],)) for i in ags))
    w2 = _first_violation(
        space, ((R(i, A) & ~R(i, R(j, A)), (name[i], name[j])) for i in ags for j in ags)
    )
    w3 = _first_violation(space, ((R(i, A) & ~R(i, B), (name[i],)) for i in ags))
    for c, w in (("C1", w1), ("C2", w2), ("C3", w3)):
        rep.verdicts[c] = w is None
        if w is not None:
            rep.witnesses[c] = w
    return rep


def check_c4(space: EventSpace, A, reading: str = "local", guard: int = DEFAULT_GUARD) -> LewisReport:
    if reading not in READINGS:
        raise ValueError(f"C4 reading must be one of {READINGS}")
    n = len(space)
    if n > guard:
        raise SearchSpaceTooLarge(
            f"search space too large: 2^{n} events over {n} states exceeds the guard of {guard} states"
        )
    A = space.event(A)
    R = space.reason
    full = space.full
    ags = range(len(space.agents))
    rep = LewisReport(c4_reading=reading, c4_search_space=1 << n)
    best = None
    RA = [R(i, A) for i in ags]
    for C in range(1 << n):
        RC = [R(i, C) for i in ags]
        for i in ags:
            if RA[i] & ~RC[i]:
                continue
            for j in ags:
                concl = R(i, (full & ~RA[j]) | RC[j])
                bad = (RA[i] & ~concl) if reading == "local" else (full & ~concl)
                if bad:
                    cand = (_lowest(bad), C, i, j)
                    if best is None or cand[0] < best[0]:
                        best = cand
        if best is not None and best[0] == 0:
            break
    rep.verdicts["C4"] = best is None
    if best is not None:
        s, C, i, j = best
        rep.witnesses["C4"] = (space.members(C), space.agents[i], space.agents[j], space.states[s])
    return rep


def iterated_reasons(space: EventSpace, B, depth_max: int) -> tuple[tuple, int | None]:
    """``(r^0, ..., r^N)`` and the first level after which the sequence is constant.

    Levels are computed through ``depth_max`` and beyond, until two
    consecutive levels coincide or a level repeats (a cycle that never
    settles, reported as ``None``).
    """
    B = space.event(B)
    ags = range(len(space.agents))

    def step(E):
        out = space.full
        for i in ags:
            out &= space.reason(i, E)
        return out

    levels = [step(B)]
    seen = {levels[0]: 0}
    while True:
        nxt = step(levels[-1])
        if nxt == levels[-1]:
            stable = len(levels) - 1
            while len(levels) <= depth_max:
                levels.append(nxt)
            return tuple(levels), stable
        if nxt in seen and len(levels) > depth_max:
            return tuple(levels), None
        seen.setdefault(nxt, len(levels))
        levels.append(nxt)


def verify_lewis_theorem(
    space: EventSpace,
    A,
    B,
    depth_max: int = 6,
    reading: str = "local",
    guard: int = DEFAULT_GUARD,
) -> LewisReport:
    A, B = space.event(A), space.event(B)
    rep = check_c1_c3(space, A, B).merge(check_c4(space, A, reading, guard))
    levels, stable = iterated_reasons(space, B, depth_max)
    rep.r_levels = levels
    rep.stabilized = stable is not None
    rep.stable_level = stable
    rep.conclusion_holds = True
    for n, lvl in enumerate(levels):
        missing = A & ~lvl
        if missing:
            rep.conclusion_holds = False
            rep.counterexample = (n, space.states[_lowest(missing)])
            break
    return rep


# -- witness replay --------------------------------------------------------------


class Replayer:
    """Recomputes reason events from the definition, on frozensets of states.

    Shares nothing with the bitmask tables of :class:`EventSpace`, so a
    witness that replays here was not produced by a bug in those tables.
    """

    def __init__(self, space: EventSpace):
        self.space = space
        self._cache: dict = {}

    def reason(self, agent: str, E) -> frozenset:
        E = frozenset(E)
        key = (agent, E)
        r = self._cache.get(key)
        if r is None:
            S = self.space.structure
            sel = self.space.selection
            r = frozenset(
                w
                for w in self.space.states
                if set(S.max_plausible(agent, S.component(agent, sel.select(TOP, w)))) <= E
            )
            self._cache[key] = r
        return r

    def replay(self, condition: str, witness: Sequence, A, B=None, reading: str = "local") -> bool:
        """True iff ``witness`` really violates ``condition``."""
        sp = self.space
        A = frozenset(sp.members(sp.event(A)))
        W = frozenset(sp.states)
        R = self.reason
        if condition == "C1":
            w, i = witness
            return w in A and w not in R(i, A)
        if condition == "C2":
            w, i, j = witness
            return w in R(i, A) and w not in R(i, R(j, A))
        if condition == "C3":
            w, i = witness
            B = frozenset(sp.members(sp.event(B)))
            return w in R(i, A) and w not in R(i, B)
        if condition == "C4":
            C, i, j, w = witness
            C = frozenset(C)
            if not R(i, A) <= R(i, C):
                return False
            concl = R(i, (W - R(j, A)) | R(j, C))
            if reading == "local":
                return w in R(i, A) and w not in concl
            return w not in concl
        raise ValueError(f"unknown condition {condition!r}")


def replay_witness(space: EventSpace, condition: str, witness: Sequence, A, B=None, reading: str = "local") -> bool:
    return Replayer(space).replay(condition, witness, A, B, reading)
