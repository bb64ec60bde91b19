"""Seeded randomized suites: checker vs reference oracle, and the Lewis property run."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from . import reference
from .checker import Checker, _check_agents
from .formula import to_text
from .lewis import (
    DEFAULT_GUARD,
    EventSpace,
    Replayer,
    check_c1_c3,
    check_c4,
    iterated_reasons,
)
from .randomgen import random_formula, random_raw_model


@dataclass
class OracleSummary:
    models: int = 0
    checks: int = 0
    disagreements: list = field(default_factory=list)
    inexact: int = 0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.disagreements and not self.inexact


def oracle_equivalence(
    n_models: int = 200,
    formulas_per_model: int = 20,
    max_states: int = 8,
    max_depth: int = 4,
    seed: int = 0,
) -> OracleSummary:
    """Compare :class:`Checker` with :mod:`reference` at every state."""
    t0 = time.perf_counter()
    rng = random.Random(seed)
    out = OracleSummary()
    for _ in range(n_models):
        raw = random_raw_model(rng, max_states)
        model = raw.to_model()
        leq = {a: reference.close_preorder(raw.states, raw.pairs[a]) for a in raw.agents}
        out.models += 1
        for _ in range(formulas_per_model):
            f = random_formula(rng, max_depth)
            _check_agents(model, f)
            ch = Checker(model)
            for w in raw.states:
                res = ch.check(w, f)
                want = reference.holds(raw, w, f, leq)
                out.checks += 1
                if res.value != want:
                    out.disagreements.append((raw, w, to_text(f), res.value, want))
                if not res.exact:
                    out.inexact += 1
    out.seconds = time.perf_counter() - t0
    return out


@dataclass
class LewisSummary:
    models: int = 0
    pairs: int = 0
    premise_pairs: int = 0
    counterexamples: list = field(default_factory=list)
    witnesses_replayed: int = 0
    replay_failures: list = field(default_factory=list)
    unstabilized: int = 0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.counterexamples and not self.replay_failures


def lewis_property_run(
    n_models: int = 500,
    max_states: int = 6,
    seed: int = 0,
    depth_max: int = 6,
    reading: str = "local",
    guard: int = DEFAULT_GUARD,
) -> LewisSummary:
    """Exhaustive (A, B) pairs on random models.

    Counts pairs where C1-C4 hold but ``A`` is not inside some ``r^n(B)``,
    and replays every recorded witness of a failed condition.
    """
    t0 = time.perf_counter()
    rng = random.Random(seed)
    out = LewisSummary()
    for _ in range(n_models):
        raw = random_raw_model(rng, max_states)
        model = raw.to_model()
        space = EventSpace(model)
        replayer = Replayer(space)
        n_events = 1 << len(space)
        out.models += 1

        conclusion = []
        for B in range(n_events):
            levels, stable = iterated_reasons(space, B, depth_max)
            if stable is None:
                out.unstabilized += 1
            inter = space.full
            for lvl in levels:
                inter &= lvl
            conclusion.append(inter)

        base_ok = []
        for A in range(n_events):
            rep = check_c1_c3(space, A, A).merge(check_c4(space, A, reading, guard))
            for c in ("C1", "C2", "C4"):
                if not rep.verdicts[c]:
                    out.witnesses_replayed += 1
                    if not replayer.replay(c, rep.witnesses[c], A, reading=reading):
                        out.replay_failures.append((raw, c, A, rep.witnesses[c]))
            base_ok.append(rep.verdicts["C1"] and rep.verdicts["C2"] and rep.verdicts["C4"])

        n_ag = len(space.agents)
        RA_all = [[space.reason(i, E) for E in range(n_events)] for i in range(n_ag)]
        for A in range(n_events):
            RA = [RA_all[i][A] for i in range(n_ag)]
            for B in range(n_events):
                out.pairs += 1
                c3 = all(not RA[i] & ~RA_all[i][B] for i in range(n_ag))
                if not c3:
                    rep = check_c1_c3(space, A, B)
                    out.witnesses_replayed += 1
                    if not replayer.replay("C3", rep.witnesses["C3"], A, B):
                        out.replay_failures.append((raw, "C3", A, B, rep.witnesses["C3"]))
                    continue
                if not base_ok[A]:
                    continue
                out.premise_pairs += 1
                if A & ~conclusion[B]:
                    out.counterexamples.append((raw, space.members(A), space.members(B)))
    out.seconds = time.perf_counter() - t0
    return out
