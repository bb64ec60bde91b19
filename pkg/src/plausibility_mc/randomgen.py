"""Seeded random models and formulas for the property suites."""

from __future__ import annotations

import random
from dataclasses import dataclass

from .formula import TOP, And, Formula, Height, Know, Not, Reason
from .model import Model

AGENTS = ("R", "C")
HEIGHTS = (1, 2, 3)


@dataclass(frozen=True)
class RawModel:
    """Plain data behind a random model; the reference evaluator reads this
    directly instead of going through :class:`Model`."""

    states: tuple
    agents: tuple
    pairs: dict  # agent -> tuple of (a, b), a <= b, not closed
    valuation: dict  # height -> frozenset of states
    selection: dict  # (atom, state) -> state

    def to_model(self) -> Model:
        return Model(self.states, self.agents, self.pairs, self.valuation, selection=self.selection)


def random_raw_model(
    rng: random.Random,
    max_states: int = 8,
    agents=AGENTS,
    heights=HEIGHTS,
    density: float | None = None,
) -> RawModel:
    n = rng.randint(1, max_states)
    states = tuple(f"s{i}" for i in range(n))
    p = rng.uniform(0.05, 0.4) if density is None else density
    pairs = {
        a: tuple((x, y) for x in states for y in states if x != y and rng.random() < p)
        for a in agents
    }
    val = {h: set() for h in heights}
    for s in states:
        for h in heights:
            if rng.random() < 0.4:
                val[h].add(s)
    for h in heights:
        if not val[h]:
            val[h].add(rng.choice(states))
    valuation = {h: frozenset(v) for h, v in val.items()}
    selection = {}
    for s in states:
        selection[(TOP, s)] = rng.choice(states)
        for h in heights:
            selection[(Height(h), s)] = rng.choice(sorted(valuation[h]))
    return RawModel(states, tuple(agents), pairs, valuation, selection)


def random_formula(rng: random.Random, max_depth: int = 4, agents=AGENTS, heights=HEIGHTS, size: int = 6) -> Formula:
    """Random formula of modal depth at most ``max_depth``."""

    def atom():
        return TOP if rng.random() < 0.15 else Height(rng.choice(heights))

    def go(depth: int, budget: int) -> Formula:
        if budget <= 0:
            return atom()
        r = rng.random()
        if r < 0.15:
            return atom()
        if r < 0.3:
            return Not(go(depth, budget - 1))
        if r < 0.5:
            return And(go(depth, budget // 2), go(depth, budget // 2))
        if depth == 0:
            return atom()
        agent = rng.choice(agents)
        if r < 0.75:
            return Know(agent, go(depth - 1, budget - 1))
        return Reason(agent, go(depth - 1, budget - 1), atom())

    return go(max_depth, size)
