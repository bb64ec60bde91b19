"""The five key facts about the sailboat flutter, as a reproducible check."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .butterfly import Flutter
from .checker import (
    Checker,
    Soundness,
    chain_formula,
    diamond_chain_depths,
    eval_counterfactual_iter,
    eval_iter_reason,
    iterative_ck,
)
from .formula import TOP, Height, Know, Reason, disj
from .model import ModelError

# CK over a whole butterfly is skipped above this many heap slots
CK_STATE_LIMIT = 200_000


class FactsConfigError(ModelError):
    pass


@dataclass(frozen=True)
class FactsConfig:
    center_k: int = 300
    margin_m: int = 50
    threshold: int = 100
    depth_d: int | None = None
    k_lo: int = 0
    k_hi: int = 600
    iter_depth: int = 6

    @property
    def min_depth(self) -> int:
        return math.ceil((self.center_k - self.threshold) / self.margin_m)

    @property
    def depth(self) -> int:
        return self.depth_d if self.depth_d is not None else max(self.min_depth, 6)

    def validate(self) -> None:
        if self.margin_m < 1:
            raise FactsConfigError("margin must be at least 1")
        if not self.threshold < self.center_k:
            raise FactsConfigError(
                f"threshold must be below the center: {self.threshold} >= {self.center_k}"
            )
        if self.center_k - self.margin_m <= 0:
            raise FactsConfigError("the center needs k - m > 0")
        if not self.k_lo <= self.center_k <= self.k_hi:
            raise FactsConfigError(f"center {self.center_k} outside range [{self.k_lo}, {self.k_hi}]")
        if self.depth < self.min_depth:
            raise FactsConfigError(
                f"depth {self.depth} too shallow: minimum depth {self.min_depth} required"
            )
        if self.iter_depth < 1:
            raise FactsConfigError("iteration depth must be at least 1")


@dataclass
class FactResult:
    number: int | str
    title: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        label = f"Fact {self.number}" if isinstance(self.number, int) else self.number
        return f"{tag} {label}: {self.title}" + (f" -- {self.detail}" if self.detail else "")


@dataclass
class FactsReport:
    config: FactsConfig
    results: list = field(default_factory=list)
    extras: list = field(default_factory=list)
    chain_depth: int | None = None
    chain_target: int | None = None
    chain_heights: tuple = ()
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def lines(self) -> list[str]:
        c = self.config
        head = f"flutter k=[{c.k_lo},{c.k_hi}] m={c.margin_m} depth={c.depth}; center {c.center_k}, threshold {c.threshold}"
        return [head] + [r.line() for r in self.results] + [r.line() for r in self.extras]

    def kv(self) -> list[str]:
        out = [f"fact{r.number}={'pass' if r.passed else 'fail'}" for r in self.results]
        out.append(f"chain_depth={self.chain_depth}")
        out.append(f"chain_target={self.chain_target}")
        out.append("chain_heights=" + ",".join(map(str, self.chain_heights)))
        out.append(f"all={'pass' if self.passed else 'fail'}")
        return out


def sample_counterfactuals(flutter: Flutter, k: int, m: int) -> list[int]:
    """Counterfactual centers ``k - 2m, k - m, k + m`` that the flutter holds."""
    return [c for c in (k - 2 * m, k - m, k + m) if flutter.has_butterfly(c)]


def run_facts(cfg: FactsConfig = FactsConfig(), flutter: Flutter | None = None) -> FactsReport:
    cfg.validate()
    t0 = time.perf_counter()
    k, m, t = cfg.center_k, cfg.margin_m, cfg.threshold
    F = flutter or Flutter(cfg.k_lo, cfg.k_hi, m, cfg.depth)
    if (F.k_lo, F.k_hi, F.m, F.d) != (cfg.k_lo, cfg.k_hi, m, cfg.depth):
        raise FactsConfigError(f"flutter {F!r} does not match the configuration")
    agents = F.agents
    w = F.center(k)
    ch = Checker(F)
    rep = FactsReport(cfg)
    around = disj(Height(k - m), Height(k), Height(k + m))
    above = F.heights_limit_formula(t)

    # 1: each agent knows the height is within one margin
    ok, notes = True, []
    for a in agents:
        r = ch.check(w, Know(a, around))
        ok &= r.value and r.exact
        notes.append(f"K_{a} {'true' if r.value else 'false'} ({r.soundness.value})")
    rep.results.append(FactResult(1, f"K_i([{k - m}] | [{k}] | [{k + m}]) at the center", ok, "; ".join(notes)))

    # 2: unconditional reason for the true height
    ok, notes = True, []
    for a in agents:
        r = ch.check(w, Reason(a, Height(k), TOP))
        ok &= r.value and r.exact
        notes.append(f"R_{a} {'true' if r.value else 'false'} ({r.soundness.value})")
    rep.results.append(FactResult(2, f"R_i([{k}]) at the center", ok, "; ".join(notes)))

    # 3: iterated reasons for the margin disjunction and for [>t]
    ok, notes = True, []
    for name, body in ((f"[{k - m}]|[{k}]|[{k + m}]", around), (f"[>{t}]", above)):
        s = eval_iter_reason(F, w, cfg.iter_depth, body, checker=ch)
        good = s.holds_for_all_n and s.exact and s.stable_support() == frozenset({w})
        ok &= good
        notes.append(
            f"r^n({name}) {'holds' if s.holds_for_all_n else 'fails'}, support {{"
            + ", ".join(F.label(x) for x in sorted(s.stable_support() or ()))
            + f"}} from n={s.stable_level}"
        )
    above_held = ok
    rep.results.append(FactResult(3, "r^n of the margin disjunction and of [>%d], all n" % t, ok, "; ".join(notes)))

    # 4: counterfactual iterated reasons
    ok, notes = True, []
    ks = sample_counterfactuals(F, k, m)
    for kk in ks:
        good = True
        for j in agents:
            s = eval_counterfactual_iter(F, w, cfg.iter_depth, kk, j, checker=ch)
            good &= s.holds_for_all_n and s.exact and s.stable_support() == frozenset({F.center(kk)})
        ok &= good
        notes.append(f"k={kk} {'holds' if good else 'fails'}")
    ok &= bool(ks)
    rep.results.append(FactResult(4, "r^n(R_j([k]) || [k]) for sampled k", ok, "; ".join(notes)))

    # 5: an alternating chain of possibilities reaches a height below the threshold
    first = agents[0]
    bound = cfg.depth + 2
    found = diamond_chain_depths(F, w, first, [Height(h) for h in range(t)], bound * 2)
    ok = False
    detail = "no sub-threshold height reachable"
    if found:
        target = max(found, key=lambda a: a.n)
        wit = found[target]
        expect = math.ceil((k - target.n) / m)
        rep.chain_depth, rep.chain_target = wit.depth, target.n
        rep.chain_heights = tuple(F.value(x) for x in wit.chain)
        at = ch.check(w, chain_formula(first, wit.depth, target, agents))
        below = ch.check(w, chain_formula(first, wit.depth - 1, target, agents)) if wit.depth > 1 else None
        ok = (
            wit.depth == expect
            and at.value and at.exact
            and (below is None or (not below.value and below.exact))
            and above_held
        )
        detail = (
            f"[{target.n}] after {wit.depth} steps (ceil(({k}-{target.n})/{m}) = {expect}); chain "
            + " -> ".join(f"{F.label(x)}[{F.value(x)}]" for x in wit.chain)
        )
    rep.results.append(FactResult(5, f"alternating <K>-chain to a height below {t} while r^n([>{t}])", ok, detail))

    # consistency: [>t] is not iterative common knowledge at the center
    if F.butterfly(k).n_slots <= CK_STATE_LIMIT:
        ck = iterative_ck(F, agents, above, states=F.butterfly_states(k), checker=ch)
        v = ck.verdict(w)
        good = not v.value and v.soundness is Soundness.EXACT
        path = " -> ".join(f"[{F.value(x)}]" for x in v.trace)
        rep.extras.append(
            FactResult("CK", f"[>{t}] is not iterative common knowledge at the center", good,
                       f"{v.soundness.value}; refutation {path}")
        )
    rep.seconds = time.perf_counter() - t0
    return rep


__all__ = ["FactsConfig", "FactsConfigError", "FactResult", "FactsReport", "run_facts", "sample_counterfactuals"]
