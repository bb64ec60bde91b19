"""Command-line interface.

Exit codes: 0 all checks pass, 1 a checked property is false, 2 usage or
configuration error, 3 a verdict is frontier-contaminated in a ``--strict``
run.  ``PLAUSIBILITY_MC_SEED`` overrides ``--seed``.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from typing import Sequence

from .butterfly import (
    ButterflyParams,
    Flutter,
    build_butterfly,
    load_flutter,
    save_flutter,
)
from .checker import Checker, Soundness, iterative_ck
from .facts import FactsConfig, run_facts
from .formula import AgentSetError, FormulaSyntaxError, height_above, parse, to_text
from .lewis import (
    DEFAULT_GUARD,
    READINGS,
    EventSpace,
    check_c1_c3,
    iterated_reasons,
    verify_lewis_theorem,
)
from .model import Model, ModelError, load_model, save_model

EXIT_OK, EXIT_FALSE, EXIT_USAGE, EXIT_UNSOUND = 0, 1, 2, 3
SEED_ENV = "PLAUSIBILITY_MC_SEED"

_ABOVE = re.compile(r"\[\s*>\s*(\d+)\s*\]")


class UsageError(Exception):
    pass


def _emit(lines) -> None:
    for line in lines:
        print(line)


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return args.seed


def load_structure(path: str):
    """An explicit model file, or a flutter directory / manifest."""
    if os.path.isdir(path) or path.endswith(".json"):
        return load_flutter(path)
    with open(path, encoding="utf-8") as fh:
        return load_model(fh.read())


def _max_height(structure) -> int:
    if isinstance(structure, Flutter):
        return structure.max_height
    return max(structure.heights, default=0)


def parse_formula(text: str, structure) -> object:
    """Parse, expanding ``[>t]`` into the heights the structure can hold."""
    top = _max_height(structure)

    def above(mo):
        return "(" + to_text(height_above(int(mo.group(1)), top)) + ")"

    # a same-width placeholder first, so syntax errors point into the user's text
    parse(_ABOVE.sub(lambda mo: "[0]".ljust(len(mo.group(0))), text), agents=structure.agents)
    return parse(_ABOVE.sub(above, text), agents=structure.agents)


def _state(structure, label: str):
    return structure.resolve(label)


def _states_of(structure, butterfly: int | None):
    if isinstance(structure, Flutter):
        if butterfly is None:
            raise UsageError("a flutter needs --butterfly K to pick the states")
        return structure.butterfly_states(butterfly)
    return list(structure.states)


# -- subcommands -----------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.what == "butterfly":
        model = build_butterfly(ButterflyParams(args.k, args.m, args.depth))
        text = save_model(model)
        if args.output in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(f"wrote {len(model.states)} states to {args.output}")
        return EXIT_OK
    if args.output is None:
        raise UsageError("gen flutter needs -o DIR")
    F = Flutter(args.k_lo, args.k_hi, args.m, args.depth)
    path = save_flutter(F, args.output, write_models=not args.manifest_only)
    print(f"wrote {path} ({len(F.centers)} butterflies, depth {F.d})")
    return EXIT_OK


def cmd_check(args) -> int:
    S = load_structure(args.model)
    w = _state(S, args.state)
    f = parse_formula(args.formula, S)
    r = Checker(S).check(w, f)
    lines = [
        f"formula: {args.formula if _ABOVE.search(args.formula) or len(args.formula) >= 200 else to_text(f)}",
        f"state: {S.label(w)}",
        f"value: {'true' if r.value else 'false'}",
        f"soundness: {r.soundness.value}",
        "witness: " + (" -> ".join(S.label(x) for x in r.trace) if r.trace else "-"),
    ]
    _emit(lines)
    if args.kv:
        print(f"value={str(r.value).lower()} soundness={r.soundness.value}")
    if args.strict and r.soundness is not Soundness.EXACT:
        return EXIT_UNSOUND
    return EXIT_OK if r.value else EXIT_FALSE


def cmd_ck(args) -> int:
    S = load_structure(args.model)
    f = parse_formula(args.formula, S)
    group = tuple(args.agents.split(",")) if args.agents else S.agents
    states = _states_of(S, args.butterfly)
    ck = iterative_ck(S, group, f, states=states)
    members = [s for s in ck.domain if s in ck.members]
    contaminated = [s for s in ck.domain if not ck.exact[s]]
    print(f"common knowledge among {','.join(group)}: {len(members)} of {len(ck.domain)} states")
    if len(members) <= 50:
        print("members: " + (" ".join(S.label(s) for s in members) or "-"))
    print(f"frontier-contaminated verdicts: {len(contaminated)}")
    code = EXIT_OK
    if args.state:
        w = _state(S, args.state)
        if w not in ck.exact:
            raise UsageError(f"state {args.state} is not among the checked states")
        v = ck.verdict(w)
        print(f"state {S.label(w)}: {'in' if v.value else 'not in'} the CK set ({v.soundness.value})")
        if v.trace:
            print("refutation: " + " -> ".join(f"{S.label(x)}" for x in v.trace))
        code = EXIT_OK if v.value else EXIT_FALSE
        if args.strict and not v.exact:
            code = EXIT_UNSOUND
    elif args.strict and contaminated:
        code = EXIT_UNSOUND
    return code


def cmd_facts(args) -> int:
    cfg = FactsConfig(
        center_k=args.k, margin_m=args.m, threshold=args.threshold, depth_d=args.depth,
        k_lo=args.k_lo, k_hi=args.k_hi, iter_depth=args.iter_depth,
    )
    flutter = None
    if args.flutter_dir:
        flutter = load_flutter(args.flutter_dir)
        cfg = FactsConfig(
            center_k=args.k, margin_m=flutter.m, threshold=args.threshold, depth_d=flutter.d,
            k_lo=flutter.k_lo, k_hi=flutter.k_hi, iter_depth=args.iter_depth,
        )
    rep = run_facts(cfg, flutter)
    _emit(rep.lines())
    if args.kv:
        _emit(rep.kv())
    return EXIT_OK if rep.passed else EXIT_FALSE


def _event(space: EventSpace, text: str, S):
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        names = [t for t in re.split(r"[\s,]+", body[1:-1]) if t]
        return space.event([_state(S, n) for n in names])
    return space.event(parse_formula(body, S))


def cmd_lewis(args) -> int:
    S = load_structure(args.model)
    states = _states_of(S, args.butterfly) if isinstance(S, Flutter) else None
    space = EventSpace(S, states)
    A = _event(space, args.basis, S)
    B = _event(space, args.target, S)
    if args.no_c4:
        rep = check_c1_c3(space, A, B)
        levels, stable = iterated_reasons(space, B, args.depth)
        rep.r_levels, rep.stabilized, rep.stable_level = levels, stable is not None, stable
        rep.conclusion_holds = all(not A & ~lvl for lvl in levels)
    else:
        rep = verify_lewis_theorem(space, A, B, args.depth, args.c4_reading, args.guard)
    print(f"event space: {len(space)} states" + (f" ({len(space.added)} added by selection)" if space.added else ""))
    _emit(rep.lines(space))
    kv = [f"{c}={'true' if v else 'false'}" for c, v in rep.verdicts.items()]
    kv.append(f"c4_reading={rep.c4_reading if 'C4' in rep.verdicts else 'skipped'}")
    kv.append(f"c4_search_space={rep.c4_search_space}")
    kv.append(f"conclusion={'true' if rep.conclusion_holds else 'false'}")
    kv.append(f"stabilized={'true' if rep.stabilized else 'false'}")
    _emit(kv)
    ok = all(rep.verdicts.values()) and rep.conclusion_holds
    return EXIT_OK if ok else EXIT_FALSE


def _dot(model: Model) -> list[str]:
    colors = ["blue", "red", "darkgreen", "orange"]
    out = ["digraph plausibility {", "  rankdir=BT;"]
    for s in model.states:
        hs = ",".join(str(n) for n in sorted(model.heights_at(s)))
        style = ", style=dashed" if s in model.frontier else ""
        out.append(f'  "{s}" [label="{s}\\n[{hs}]"{style}];')
    for i, a in enumerate(model.agents):
        col = colors[i % len(colors)]
        for s in model.states:
            for t in sorted(model.above(a, s), key=model.sort_key):
                if s == t or not model.less(a, s, t):
                    continue
                if any(model.less(a, s, c) and model.less(a, c, t) for c in model.above(a, s)):
                    continue
                out.append(f'  "{s}" -> "{t}" [label="{a}", color={col}];')
    out.append("}")
    return out


def cmd_dump(args) -> int:
    S = load_structure(args.model)
    if isinstance(S, Flutter):
        if args.butterfly is None:
            raise UsageError("a flutter needs --butterfly K")
        model = S.butterfly(args.butterfly).to_model()
    else:
        model = S
    if args.gaps:
        gaps = model.comparability_gaps()
        print(f"{len(gaps)} pair(s) share a component without being comparable")
        for a, s, t in gaps:
            print(f"  {a}: {s} ~ {t}")
    if args.dot or not args.gaps:
        _emit(_dot(model))
    return EXIT_OK


def cmd_suite(args) -> int:
    from .suites import lewis_property_run, oracle_equivalence

    seed = _seed(args)
    if args.which == "oracle":
        s = oracle_equivalence(args.models or 200, args.formulas, seed=seed)
        print(f"oracle equivalence: {s.models} models, {s.checks} checks, "
              f"{len(s.disagreements)} disagreements, {s.inexact} inexact, seed {seed}")
        return EXIT_OK if s.ok else EXIT_FALSE
    s = lewis_property_run(args.models or 500, seed=seed, reading=args.c4_reading)
    print(f"lewis property run: {s.models} models, {s.pairs} (A,B) pairs, {s.premise_pairs} with C1-C4, "
          f"{len(s.counterexamples)} counterexamples, {s.witnesses_replayed} witnesses replayed, "
          f"{len(s.replay_failures)} replay failures, seed {seed}")
    return EXIT_OK if s.ok else EXIT_FALSE


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plausibility-mc",
        description="Model checking for knowledge and reasons to believe on plausibility models.",
        epilog="[>t] in a formula expands to the disjunction of every height above t the model can hold.",
    )
    p.add_argument("--seed", type=int, default=0, help=f"seed for randomized suites (env {SEED_ENV} wins)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a butterfly model or a flutter")
    g.add_argument("what", choices=["butterfly", "flutter"])
    g.add_argument("--k", type=int, default=300)
    g.add_argument("--k-lo", type=int, default=0)
    g.add_argument("--k-hi", type=int, default=600)
    g.add_argument("--m", type=int, default=50)
    g.add_argument("--depth", type=int, default=6)
    g.add_argument("-o", "--output")
    g.add_argument("--manifest-only", action="store_true", help="flutter: skip the per-butterfly model files")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="evaluate a formula at a state")
    c.add_argument("--model", required=True, help="model file or flutter directory")
    c.add_argument("--state", required=True)
    c.add_argument("--formula", required=True)
    c.add_argument("--strict", action="store_true", help="exit 3 on a frontier-contaminated verdict")
    c.add_argument("--kv", action="store_true", help="also print key=value output")
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("ck", help="iterative common knowledge as a greatest fixed point")
    k.add_argument("--model", required=True)
    k.add_argument("--formula", required=True)
    k.add_argument("--agents", help="comma-separated group (default: all agents)")
    k.add_argument("--butterfly", type=int, help="flutter: restrict to the butterfly centered here")
    k.add_argument("--state", help="report this state's verdict and refutation")
    k.add_argument("--strict", action="store_true")
    k.set_defaults(func=cmd_ck)

    f = sub.add_parser("facts", help="run the five key facts")
    f.add_argument("--flutter-dir")
    f.add_argument("--k", type=int, default=300)
    f.add_argument("--m", type=int, default=50)
    f.add_argument("--threshold", type=int, default=100)
    f.add_argument("--depth", type=int, help="truncation depth (default: max(6, required minimum))")
    f.add_argument("--k-lo", type=int, default=0)
    f.add_argument("--k-hi", type=int, default=600)
    f.add_argument("--iter-depth", type=int, default=6)
    f.add_argument("--kv", action="store_true")
    f.set_defaults(func=cmd_facts)

    lw = sub.add_parser("lewis", help="check C1-C4 and the iterated-reason conclusion")
    lw.add_argument("--model", required=True)
    lw.add_argument("--basis", required=True, help="formula, or a state list like '{w0, w1}'")
    lw.add_argument("--target", required=True, help="formula, or a state list")
    lw.add_argument("--c4-reading", choices=READINGS, default="local")
    lw.add_argument("--depth", type=int, default=6)
    lw.add_argument("--guard", type=int, default=DEFAULT_GUARD, help="largest state count for C4 enumeration")
    lw.add_argument("--no-c4", action="store_true", help="skip C4 (for spaces above the guard)")
    lw.add_argument("--butterfly", type=int)
    lw.set_defaults(func=cmd_lewis)

    d = sub.add_parser("dump", help="export a model as Graphviz or list comparability gaps")
    d.add_argument("--model", required=True)
    d.add_argument("--dot", action="store_true")
    d.add_argument("--gaps", action="store_true")
    d.add_argument("--butterfly", type=int)
    d.set_defaults(func=cmd_dump)

    s = sub.add_parser("suite", help="seeded randomized suites")
    s.add_argument("which", choices=["oracle", "lewis"])
    s.add_argument("--models", type=int)
    s.add_argument("--formulas", type=int, default=20)
    s.add_argument("--c4-reading", choices=READINGS, default="local")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, FormulaSyntaxError, AgentSetError, ModelError, LookupError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
