"""Explicit finite epistemic-plausibility models and their text format.

A :class:`Model` holds the states, one plausibility preorder per agent (stored
reflexively and transitively closed), a valuation of height atoms, and
optional frontier flags marking states whose structure may be truncated.
Knowledge reads off epistemic components, i.e. connected components of the
comparability graph of an agent's preorder; reasons to believe read off the
maximally plausible states of a component.

File format (one section per line, ``#`` starts a comment)::

    agents: R C
    states: w0 w1 w2 w3 w4
    atom [300]: w0
    atom [250]: w1 w3
    atom [350]: w2 w4
    order R closure=auto: w1<w0 w2<w0
    order C closure=auto: w3<w0 w4<w0
    frontier: w1@C w2@C w3@R w4@R
    select [300] *: w0
    select true w0: w0
    butterfly: k=300 m=50 depth=0

``a<b`` and ``a<=b`` both contribute the pair "a is at most as plausible as
b".  With ``closure=auto`` the reflexive-transitive closure is taken and a
pair written ``a<b`` must stay strict; with ``closure=none`` the listed pairs
must already form a preorder.  A frontier entry ``w@C`` says only agent C's
component at ``w`` may be incomplete; a bare ``w`` means every agent's.
"""

from __future__ import annotations

import re

from typing import Iterable, Mapping

from .formula import TOP, Formula, Height, Top, to_text

__all__ = [
    "Model",
    "TableSelection",
    "ModelError",
    "ModelFormatError",
    "PreorderError",
    "UnknownStateError",
    "MissingSelectionTarget",
    "SuccessPostulateError",
    "epistemic_component",
    "max_plausible",
    "select",
    "load_model",
    "save_model",
    "reflexive_transitive_closure",
]


class ModelError(ValueError):
    pass


class ModelFormatError(ModelError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class PreorderError(ModelError):
    def __init__(self, message: str, agent: str, witness: tuple):
        self.agent = agent
        self.witness = witness
        super().__init__(f"order {agent}: {message}")


class UnknownStateError(LookupError):
    pass


class MissingSelectionTarget(LookupError):
    """The selection function has no entry for a (condition, state) pair."""


class SuccessPostulateError(ModelError):
    pass


def reflexive_transitive_closure(
    states: Iterable, pairs: Iterable[tuple]
) -> dict[object, frozenset]:
    """Map each state to the set of states at least as plausible as it."""
    succ: dict = {s: set() for s in states}
    for a, b in pairs:
        succ[a].add(b)
    up = {}
    for s in succ:
        seen = {s}
        todo = [s]
        while todo:
            x = todo.pop()
            for y in succ[x]:
                if y not in seen:
                    seen.add(y)
                    todo.append(y)
        up[s] = frozenset(seen)
    return up


def _components(states: tuple, up: Mapping) -> dict:
    parent = {s: s for s in states}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a in states:
        for b in up[a]:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
    groups: dict = {}
    for s in states:
        groups.setdefault(find(s), []).append(s)
    comp = {}
    for members in groups.values():
        t = tuple(members)
        for s in members:
            comp[s] = t
    return comp


class Model:
    """An explicit finite epistemic-plausibility model.

    ``orders`` maps each agent to pairs ``(a, b)`` meaning ``a <= b`` ("b is
    at least as plausible as a").  With ``closure=True`` the pairs are closed
    reflexively and transitively; otherwise they are checked to already be a
    preorder and a :class:`PreorderError` names the failing axiom.

    ``valuation`` maps heights (ints or :class:`Height` atoms) to states;
    ``true`` holds everywhere and unlisted heights hold nowhere.
    """

    def __init__(
        self,
        states: Iterable[str],
        agents: Iterable[str],
        orders: Mapping[str, Iterable[tuple]],
        valuation: Mapping,
        frontier: Mapping | Iterable | None = None,
        selection: Mapping | None = None,
        *,
        closure: bool = True,
        meta: Mapping | None = None,
    ):
        self.states = tuple(states)
        if not self.states:
            raise ModelError("a model needs at least one state")
        self._index = {}
        for i, s in enumerate(self.states):
            if s in self._index:
                raise ModelError(f"duplicate state id {s!r}")
            self._index[s] = i
        self.agents = tuple(agents)
        if not self.agents:
            raise ModelError("a model needs at least one agent")
        if len(set(self.agents)) != len(self.agents):
            raise ModelError("duplicate agent name")
        unknown = set(orders) - set(self.agents)
        if unknown:
            raise ModelError(f"order for undeclared agent(s) {sorted(unknown)}")

        self._up: dict[str, dict] = {}
        for a in self.agents:
            pairs = list(orders.get(a, ()))
            for p, q in pairs:
                self._require(p)
                self._require(q)
            if closure:
                self._up[a] = reflexive_transitive_closure(self.states, pairs)
            else:
                self._up[a] = self._verified_preorder(a, pairs)
        self._comp = {a: _components(self.states, self._up[a]) for a in self.agents}

        self._val: dict[int, frozenset] = {}
        for key, members in valuation.items():
            if isinstance(key, Top):
                members = frozenset(members)
                if members != frozenset(self.states):
                    raise ModelError("V(true) must be the set of all states")
                continue
            n = key.n if isinstance(key, Height) else int(key)
            members = frozenset(members)
            for s in members:
                self._require(s)
            if members:
                self._val[n] = self._val.get(n, frozenset()) | members
        self._heights_at = {s: frozenset() for s in self.states}
        for n, members in self._val.items():
            for s in members:
                self._heights_at[s] = self._heights_at[s] | {n}

        self.frontier: dict[str, frozenset] = {}
        if frontier is not None:
            items = frontier.items() if isinstance(frontier, Mapping) else (
                (s, self.agents) for s in frontier
            )
            for s, ags in items:
                self._require(s)
                ags = frozenset(ags)
                if not ags <= set(self.agents):
                    raise ModelError(f"frontier flag for undeclared agent at {s!r}")
                if ags:
                    self.frontier[s] = ags
        self._complete = {
            a: {
                s: not any(a in self.frontier.get(x, ()) for x in self._comp[a][s])
                for s in self.states
            }
            for a in self.agents
        }
        self.meta = dict(meta or {})
        self.selection = None if selection is None else TableSelection(self, selection)

    # -- construction helpers -------------------------------------------------

    def _require(self, s) -> None:
        if s not in self._index:
            raise UnknownStateError(f"unknown state {s!r}")

    def _verified_preorder(self, agent: str, pairs: list) -> dict:
        up = {s: set() for s in self.states}
        for p, q in pairs:
            up[p].add(q)
        for s in self.states:
            if s not in up[s]:
                raise PreorderError(f"not reflexive at {s}", agent, (s,))
        for a in self.states:
            for b in sorted(up[a], key=self._index.__getitem__):
                for c in sorted(up[b], key=self._index.__getitem__):
                    if c not in up[a]:
                        raise PreorderError(
                            f"not transitive via ({a}, {b}, {c})", agent, (a, b, c)
                        )
        return {s: frozenset(v) for s, v in up.items()}

    # -- queries ----------------------------------------------------------------

    def __contains__(self, s) -> bool:
        return s in self._index

    def __len__(self) -> int:
        return len(self.states)

    def sort_key(self, s) -> int:
        return self._index[s]

    def label(self, s) -> str:
        return str(s)

    def resolve(self, label: str):
        self._require(label)
        return label

    def leq(self, agent: str, a, b) -> bool:
        return b in self._up[agent][a]

    def less(self, agent: str, a, b) -> bool:
        up = self._up[agent]
        return b in up[a] and a not in up[b]

    def above(self, agent: str, s) -> frozenset:
        return self._up[agent][s]

    def comparable(self, agent: str, a, b) -> bool:
        up = self._up[agent]
        return b in up[a] or a in up[b]

    def component(self, agent: str, s) -> tuple:
        try:
            return self._comp[agent][s]
        except KeyError:
            if agent not in self._comp:
                raise ModelError(f"undeclared agent {agent!r}") from None
            raise UnknownStateError(f"unknown state {s!r}") from None

    def component_complete(self, agent: str, s) -> bool:
        return self._complete[agent][s]

    def is_frontier(self, s) -> bool:
        return s in self.frontier

    def max_plausible(self, agent: str, xs: Iterable) -> tuple:
        xs = list(dict.fromkeys(xs))
        up = self._up[agent]
        return tuple(
            x for x in xs if not any(y in up[x] and x not in up[y] for y in xs)
        )

    def holds(self, atom: Formula, s) -> bool:
        if isinstance(atom, Top):
            return True
        return atom.n in self._heights_at[s]

    def heights_at(self, s) -> frozenset:
        return self._heights_at[s]

    def extension(self, atom: Formula) -> frozenset:
        if isinstance(atom, Top):
            return frozenset(self.states)
        return self._val.get(atom.n, frozenset())

    @property
    def heights(self) -> list[int]:
        return sorted(self._val)

    def pairs(self, agent: str) -> set[tuple]:
        return {(a, b) for a in self.states for b in self._up[agent][a]}

    def comparability_gaps(self) -> list[tuple]:
        """Pairs in one epistemic component that are not directly comparable.

        These are exactly the places where reading accessibility as raw
        comparability differs from reading it as the component relation.
        """
        out = []
        for a in self.agents:
            for s in self.states:
                for t in self._comp[a][s]:
                    if self._index[s] < self._index[t] and not self.comparable(a, s, t):
                        out.append((a, s, t))
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Model):
            return NotImplemented
        return (
            set(self.states) == set(other.states)
            and self.agents == other.agents
            and all(self.pairs(a) == other.pairs(a) for a in self.agents)
            and self._val == other._val
            and self.frontier == other.frontier
            and _table(self.selection) == _table(other.selection)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Model({len(self.states)} states, agents={list(self.agents)})"


def _table(sel) -> dict | None:
    return None if sel is None else sel.as_dict()


class TableSelection:
    """Table-backed selection function with per-atom wildcard rows.

    Every entry must satisfy the success postulate: the selected state makes
    the condition atom true.  Lookups without an entry raise
    :class:`MissingSelectionTarget`.
    """

    def __init__(self, model: Model, table: Mapping):
        self.model = model
        self._rows: dict[tuple, object] = {}
        self._wild: dict[Formula, object] = {}
        if isinstance(table, TableSelection):
            table = table.as_dict()
        for (atom, w), target in table.items():
            if not isinstance(atom, (Top, Height)):
                raise ModelError(f"selection conditions must be atoms, got {atom!r}")
            model._require(target)
            if not model.holds(atom, target):
                raise SuccessPostulateError(
                    f"selected state {target} does not satisfy {to_text(atom)}"
                )
            if w == "*":
                self._wild[atom] = target
            else:
                model._require(w)
                self._rows[(atom, w)] = target

    def select(self, atom: Formula, w):
        target = self._rows.get((atom, w))
        if target is None:
            target = self._wild.get(atom)
        if target is None:
            raise MissingSelectionTarget(
                f"no selection target for ({to_text(atom)}, {w})"
            )
        return target

    def as_dict(self) -> dict:
        d = {(a, "*"): t for a, t in self._wild.items()}
        d.update(self._rows)
        return d


def epistemic_component(model, agent: str, w) -> frozenset:
    return frozenset(model.component(agent, w))


def max_plausible(model, agent: str, xs: Iterable) -> frozenset:
    return frozenset(model.max_plausible(agent, xs))


def select(f, atom: Formula, w):
    return f.select(atom, w)


# -- text format ---------------------------------------------------------------


def _parse_atom(tok: str, line: int) -> Formula:
    tok = tok.strip()
    if tok == "true":
        return TOP
    if tok.startswith("[") and tok.endswith("]") and tok[1:-1].strip().isdigit():
        return Height(int(tok[1:-1]))
    raise ModelFormatError(f"bad atom {tok!r}", line)


# state ids may contain ':', so the header ends at the first ':' before a blank
_SECTION = re.compile(r"^(.*?):(?:\s+|$)(.*)$")


def load_model(text: str) -> Model:
    agents = None
    states = None
    valuation: dict = {}
    orders: dict[str, list] = {}
    strict_declared: dict[str, list] = {}
    closure_mode: dict[str, bool] = {}
    frontier: dict = {}
    selection: dict = {}
    meta: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        mo = _SECTION.match(line)
        if mo is None:
            raise ModelFormatError(f"expected 'section: values', got {line!r}", lineno)
        words = mo.group(1).split()
        items = mo.group(2).split()
        kind = words[0]
        if kind == "agents":
            agents = items
        elif kind == "states":
            if not items:
                raise ModelFormatError("empty states section", lineno)
            if len(set(items)) != len(items):
                dup = next(s for s in items if items.count(s) > 1)
                raise ModelFormatError(f"duplicate state id {dup!r}", lineno)
            states = items
        elif kind == "atom":
            atom = _parse_atom(" ".join(words[1:]), lineno)
            valuation.setdefault(atom, set()).update(items)
        elif kind == "order":
            if len(words) < 2:
                raise ModelFormatError("order line needs an agent", lineno)
            agent = words[1]
            if agent in orders:
                raise ModelFormatError(f"second order line for agent {agent}", lineno)
            mode = "auto"
            for opt in words[2:]:
                key, _, val = opt.partition("=")
                if key != "closure" or val not in ("auto", "none"):
                    raise ModelFormatError(f"bad order option {opt!r}", lineno)
                mode = val
            closure_mode[agent] = mode == "auto"
            pairs, strict = [], []
            for tok in items:
                if "<=" in tok:
                    a, b = tok.split("<=", 1)
                elif "<" in tok:
                    a, b = tok.split("<", 1)
                    strict.append((a, b))
                else:
                    raise ModelFormatError(f"bad order pair {tok!r}", lineno)
                pairs.append((a, b))
            orders[agent] = pairs
            strict_declared[agent] = strict
        elif kind == "frontier":
            for tok in items:
                s, _, ags = tok.partition("@")
                frontier[s] = tuple(ags.split(",")) if ags else None
        elif kind == "select":
            if len(words) != 3:
                raise ModelFormatError("select line is 'select <atom> <state|*>: <state>'", lineno)
            if len(items) != 1:
                raise ModelFormatError("select line needs exactly one target", lineno)
            selection[(_parse_atom(words[1], lineno), words[2])] = items[0]
        elif kind == "butterfly":
            for tok in items:
                key, _, val = tok.partition("=")
                if not val.isdigit():
                    raise ModelFormatError(f"bad butterfly parameter {tok!r}", lineno)
                meta[key] = int(val)
        else:
            raise ModelFormatError(f"unknown section {kind!r}", lineno)
    if states is None:
        raise ModelFormatError("missing states section")
    if agents is None:
        raise ModelFormatError("missing agents section")
    agents_t = tuple(agents)
    frontier = {s: (agents_t if a is None else a) for s, a in frontier.items()}
    modes = set(closure_mode.values())
    if len(modes) > 1:
        # mixed modes: close per agent before handing over
        for a, auto in closure_mode.items():
            if auto:
                up = reflexive_transitive_closure(states, orders[a])
                orders[a] = [(s, t) for s in states for t in up[s]]
        closure = False
    else:
        closure = modes != {False}
    model = Model(
        states, agents_t, orders, valuation, frontier, selection or None,
        closure=closure, meta=meta,
    )
    for a, strict in strict_declared.items():
        for p, q in strict:
            if closure_mode[a] and not model.less(a, p, q):
                raise PreorderError(f"declared strict pair {p}<{q} collapses under closure", a, (p, q))
    return model


def _atom_text(atom: Formula) -> str:
    return "true" if isinstance(atom, Top) else f"[{atom.n}]"


def save_model(model: Model) -> str:
    key = model.sort_key
    lines = [f"agents: {' '.join(model.agents)}", f"states: {' '.join(model.states)}"]
    for n in model.heights:
        members = sorted(model.extension(Height(n)), key=key)
        lines.append(f"atom [{n}]: {' '.join(members)}")
    for a in model.agents:
        toks = []
        for s in model.states:
            for t in sorted(model.above(a, s), key=key):
                if s == t:
                    continue
                if model.less(a, s, t):
                    covered = any(
                        model.less(a, s, c) and model.less(a, c, t) for c in model.above(a, s)
                    )
                    if not covered:
                        toks.append(f"{s}<{t}")
                else:
                    toks.append(f"{s}<={t}")
        lines.append(f"order {a} closure=auto: {' '.join(toks)}".rstrip())
    if model.frontier:
        toks = []
        for s in sorted(model.frontier, key=key):
            ags = model.frontier[s]
            if set(ags) == set(model.agents):
                toks.append(s)
            else:
                toks.append(f"{s}@{','.join(a for a in model.agents if a in ags)}")
        lines.append(f"frontier: {' '.join(toks)}")
    if model.selection is not None:
        rows = model.selection.as_dict()
        for (atom, w), t in sorted(
            rows.items(),
            key=lambda kv: (
                kv[0][0].n + 1 if isinstance(kv[0][0], Height) else 0,
                -1 if kv[0][1] == "*" else key(kv[0][1]),
            ),
        ):
            lines.append(f"select {_atom_text(atom)} {w}: {t}")
    if model.meta:
        lines.append("butterfly: " + " ".join(f"{k}={v}" for k, v in model.meta.items()))
    return "\n".join(lines) + "\n"
