"""Abstract syntax, text grammar and derived operators for the modal language.

The core language has atoms (``true`` and heights ``[n]``), conjunction,
negation, conditional reasons ``R_i(phi || p)`` whose condition is always an
atom, and knowledge ``K_i phi``.  Everything else (disjunction, implication,
diamonds, iterated reasons, alternating diamond chains) is sugar that is
expanded eagerly into the core constructors.

Grammar accepted by :func:`parse` (whitespace-insensitive)::

    phi  ::= atom | "false" | "(" phi ")" | "!" phi
           | phi "&" phi | phi "|" phi | phi "->" phi
           | "R_" ident "(" phi ")" | "R_" ident "(" phi "||" atom ")"
           | "K_" ident phi | "<K_" ident ">" phi
           | "r^" nat "(" phi "||" atom ")"
           | "<K_" ident ">^" nat phi
    atom ::= "[" nat "]" | "true"

Precedence is ``!`` > ``&`` > ``|`` > ``->`` (implication associates to the
right).  Inside the argument of ``R_i(...)`` and ``r^n(...)`` a top-level bar
separates the condition, so a single ``|`` and ``||`` both work there and a
disjunctive body must be parenthesized.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

__all__ = [
    "Formula",
    "Atom",
    "Top",
    "Height",
    "Not",
    "And",
    "Reason",
    "Know",
    "TOP",
    "BOTTOM",
    "FormulaSyntaxError",
    "RestrictedConditionError",
    "AgentSetError",
    "parse",
    "to_text",
    "modal_depth",
    "agents_of",
    "heights_of",
    "is_atom",
    "conj",
    "disj",
    "lor",
    "implies",
    "reason",
    "diamond",
    "dual_reason",
    "expand_iter_reason",
    "expand_diamond_chain",
    "height_above",
]

_AGENT_RE = re.compile(r"[A-Za-z0-9]+\Z")


class Formula:
    """Base class of all AST nodes.

    Nodes are immutable and compare structurally.  The hash and the modal
    depth are computed once per node, which keeps memo tables keyed by large
    shared formulas (iterated reasons, long disjunctions) cheap.
    """

    __slots__ = ()

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((type(self).__name__,) + self._key())
            object.__setattr__(self, "_hash", h)
        return h

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if type(other) is not type(self):
            return NotImplemented
        return hash(self) == hash(other) and self._key() == other._key()

    @property
    def depth(self) -> int:
        return self.__dict__["_md"]

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, eq=False)
class Top(Formula):
    def __post_init__(self) -> None:
        object.__setattr__(self, "_md", 0)

    def _key(self) -> tuple:
        return ()

    def __repr__(self) -> str:
        return "Top()"


@dataclass(frozen=True, eq=False)
class Height(Formula):
    """The proposition ``[n]``: the mast is ``n`` cm tall."""

    n: int

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 0:
            raise ValueError(f"height atoms carry a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "_md", 0)

    def _key(self) -> tuple:
        return (self.n,)


Atom = (Top, Height)


@dataclass(frozen=True, eq=False)
class Not(Formula):
    body: Formula

    def __post_init__(self) -> None:
        object.__setattr__(self, "_md", self.body.depth)

    def _key(self) -> tuple:
        return (self.body,)


@dataclass(frozen=True, eq=False)
class And(Formula):
    left: Formula
    right: Formula

    def __post_init__(self) -> None:
        object.__setattr__(self, "_md", max(self.left.depth, self.right.depth))

    def _key(self) -> tuple:
        return (self.left, self.right)


@dataclass(frozen=True, eq=False)
class Reason(Formula):
    """``R_agent(body | cond)``; the condition is restricted to atoms."""

    agent: str
    body: Formula
    cond: Formula

    def __post_init__(self) -> None:
        _check_agent(self.agent)
        if not isinstance(self.cond, Atom):
            raise RestrictedConditionError(
                "restricted condition: only atoms may appear as conditions, "
                f"got {to_text(self.cond)}"
            )
        object.__setattr__(self, "_md", self.body.depth + 1)

    def _key(self) -> tuple:
        return (self.agent, self.body, self.cond)


@dataclass(frozen=True, eq=False)
class Know(Formula):
    agent: str
    body: Formula

    def __post_init__(self) -> None:
        _check_agent(self.agent)
        object.__setattr__(self, "_md", self.body.depth + 1)

    def _key(self) -> tuple:
        return (self.agent, self.body)


TOP = Top()
BOTTOM = Not(TOP)


def _check_agent(name: object) -> None:
    if not isinstance(name, str) or not _AGENT_RE.match(name):
        raise ValueError(f"agent names are nonempty alphanumeric identifiers, got {name!r}")


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class RestrictedConditionError(FormulaSyntaxError):
    """A compound formula was used in the condition slot of a reason."""


class AgentSetError(ValueError):
    pass


def is_atom(f: Formula) -> bool:
    return isinstance(f, Atom)


def modal_depth(f: Formula) -> int:
    return f.depth


def _walk(f: Formula):
    seen = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        yield g
        if isinstance(g, Not):
            stack.append(g.body)
        elif isinstance(g, And):
            stack.extend((g.left, g.right))
        elif isinstance(g, Reason):
            stack.extend((g.body, g.cond))
        elif isinstance(g, Know):
            stack.append(g.body)


def agents_of(f: Formula) -> frozenset[str]:
    return frozenset(g.agent for g in _walk(f) if isinstance(g, (Reason, Know)))


def heights_of(f: Formula) -> frozenset[int]:
    return frozenset(g.n for g in _walk(f) if isinstance(g, Height))


# -- derived forms -----------------------------------------------------------


def conj(*fs: Formula) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``true``."""
    if not fs:
        return TOP
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def lor(a: Formula, b: Formula) -> Formula:
    return Not(And(Not(a), Not(b)))


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def disj(*fs: Formula) -> Formula:
    """Balanced disjunction, so long disjunctions stay shallow.

    The empty disjunction is ``false``.
    """
    if not fs:
        return BOTTOM
    if len(fs) == 1:
        return fs[0]
    mid = len(fs) // 2
    return lor(disj(*fs[:mid]), disj(*fs[mid:]))


def reason(agent: str, body: Formula) -> Reason:
    """Unconditional reason to believe: ``R_i(phi | true)``."""
    return Reason(agent, body, TOP)


def diamond(agent: str, body: Formula) -> Formula:
    return Not(Know(agent, Not(body)))


def dual_reason(agent: str, body: Formula, cond: Formula) -> Formula:
    return Not(Reason(agent, Not(body), cond))


def expand_iter_reason(
    depth: int, body: Formula, cond: Formula, agents: Sequence[str]
) -> Formula:
    """Expand ``r^depth(body | cond)`` over ``agents``.

    ``r^0`` is the conjunction of ``R_i(body | cond)`` and each further level
    wraps the previous one in every agent's reason operator.  Levels share
    the previous level as a subterm; the expansion is still the literal
    recursion.
    """
    if depth < 0:
        raise ValueError("depth must be non-negative")
    agents = list(agents)
    if not agents:
        raise AgentSetError("iterated reasons need a nonempty agent set")
    if not isinstance(cond, Atom):
        raise RestrictedConditionError(
            f"restricted condition: only atoms may appear as conditions, got {to_text(cond)}"
        )
    level = conj(*(Reason(a, body, cond) for a in agents))
    for _ in range(depth):
        level = conj(*(Reason(a, level, cond) for a in agents))
    return level


def expand_diamond_chain(
    first: str, depth: int, body: Formula, agents: Sequence[str]
) -> Formula:
    """``<K^depth_first> body``: ``depth + 1`` alternating diamonds."""
    agents = list(dict.fromkeys(agents))
    if len(agents) != 2:
        raise AgentSetError(
            f"alternating diamond chains need exactly two agents, got {len(agents)}"
        )
    if first not in agents:
        raise AgentSetError(f"agent {first!r} is not in the agent set {agents}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    other = agents[1] if agents[0] == first else agents[0]
    seq = [first if i % 2 == 0 else other for i in range(depth + 1)]
    out = body
    for a in reversed(seq):
        out = diamond(a, out)
    return out


def height_above(threshold: int, max_height: int) -> Formula:
    """Finite encoding of ``[>threshold]`` over heights up to ``max_height``."""
    return disj(*(Height(n) for n in range(threshold + 1, max_height + 1)))


# -- printing ----------------------------------------------------------------


def _as_or(f: Formula):
    if (
        type(f) is Not
        and type(f.body) is And
        and type(f.body.left) is Not
        and type(f.body.right) is Not
    ):
        return f.body.left.body, f.body.right.body
    return None


def _as_diamond(f: Formula):
    if type(f) is Not and type(f.body) is Know and type(f.body.body) is Not:
        return f.body.agent, f.body.body.body
    return None


def to_text(f: Formula) -> str:
    """Render ``f`` so that ``parse(to_text(f)) == f``.

    Binary connectives are always parenthesized; disjunctions and diamonds
    are printed with their sugar since they expand back to the same tree.
    """
    t = type(f)
    if t is Top:
        return "true"
    if t is Height:
        return f"[{f.n}]"
    if t is And:
        return f"({to_text(f.left)} & {to_text(f.right)})"
    if t is Reason:
        return f"R_{f.agent}({to_text(f.body)} || {to_text(f.cond)})"
    if t is Know:
        return f"K_{f.agent} {to_text(f.body)}"
    if t is Not:
        d = _as_diamond(f)
        if d is not None:
            return f"<K_{d[0]}> {to_text(d[1])}"
        o = _as_or(f)
        if o is not None:
            return f"({to_text(o[0])} | {to_text(o[1])})"
        return f"!{to_text(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


# -- parsing -----------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<reason>R_(?P<ragent>[A-Za-z0-9]+)\s*\()
  | (?P<know>K_(?P<kagent>[A-Za-z0-9]+))
  | (?P<dia><K_(?P<dagent>[A-Za-z0-9]+)>(?:\^(?P<dexp>\d+))?)
  | (?P<iter>r\^(?P<iexp>\d+)\s*\()
  | (?P<atom>\[\s*(?P<num>\d+)\s*\])
  | (?P<kw>true|false)(?![A-Za-z0-9_])
  | (?P<op>\|\||->|[()!&|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int
    agent: str | None = None
    num: int | None = None


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            line, col = _line_col(text, pos)
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "ws":
            pass
        elif m.group("reason"):
            toks.append(_Tok("reason", m.group(0), pos, agent=m.group("ragent")))
        elif m.group("know"):
            toks.append(_Tok("know", m.group(0), pos, agent=m.group("kagent")))
        elif m.group("dia"):
            exp = m.group("dexp")
            toks.append(
                _Tok("dia", m.group(0), pos, agent=m.group("dagent"),
                     num=None if exp is None else int(exp))
            )
        elif m.group("iter"):
            toks.append(_Tok("iter", m.group(0), pos, num=int(m.group("iexp"))))
        elif m.group("atom"):
            toks.append(_Tok("atom", m.group(0), pos, num=int(m.group("num"))))
        elif m.group("kw"):
            toks.append(_Tok(m.group("kw"), m.group(0), pos))
        else:
            toks.append(_Tok(m.group("op"), m.group(0), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", len(text)))
    return toks


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


class _Parser:
    def __init__(self, text: str, agents: Sequence[str] | None):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.agents = None if agents is None else list(dict.fromkeys(agents))

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, msg: str, tok: _Tok | None = None, cls=FormulaSyntaxError):
        tok = tok or self.tok
        line, col = _line_col(self.text, tok.pos)
        if issubclass(cls, FormulaSyntaxError):
            return cls(msg, line, col)
        return cls(f"line {line}, column {col}: {msg}")

    def expect(self, kind: str) -> _Tok:
        if self.tok.kind != kind:
            got = self.tok.text or "end of input"
            raise self.error(f"expected {kind!r}, got {got!r}")
        tok = self.tok
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.implication(False)
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return f

    # `barred` is set at the top level of a reason argument, where a bar
    # separates the condition instead of meaning disjunction.
    def implication(self, barred: bool) -> Formula:
        left = self.disjunction(barred)
        if self.tok.kind == "->":
            self.i += 1
            return implies(left, self.implication(barred))
        return left

    def disjunction(self, barred: bool) -> Formula:
        left = self.conjunction()
        while not barred and self.tok.kind == "|":
            self.i += 1
            left = lor(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.tok.kind == "&":
            self.i += 1
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        tok = self.tok
        k = tok.kind
        if k == "!":
            self.i += 1
            return Not(self.unary())
        if k == "(":
            self.i += 1
            f = self.implication(False)
            self.expect(")")
            return f
        if k == "atom":
            self.i += 1
            return Height(tok.num)
        if k == "true":
            self.i += 1
            return TOP
        if k == "false":
            self.i += 1
            return BOTTOM
        if k == "know":
            self.i += 1
            return Know(tok.agent, self.unary())
        if k == "dia":
            self.i += 1
            body = self.unary()
            if tok.num is None:
                return diamond(tok.agent, body)
            return expand_diamond_chain(tok.agent, tok.num, body, self.need_agents(tok, 2))
        if k == "reason":
            self.i += 1
            body, cond = self.reason_args(optional_cond=True)
            return Reason(tok.agent, body, cond)
        if k == "iter":
            self.i += 1
            body, cond = self.reason_args(optional_cond=False)
            return expand_iter_reason(tok.num, body, cond, self.need_agents(tok, None))
        if k == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")

    def reason_args(self, optional_cond: bool) -> tuple[Formula, Formula]:
        body = self.implication(True)
        if self.tok.kind in ("|", "||"):
            self.i += 1
            cond_tok = self.tok
            if cond_tok.kind == "atom":
                cond = Height(cond_tok.num)
            elif cond_tok.kind == "true":
                cond = TOP
            else:
                raise self.error(
                    "restricted condition: only atoms may appear as conditions",
                    cond_tok,
                    RestrictedConditionError,
                )
            self.i += 1
            if self.tok.kind != ")":
                raise self.error(
                    "restricted condition: only atoms may appear as conditions",
                    cond_tok,
                    RestrictedConditionError,
                )
        elif optional_cond:
            cond = TOP
        else:
            raise self.error("iterated reasons need a condition: r^n(phi || atom)")
        self.expect(")")
        return body, cond

    def need_agents(self, tok: _Tok, size: int | None) -> list[str]:
        if self.agents is None:
            raise self.error(f"{tok.text!r} needs a declared agent set", tok, AgentSetError)
        if size is not None and len(self.agents) != size:
            raise self.error(
                f"{tok.text!r} needs exactly {size} agents, model declares {len(self.agents)}",
                tok,
                FormulaSyntaxError,
            )
        return self.agents


def parse(text: str, agents: Sequence[str] | None = None) -> Formula:
    """Parse ``text`` into a core formula, expanding all derived forms.

    ``agents`` is the declared agent set; it is required by ``r^n`` (which
    conjoins over all agents) and by ``<K_i>^n`` (which alternates between
    exactly two agents).
    """
    f = _Parser(text, agents).parse()
    if agents is not None:
        check_agents(f, agents)
    return f


def check_agents(f: Formula, agents: Iterable[str]) -> None:
    unknown = agents_of(f) - set(agents)
    if unknown:
        raise AgentSetError(f"undeclared agent(s) in formula: {', '.join(sorted(unknown))}")
