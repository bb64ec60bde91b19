"""Butterfly bodies, depth-truncated butterflies and butterfly flutters.

Two representations are provided and kept in agreement by the test-suite:

* :func:`build_body` / :func:`extend_wings` build explicit :class:`Model`
  objects step by step, following the inductive construction literally.
* :class:`ImplicitButterfly` computes the same truncated butterfly on demand
  from a heap-style state index.  A flutter spans hundreds of butterflies and
  a depth-20 butterfly has millions of states, so the flutter only ever uses
  the implicit form.

State names are ``b{k}:{local}`` where ``local`` is ``w0`` (the center),
``w1``..``w4`` for the rest of the body, and a body name followed by one
``+``/``-`` per wing level for deeper states (``b300:w1-+`` has value
300 - 50 - 50 + 50 for m = 50).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Sequence

import numpy as np

from .formula import Formula, Height, Top, height_above
from .model import MissingSelectionTarget, Model, ModelError

__all__ = [
    "ButterflyParams",
    "MissingButterfly",
    "build_body",
    "extend_wings",
    "build_butterfly",
    "ImplicitButterfly",
    "Flutter",
    "FlutterSelection",
    "build_flutter",
    "save_flutter",
    "load_flutter",
    "MANIFEST",
    "SELECTION_RULE",
    "recurrence_count",
]

DEFAULT_AGENTS = ("R", "C")
MANIFEST = "flutter.json"
SELECTION_RULE = "butterfly-center"

# flutter state codes pack the center k above the in-butterfly index
_SHIFT = 40
_MASK = (1 << _SHIFT) - 1
MAX_DEPTH = _SHIFT - 4


class MissingButterfly(MissingSelectionTarget):
    """Selection needs the butterfly centered on ``k``, which the flutter lacks."""

    def __init__(self, k: int, reason: str = ""):
        self.k = k
        super().__init__(f"MissingButterfly({k})" + (f": {reason}" if reason else ""))


@dataclass(frozen=True)
class ButterflyParams:
    center_k: int
    margin_m: int
    depth_d: int = 0

    def __post_init__(self) -> None:
        if self.margin_m < 1:
            raise ModelError(f"margin must be at least 1, got {self.margin_m}")
        if self.center_k - self.margin_m <= 0:
            raise ModelError(
                f"butterfly needs k - m > 0, got k={self.center_k}, m={self.margin_m}"
            )
        if not 0 <= self.depth_d <= MAX_DEPTH:
            raise ModelError(f"depth must be in [0, {MAX_DEPTH}], got {self.depth_d}")


def _other(agents: Sequence[str], a: str) -> str:
    return agents[1] if agents[0] == a else agents[0]


def _local_selection(states: Iterable[str], heights: dict, k: int, center: str) -> dict:
    sel: dict = {(Height(k), "*"): center}
    for s in states:
        if heights[s] == k:
            sel[(Top(), s)] = center
    return sel


def build_body(
    params: ButterflyParams | None = None,
    *,
    k: int | None = None,
    m: int | None = None,
    agents: Sequence[str] = DEFAULT_AGENTS,
) -> Model:
    """The five-state body centered on ``k`` with margin ``m``.

    The four non-center states are leaves, so they are flagged frontier for
    the agent whose wing would grow from them.
    """
    if params is None:
        params = ButterflyParams(k, m)
    k, m = params.center_k, params.margin_m
    rho, chi = agents
    p = f"b{k}:"
    w = [p + f"w{i}" for i in range(5)]
    heights = {w[0]: k, w[1]: k - m, w[3]: k - m, w[2]: k + m, w[4]: k + m}
    valuation: dict = {}
    for s, n in heights.items():
        valuation.setdefault(n, set()).add(s)
    orders = {rho: [(w[1], w[0]), (w[2], w[0])], chi: [(w[3], w[0]), (w[4], w[0])]}
    frontier = {w[1]: (chi,), w[2]: (chi,), w[3]: (rho,), w[4]: (rho,)}
    return Model(
        w, agents, orders, valuation, frontier,
        _local_selection(w, heights, k, w[0]),
        meta={"k": k, "m": m, "depth": 0},
    )


def extend_wings(model: Model, levels: int = 1, margin: int | None = None) -> Model:
    """Add ``levels`` rounds of wings to a (possibly extended) butterfly.

    Each round gives every terminating minimal state ``w`` (connected only
    through agent ``i``) a ``+m`` child and, unless its value minus ``m`` is
    negative, a ``-m`` child, both strictly below ``w`` for the other agent.
    """
    if levels < 0:
        raise ValueError("levels must be non-negative")
    if len(model.agents) != 2:
        raise ModelError("wings alternate between exactly two agents")
    m = margin if margin is not None else model.meta.get("m")
    if m is None:
        raise ModelError("margin unknown: pass margin= or use a model with butterfly metadata")
    agents = model.agents
    for _ in range(levels):
        states = list(model.states)
        pairs = {a: [(x, y) for x in model.states for y in model.above(a, x)] for a in agents}
        heights = {s: model.heights_at(s) for s in states}
        frontier = dict(model.frontier)
        for s in model.states:
            if any(model.less(a, t, s) for a in agents for t in model.component(a, s)):
                continue
            term = [a for a in agents if any(model.less(a, s, t) for t in model.above(a, s))]
            if len(term) != 1:
                continue
            i = term[0]
            j = _other(agents, i)
            if len(heights[s]) != 1:
                raise ModelError(f"state {s} must satisfy exactly one height atom")
            (n,) = heights[s]
            kids = [(s + "+", n + m)]
            if n - m >= 0:
                kids.append((s + "-", n - m))
            for name, val in kids:
                if name in heights:
                    raise ModelError(f"state name clash at {name}")
                states.append(name)
                heights[name] = frozenset({val})
                pairs[j].append((name, s))
                for a in agents:
                    pairs[a].append((name, name))
                frontier[name] = (i,)
            frontier.pop(s, None)
        valuation: dict = {}
        for s, hs in heights.items():
            for n in hs:
                valuation.setdefault(n, set()).add(s)
        meta = dict(model.meta)
        sel = model.selection.as_dict() if model.selection else None
        if "k" in meta:
            meta["depth"] = meta.get("depth", 0) + 1
            center = model.selection.select(Height(meta["k"]), states[0]) if sel else None
            if center is not None:
                single = {s: next(iter(h)) for s, h in heights.items() if len(h) == 1}
                sel = _local_selection(single, single, meta["k"], center)
        model = Model(states, agents, pairs, valuation, frontier, sel, closure=False, meta=meta)
    return model


def build_butterfly(params: ButterflyParams, agents: Sequence[str] = DEFAULT_AGENTS) -> Model:
    return extend_wings(build_body(params, agents=agents), params.depth_d, params.margin_m)


class ImplicitButterfly:
    """A depth-truncated butterfly computed from a heap index.

    Index 0 is the center.  Body state ``w{b}`` (b = 1..4) roots a binary
    tree stored heap-style in its own block of ``2**(d+1) - 1`` slots: the
    ``-m`` child of heap slot ``h`` is ``2h+1`` and the ``+m`` child ``2h+2``.
    Slots whose path would pass below zero do not exist.

    Agents are referred to by position: 0 plays the role whose order links
    ``w1``/``w2`` to the center, 1 the role for ``w3``/``w4``.
    """

    def __init__(self, k: int, m: int, d: int, agents: Sequence[str] = DEFAULT_AGENTS):
        ButterflyParams(k, m, d)
        self.k, self.m, self.d = k, m, d
        self.agents = tuple(agents)
        self.block = (1 << (d + 1)) - 1
        self.n_slots = 1 + 4 * self.block
        self._base_value = (None, k - m, k + m, k - m, k + m)
        self._base_link = (None, 0, 0, 1, 1)
        self._arrays = None

    # -- index arithmetic -------------------------------------------------------

    def decode(self, idx: int) -> tuple[int, int, int]:
        """Return (body index, level, path bits) with the oldest step highest."""
        if idx == 0:
            return 0, -1, 0
        b, h = divmod(idx - 1, self.block)
        level = (h + 1).bit_length() - 1
        return b + 1, level, h - ((1 << level) - 1)

    def encode(self, b: int, level: int, bits: int) -> int:
        if b == 0:
            return 0
        return 1 + (b - 1) * self.block + (1 << level) - 1 + bits

    def value(self, idx: int) -> int:
        if idx == 0:
            return self.k
        b, level, bits = self.decode(idx)
        return self._base_value[b] + self.m * (2 * bits.bit_count() - level)

    def level(self, idx: int) -> int:
        return -1 if idx == 0 else (((idx - 1) % self.block) + 1).bit_length() - 1

    def exists(self, idx: int) -> bool:
        if not 0 <= idx < self.n_slots:
            return False
        if idx == 0:
            return True
        b, level, bits = self.decode(idx)
        v = self._base_value[b]
        for t in range(level - 1, -1, -1):
            v += self.m if (bits >> t) & 1 else -self.m
            if v < 0:
                return False
        return True

    def link(self, idx: int) -> int:
        """Agent position connecting ``idx`` to its parent."""
        b, level, _ = self.decode(idx)
        return self._base_link[b] ^ (level & 1)

    def parent(self, idx: int) -> int:
        b, level, bits = self.decode(idx)
        if level == 0:
            return 0
        return self.encode(b, level - 1, bits >> 1)

    def children(self, idx: int) -> tuple[int, ...]:
        if idx == 0:
            return ()
        if self.level(idx) >= self.d:
            return ()
        h = (idx - 1) % self.block
        base = idx - h
        plus = base + 2 * h + 2
        if self.value(idx) - self.m >= 0:
            return (base + 2 * h + 1, plus)
        return (plus,)

    def is_frontier(self, idx: int) -> bool:
        return idx != 0 and self.level(idx) == self.d

    # -- epistemic structure ----------------------------------------------------

    def component(self, a: int, idx: int) -> tuple[int, ...]:
        if idx == 0:
            return (0, 1, 1 + self.block) if a == 0 else (0, 1 + 2 * self.block, 1 + 3 * self.block)
        if a == self.link(idx):
            p = self.parent(idx)
            if p == 0:
                return self.component(a, 0)
            return (p,) + self.children(p)
        return (idx,) + self.children(idx)

    def component_complete(self, a: int, idx: int) -> bool:
        if idx == 0 or a == self.link(idx):
            return True
        return self.level(idx) < self.d

    def less(self, a: int, x: int, y: int) -> bool:
        return x != 0 and self.link(x) == a and self.parent(x) == y

    def states(self) -> Iterator[int]:
        yield 0
        for b in range(1, 5):
            stack = [self.encode(b, 0, 0)]
            while stack:
                x = stack.pop()
                yield x
                stack.extend(reversed(self.children(x)))

    def count(self) -> int:
        return sum(1 for _ in self.states())

    def arrays(self) -> "HeapArrays":
        """Per-slot value/level/link/existence tables, shape ``(4, block)``."""
        if self._arrays is None:
            self._arrays = HeapArrays.build(self)
        return self._arrays

    # -- names ------------------------------------------------------------------

    def name(self, idx: int) -> str:
        b, level, bits = self.decode(idx)
        if b == 0:
            return "w0"
        path = "".join("+" if (bits >> t) & 1 else "-" for t in range(level - 1, -1, -1))
        return f"w{b}{path}"

    def index(self, name: str) -> int:
        if len(name) < 2 or name[0] != "w" or name[1] not in "01234":
            raise KeyError(name)
        b = int(name[1])
        path = name[2:]
        if b == 0:
            if path:
                raise KeyError(name)
            return 0
        if len(path) > self.d or set(path) - set("+-"):
            raise KeyError(name)
        bits = 0
        for ch in path:
            bits = (bits << 1) | (ch == "+")
        idx = self.encode(b, len(path), bits)
        if not self.exists(idx):
            raise KeyError(name)
        return idx

    def to_model(self) -> Model:
        """Materialize as an explicit :class:`Model` with ``b{k}:`` names."""
        p = f"b{self.k}:"
        order = list(self.states())
        order.sort(key=lambda i: (self.level(i), i))
        names = {i: p + self.name(i) for i in order}
        pairs: dict = {a: [] for a in self.agents}
        valuation: dict = {}
        frontier = {}
        heights = {}
        for i in order:
            n = self.value(i)
            heights[names[i]] = n
            valuation.setdefault(n, set()).add(names[i])
            if i:
                pairs[self.agents[self.link(i)]].append((names[i], names[self.parent(i)]))
                if self.is_frontier(i):
                    frontier[names[i]] = (self.agents[1 - self.link(i)],)
        return Model(
            [names[i] for i in order], self.agents, pairs, valuation, frontier,
            _local_selection(heights, heights, self.k, names[0]),
            meta={"k": self.k, "m": self.m, "depth": self.d},
        )


@dataclass
class HeapArrays:
    """Dense per-slot tables of one :class:`ImplicitButterfly` (wings only;
    row ``b - 1`` holds the tree rooted at ``w{b}``)."""

    value: np.ndarray
    level: np.ndarray
    link: np.ndarray
    exists: np.ndarray
    internal: int  # slots [0, internal) have children slots

    @classmethod
    def build(cls, bf: "ImplicitButterfly") -> "HeapArrays":
        h = np.arange(bf.block, dtype=np.int64)
        level = np.frexp((h + 1).astype(np.float64))[1].astype(np.int64) - 1
        bits = h - ((np.int64(1) << level) - 1)
        steps = 2 * np.bitwise_count(bits).astype(np.int64) - level
        base = np.array(bf._base_value[1:], dtype=np.int64)[:, None]
        value = base + bf.m * steps[None, :]
        link = (np.array(bf._base_link[1:], dtype=np.int8)[:, None] ^ (level & 1).astype(np.int8)[None, :])
        exists = np.zeros((4, bf.block), dtype=bool)
        exists[:, 0] = value[:, 0] >= 0
        for lvl in range(1, bf.d + 1):
            lo, hi = (1 << lvl) - 1, (1 << (lvl + 1)) - 1
            par = (np.arange(lo, hi) - 1) // 2
            exists[:, lo:hi] = exists[:, par] & (value[:, lo:hi] >= 0)
        return cls(value, level, link, exists, (bf.block - 1) // 2)


class Flutter:
    """A finite butterfly flutter with the center-anchored selection rule.

    Holds one truncated butterfly per center ``k`` in ``[k_lo, k_hi]`` with
    ``k > m``; butterflies are built lazily.  States are integer codes (center
    in the high bits, heap index below) labelled ``b{k}:{local}``.
    """

    def __init__(
        self, k_lo: int, k_hi: int, margin: int, depth: int,
        agents: Sequence[str] = DEFAULT_AGENTS,
    ):
        if k_lo > k_hi:
            raise ModelError(f"empty flutter range [{k_lo}, {k_hi}]")
        if margin < 1:
            raise ModelError("margin must be at least 1")
        if not 0 <= depth <= MAX_DEPTH:
            raise ModelError(f"depth must be in [0, {MAX_DEPTH}]")
        if len(agents) != 2 or agents[0] == agents[1]:
            raise ModelError("a flutter has exactly two distinct agents")
        self.k_lo, self.k_hi, self.m, self.d = k_lo, k_hi, margin, depth
        self.agents = tuple(agents)
        self._agent_pos = {a: i for i, a in enumerate(self.agents)}
        self._bf: dict[int, ImplicitButterfly] = {}
        self._heights: dict[int, frozenset] = {}
        self.selection = FlutterSelection(self)

    @property
    def centers(self) -> range:
        return range(max(self.k_lo, self.m + 1), self.k_hi + 1)

    @property
    def max_height(self) -> int:
        return self.k_hi + (self.d + 1) * self.m

    def has_butterfly(self, k: int) -> bool:
        return self.k_lo <= k <= self.k_hi and k > self.m

    def butterfly(self, k: int) -> ImplicitButterfly:
        bf = self._bf.get(k)
        if bf is None:
            if not self.has_butterfly(k):
                why = (
                    f"outside range [{self.k_lo}, {self.k_hi}]"
                    if not self.k_lo <= k <= self.k_hi
                    else f"k <= m = {self.m}"
                )
                raise MissingButterfly(k, why)
            bf = self._bf[k] = ImplicitButterfly(k, self.m, self.d, self.agents)
        return bf

    def center(self, k: int) -> int:
        self.butterfly(k)
        return k << _SHIFT

    def code(self, k: int, idx: int) -> int:
        return (k << _SHIFT) | idx

    def split(self, w: int) -> tuple[ImplicitButterfly, int]:
        return self.butterfly(w >> _SHIFT), w & _MASK

    def butterfly_states(self, k: int) -> list[int]:
        base = k << _SHIFT
        return [base | i for i in self.butterfly(k).states()]

    def heights_limit_formula(self, threshold: int) -> Formula:
        """``[>threshold]`` as the disjunction of every height the flutter can hold."""
        return height_above(threshold, self.max_height)

    # -- structure protocol -------------------------------------------------------

    def _pos(self, agent: str) -> int:
        try:
            return self._agent_pos[agent]
        except KeyError:
            raise ModelError(f"undeclared agent {agent!r}") from None

    def value(self, w: int) -> int:
        bf, i = self.split(w)
        return bf.value(i)

    def level(self, w: int) -> int:
        bf, i = self.split(w)
        return bf.level(i)

    def component(self, agent: str, w: int) -> tuple[int, ...]:
        bf, i = self.split(w)
        base = w & ~_MASK
        return tuple(base | j for j in bf.component(self._pos(agent), i))

    def component_complete(self, agent: str, w: int) -> bool:
        bf, i = self.split(w)
        return bf.component_complete(self._pos(agent), i)

    def less(self, agent: str, x: int, y: int) -> bool:
        if x >> _SHIFT != y >> _SHIFT:
            return False
        bf, i = self.split(x)
        return bf.less(self._pos(agent), i, y & _MASK)

    def leq(self, agent: str, x: int, y: int) -> bool:
        return x == y or self.less(agent, x, y)

    def max_plausible(self, agent: str, xs: Iterable[int]) -> tuple[int, ...]:
        xs = list(dict.fromkeys(xs))
        return tuple(x for x in xs if not any(self.less(agent, x, y) for y in xs))

    def holds(self, atom: Formula, w: int) -> bool:
        if isinstance(atom, Top):
            return True
        return self.value(w) == atom.n

    def heights_at(self, w: int) -> frozenset:
        v = self.value(w)
        hs = self._heights.get(v)
        if hs is None:
            hs = self._heights[v] = frozenset((v,))
        return hs

    def is_frontier(self, w: int) -> bool:
        bf, i = self.split(w)
        return bf.is_frontier(i)

    def sort_key(self, w: int) -> int:
        return w

    def label(self, w: int) -> str:
        bf, i = self.split(w)
        return f"b{bf.k}:{bf.name(i)}"

    def resolve(self, label: str) -> int:
        from .model import UnknownStateError

        head, sep, local = label.partition(":")
        if not sep or not head.startswith("b") or not head[1:].isdigit():
            raise UnknownStateError(f"flutter state labels look like b300:w0, got {label!r}")
        k = int(head[1:])
        try:
            bf = self.butterfly(k)
            return self.code(k, bf.index(local))
        except (KeyError, MissingButterfly):
            raise UnknownStateError(f"unknown state {label!r}") from None

    def __contains__(self, w) -> bool:
        if not isinstance(w, int) or w < 0:
            return False
        k = w >> _SHIFT
        return self.has_butterfly(k) and self.butterfly(k).exists(w & _MASK)

    def __repr__(self) -> str:
        return f"Flutter(k=[{self.k_lo}, {self.k_hi}], m={self.m}, depth={self.d})"


class FlutterSelection:
    """``f([k], w)`` is the center of butterfly ``k``; ``f(true, w)`` the
    center of the butterfly whose center value equals ``w``'s height."""

    name = SELECTION_RULE

    def __init__(self, flutter: Flutter):
        self.flutter = flutter

    def select(self, atom: Formula, w: int) -> int:
        if isinstance(atom, Top):
            return self.flutter.center(self.flutter.value(w))
        return self.flutter.center(atom.n)


def build_flutter(
    k_lo: int, k_hi: int, margin: int, depth: int, agents: Sequence[str] = DEFAULT_AGENTS
) -> Flutter:
    return Flutter(k_lo, k_hi, margin, depth, agents)


def save_flutter(flutter: Flutter, directory: str, write_models: bool = True) -> str:
    """Write the manifest (and, by default, one model file per butterfly)."""
    from .model import save_model

    os.makedirs(directory, exist_ok=True)
    files = {}
    if write_models:
        for k in flutter.centers:
            fname = f"b{k}.model"
            with open(os.path.join(directory, fname), "w") as fh:
                fh.write(save_model(flutter.butterfly(k).to_model()))
            files[str(k)] = fname
    manifest = {
        "k_lo": flutter.k_lo,
        "k_hi": flutter.k_hi,
        "margin": flutter.m,
        "depth": flutter.d,
        "agents": list(flutter.agents),
        "selection": SELECTION_RULE,
        "butterflies": files,
    }
    path = os.path.join(directory, MANIFEST)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return path


def load_flutter(directory: str) -> Flutter:
    path = directory
    if os.path.isdir(directory):
        path = os.path.join(directory, MANIFEST)
    with open(path) as fh:
        manifest = json.load(fh)
    if manifest.get("selection") != SELECTION_RULE:
        raise ModelError(f"unsupported selection rule {manifest.get('selection')!r}")
    return Flutter(
        manifest["k_lo"], manifest["k_hi"], manifest["margin"], manifest["depth"],
        tuple(manifest.get("agents", DEFAULT_AGENTS)),
    )


@lru_cache(maxsize=None)
def recurrence_count(depth: int) -> int:
    """State count of a butterfly of the given depth with no boundary cut."""
    return 5 + 8 * (2**depth - 1)
