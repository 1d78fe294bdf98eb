"""Regular expressions over symbol classes and their compilation to acceptors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Union as _U

from .automata import Arc, Dfsa, Fst, determinize, minimize, trim_dfsa
from .symbols import EPSILON


class PatternError(ValueError):
    pass


class FocusNotFixedLength(PatternError):
    def __init__(self, message, witnesses=()):
        super().__init__(message)
        self.witnesses = tuple(witnesses)


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Leaf:
    """A symbol class; matches any one member of ``symbols``."""
    symbols: frozenset


@dataclass(frozen=True)
class Any:
    """Wildcard: one symbol of the declared alphabet."""


@dataclass(frozen=True)
class Concat:
    children: tuple


@dataclass(frozen=True)
class Union:
    children: tuple


@dataclass(frozen=True)
class Star:
    child: object


@dataclass(frozen=True)
class Plus:
    child: object


@dataclass(frozen=True)
class Opt:
    child: object


@dataclass(frozen=True)
class ItemDesc:
    """Item description ``[f=v1|v2 g=w]``: one value set per named feature.

    Only meaningful before expansion by :func:`rulefst.features.expand_item_description`.
    """
    constraints: tuple  # sorted ((feature, frozenset(values)), ...)

    @classmethod
    def of(cls, mapping):
        return cls(tuple(sorted((f, frozenset(v)) for f, v in mapping.items())))

    def as_dict(self):
        return {f: set(v) for f, v in self.constraints}


Regex = _U[Epsilon, Leaf, Any, Concat, Union, Star, Plus, Opt, ItemDesc]


def sym(*symbols) -> Leaf:
    return Leaf(frozenset(symbols))


def seq(*symbols) -> Regex:
    """Concatenation of single-symbol leaves (convenience for tests and callers)."""
    if not symbols:
        return Epsilon()
    return Concat(tuple(Leaf(frozenset([s])) for s in symbols))


def map_leaves(r: Regex, leaf: Callable, item: Callable | None = None, any_: Callable | None = None) -> Regex:
    """Rebuild ``r`` with leaves, item descriptions and wildcards transformed."""
    if isinstance(r, Leaf):
        return leaf(r)
    if isinstance(r, ItemDesc):
        if item is None:
            return r
        return item(r)
    if isinstance(r, Any):
        return r if any_ is None else any_(r)
    if isinstance(r, Epsilon):
        return r
    if isinstance(r, (Concat, Union)):
        return type(r)(tuple(map_leaves(c, leaf, item, any_) for c in r.children))
    if isinstance(r, (Star, Plus, Opt)):
        return type(r)(map_leaves(r.child, leaf, item, any_))
    raise TypeError(f"not a regex node: {r!r}")


def walk(r: Regex):
    yield r
    if isinstance(r, (Concat, Union)):
        for c in r.children:
            yield from walk(c)
    elif isinstance(r, (Star, Plus, Opt)):
        yield from walk(r.child)


def to_nfa(r: Regex, alphabet: Iterable[int]) -> Fst:
    """Thompson construction; every node gets its own entry and exit state."""
    alphabet = frozenset(alphabet)
    arcs = []
    count = [0]

    def new():
        count[0] += 1
        return count[0] - 1

    def eps(a, b):
        arcs.append(Arc(a, b, EPSILON, ()))

    def build(node):
        s, e = new(), new()
        if isinstance(node, Epsilon):
            eps(s, e)
        elif isinstance(node, (Leaf, Any)):
            symbols = alphabet if isinstance(node, Any) else node.symbols
            if not symbols:
                raise PatternError(f"empty symbol class in {node!r}")
            stray = set(symbols) - alphabet
            if stray:
                raise PatternError(f"leaf {node!r} uses symbols {sorted(stray)} outside the alphabet")
            for a in sorted(symbols):
                arcs.append(Arc(s, e, a, ()))
        elif isinstance(node, Concat):
            prev = s
            for child in node.children:
                cs, ce = build(child)
                eps(prev, cs)
                prev = ce
            eps(prev, e)
        elif isinstance(node, Union):
            if not node.children:
                raise PatternError("empty alternation")
            for child in node.children:
                cs, ce = build(child)
                eps(s, cs)
                eps(ce, e)
        elif isinstance(node, (Star, Plus, Opt)):
            cs, ce = build(node.child)
            eps(s, cs)
            eps(ce, e)
            if not isinstance(node, Plus):
                eps(s, e)
            if not isinstance(node, Opt):
                eps(ce, cs)
        elif isinstance(node, ItemDesc):
            raise PatternError(f"item description {node!r} must be expanded against a schema first")
        else:
            raise TypeError(f"not a regex node: {node!r}")
        return s, e

    start, end = build(r)
    return Fst(count[0], frozenset([start]), frozenset([end]), tuple(arcs))


def compile_regex(r: Regex, alphabet: Iterable[int]) -> Dfsa:
    """Minimal deterministic acceptor for ``r`` over ``alphabet``."""
    alphabet = frozenset(alphabet)
    return minimize(determinize(to_nfa(r, alphabet), alphabet))


def fixed_length_of(a: Dfsa) -> int:
    """Length shared by every word of ``L(a)``.

    Raises :class:`FocusNotFixedLength` with two witness lengths when words of
    different lengths are accepted, or with no witnesses for the empty
    language.
    """
    a = trim_dfsa(a)
    if not a.finals:
        raise FocusNotFixedLength("pattern matches nothing")
    # level-by-level reachability; trimmed, so any cycle shows up as a second
    # accepted length within 2n steps
    lengths = []
    frontier = {a.initial}
    for k in range(2 * a.num_states + 1):
        if frontier & a.finals:
            lengths.append(k)
            if len(lengths) == 2:
                raise FocusNotFixedLength(
                    f"pattern accepts words of lengths {lengths[0]} and {lengths[1]}", lengths)
        frontier = {r for q in frontier for r in a.trans[q].values()}
        if not frontier:
            break
    return lengths[0]


def pattern_match_positions(a: Dfsa, s) -> set:
    """All ``(start, end)`` with ``s[start:end]`` in ``L(a)``."""
    found = set()
    n = len(s)
    for p in range(n + 1):
        q = a.initial
        if q in a.finals:
            found.add((p, p))
        for k in range(p, n):
            q = a.trans[q].get(s[k])
            if q is None:
                break
            if q in a.finals:
                found.add((p, k + 1))
    return found
