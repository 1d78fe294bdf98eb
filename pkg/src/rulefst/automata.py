"""Acceptors, transducers and the generic algorithms over them.

Machines are immutable value objects over integer symbol ids (see
:mod:`rulefst.symbols`).  ``EPSILON`` (id 0) may appear as an input label of
an :class:`Fst` arc; output labels are tuples of ids and the empty tuple is
the epsilon output.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from .symbols import EPSILON


class MachineError(Exception):
    pass


class NotDeterminizable(MachineError):
    pass


class ApplyError(MachineError):
    """Base class for failures while running a machine on an input."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


class InputNotAccepted(ApplyError):
    pass


class StuckState(ApplyError):
    pass


class Arc(NamedTuple):
    src: int
    dst: int
    ilabel: int
    olabels: tuple


@dataclass(frozen=True, eq=True)
class Dfsa:
    """Deterministic acceptor.  ``trans[q]`` maps symbol -> target state."""

    num_states: int
    initial: int
    trans: tuple
    finals: frozenset

    def __post_init__(self):
        if len(self.trans) != self.num_states:
            raise MachineError("transition table size does not match state count")
        for q, row in enumerate(self.trans):
            if EPSILON in row:
                raise MachineError(f"epsilon transition in deterministic acceptor at state {q}")

    @property
    def num_arcs(self) -> int:
        return sum(len(row) for row in self.trans)

    def alphabet(self) -> frozenset:
        return frozenset(a for row in self.trans for a in row)

    def run(self, seq, start=None):
        q = self.initial if start is None else start
        for a in seq:
            q = self.trans[q].get(a)
            if q is None:
                return None
        return q

    def accepts(self, seq) -> bool:
        q = self.run(seq)
        return q is not None and q in self.finals

    def to_fst(self) -> Fst:
        arcs = [Arc(q, r, a, ()) for q, row in enumerate(self.trans) for a, r in row.items()]
        return Fst(self.num_states, frozenset([self.initial]), self.finals, tuple(arcs))


@dataclass(frozen=True, eq=True)
class Fst:
    """Non-deterministic transducer with epsilon inputs and string outputs."""

    num_states: int
    initials: frozenset
    finals: frozenset
    arcs: tuple

    def __post_init__(self):
        n = self.num_states
        for arc in self.arcs:
            if not (0 <= arc.src < n and 0 <= arc.dst < n):
                raise MachineError(f"arc {arc} refers to a missing state")
            if EPSILON in arc.olabels:
                raise MachineError(f"arc {arc} has epsilon inside its output")
        for q in self.initials | self.finals:
            if not 0 <= q < n:
                raise MachineError(f"state {q} out of range")

    @cached_property
    def out_arcs(self) -> tuple:
        table = [[] for _ in range(self.num_states)]
        for arc in self.arcs:
            table[arc.src].append(arc)
        return tuple(tuple(row) for row in table)

    @property
    def num_arcs(self) -> int:
        return len(self.arcs)

    def input_alphabet(self) -> frozenset:
        return frozenset(a.ilabel for a in self.arcs if a.ilabel != EPSILON)

    def output_alphabet(self) -> frozenset:
        return frozenset(o for a in self.arcs for o in a.olabels)

    def eps_closure(self, states: Iterable[int]) -> set:
        seen = set(states)
        stack = list(seen)
        while stack:
            q = stack.pop()
            for arc in self.out_arcs[q]:
                if arc.ilabel == EPSILON and arc.dst not in seen:
                    seen.add(arc.dst)
                    stack.append(arc.dst)
        return seen

    def accepts(self, seq) -> bool:
        """Acceptor view: is ``seq`` in the input projection of the relation?"""
        current = self.eps_closure(self.initials)
        for a in seq:
            nxt = {arc.dst for q in current for arc in self.out_arcs[q] if arc.ilabel == a}
            if not nxt:
                return False
            current = self.eps_closure(nxt)
        return bool(current & self.finals)


@dataclass(frozen=True, eq=True)
class Dfst:
    """Deterministic transducer.  ``trans[q]`` maps symbol -> (target, output)."""

    num_states: int
    initial: int
    trans: tuple
    finals: frozenset

    def __post_init__(self):
        if len(self.trans) != self.num_states:
            raise MachineError("transition table size does not match state count")
        for q, row in enumerate(self.trans):
            if EPSILON in row:
                raise MachineError(f"epsilon transition in deterministic transducer at state {q}")
            for dst, out in row.values():
                if EPSILON in out:
                    raise MachineError("epsilon inside an output sequence")

    @property
    def num_arcs(self) -> int:
        return sum(len(row) for row in self.trans)

    def as_dfsa(self) -> Dfsa:
        rows = tuple({a: r for a, (r, _) in row.items()} for row in self.trans)
        return Dfsa(self.num_states, self.initial, rows, self.finals)

    def to_fst(self) -> Fst:
        arcs = [Arc(q, r, a, tuple(o)) for q, row in enumerate(self.trans) for a, (r, o) in row.items()]
        return Fst(self.num_states, frozenset([self.initial]), self.finals, tuple(arcs))


# ----------------------------------------------------------------------------
# Trimming, completion
# ----------------------------------------------------------------------------

def _renumber_dfsa(initial, trans, finals, keep):
    """BFS-renumber the states in ``keep`` from ``initial`` in symbol order."""
    order = {initial: 0}
    queue = deque([initial])
    while queue:
        q = queue.popleft()
        for a in sorted(trans[q]):
            r = trans[q][a]
            if r in keep and r not in order:
                order[r] = len(order)
                queue.append(r)
    rows = [None] * len(order)
    for q, i in order.items():
        rows[i] = {a: order[r] for a, r in sorted(trans[q].items()) if r in order}
    return Dfsa(len(order), 0, tuple(rows), frozenset(order[q] for q in finals if q in order))


def trim_dfsa(dfa: Dfsa) -> Dfsa:
    """Drop unreachable and dead states; the initial state always survives."""
    coacc = set(dfa.finals)
    preds = [[] for _ in range(dfa.num_states)]
    for q, row in enumerate(dfa.trans):
        for r in row.values():
            preds[r].append(q)
    stack = list(coacc)
    while stack:
        r = stack.pop()
        for q in preds[r]:
            if q not in coacc:
                coacc.add(q)
                stack.append(q)
    return _renumber_dfsa(dfa.initial, dfa.trans, dfa.finals, coacc)


def complete(dfa: Dfsa, alphabet: Iterable[int]) -> Dfsa:
    """Add a sink state so that every state has a transition on every symbol."""
    alphabet = sorted(set(alphabet))
    if all(len(row) == len(alphabet) and all(a in row for a in alphabet) for row in dfa.trans):
        return dfa
    sink = dfa.num_states
    rows = [dict(row) for row in dfa.trans] + [{}]
    for row in rows:
        for a in alphabet:
            row.setdefault(a, sink)
    return Dfsa(sink + 1, dfa.initial, tuple(rows), dfa.finals)


def trim(t: Fst) -> Fst:
    """Keep only states on some initial-to-final path, renumbered canonically."""
    acc = set(t.initials)
    stack = list(acc)
    while stack:
        q = stack.pop()
        for arc in t.out_arcs[q]:
            if arc.dst not in acc:
                acc.add(arc.dst)
                stack.append(arc.dst)
    preds = [[] for _ in range(t.num_states)]
    for arc in t.arcs:
        preds[arc.dst].append(arc.src)
    coacc = set(t.finals)
    stack = list(coacc)
    while stack:
        r = stack.pop()
        for q in preds[r]:
            if q not in coacc:
                coacc.add(q)
                stack.append(q)
    live = acc & coacc
    order = {}
    queue = deque(sorted(q for q in t.initials if q in live))
    for q in queue:
        order[q] = len(order)
    while queue:
        q = queue.popleft()
        for arc in sorted(t.out_arcs[q], key=lambda a: (a.ilabel, a.olabels, a.dst)):
            if arc.dst in live and arc.dst not in order:
                order[arc.dst] = len(order)
                queue.append(arc.dst)
    arcs = sorted(
        Arc(order[a.src], order[a.dst], a.ilabel, a.olabels)
        for a in t.arcs if a.src in order and a.dst in order
    )
    return Fst(
        len(order),
        frozenset(order[q] for q in t.initials if q in order),
        frozenset(order[q] for q in t.finals if q in order),
        tuple(dict.fromkeys(arcs)),
    )


# ----------------------------------------------------------------------------
# Acceptor algorithms
# ----------------------------------------------------------------------------

def determinize(nfa: Fst | Dfsa, alphabet: Iterable[int] | None = None) -> Dfsa:
    """Subset construction on the input side of ``nfa`` (outputs ignored).

    When ``alphabet`` is given, arcs on other symbols are dropped.
    """
    if isinstance(nfa, Dfsa):
        nfa = nfa.to_fst()
    allowed = None if alphabet is None else frozenset(alphabet)
    start = frozenset(nfa.eps_closure(nfa.initials))
    index = {start: 0}
    rows = [{}]
    finals = set()
    queue = deque([start])
    while queue:
        subset = queue.popleft()
        i = index[subset]
        if subset & nfa.finals:
            finals.add(i)
        moves = {}
        for q in subset:
            for arc in nfa.out_arcs[q]:
                a = arc.ilabel
                if a == EPSILON or (allowed is not None and a not in allowed):
                    continue
                moves.setdefault(a, set()).add(arc.dst)
        for a in sorted(moves):
            target = frozenset(nfa.eps_closure(moves[a]))
            j = index.get(target)
            if j is None:
                j = index[target] = len(rows)
                rows.append({})
                queue.append(target)
            rows[i][a] = j
    return trim_dfsa(Dfsa(len(rows), 0, tuple(rows), frozenset(finals)))


def minimize(dfa: Dfsa) -> Dfsa:
    """Moore partition refinement on the trimmed machine.

    Missing transitions lead to the (removed) dead state, so two states with
    different transition domains always end up in different blocks.
    """
    dfa = trim_dfsa(dfa)
    block = [1 if q in dfa.finals else 0 for q in range(dfa.num_states)]
    count = len(set(block))
    while True:
        sigs = {}
        new_block = []
        for q in range(dfa.num_states):
            sig = (block[q], tuple((a, block[r]) for a, r in sorted(dfa.trans[q].items())))
            new_block.append(sigs.setdefault(sig, len(sigs)))
        block = new_block
        if len(sigs) == count:
            break
        count = len(sigs)
    rows = [None] * count
    for q in range(dfa.num_states):
        if rows[block[q]] is None:
            rows[block[q]] = {a: block[r] for a, r in dfa.trans[q].items()}
    finals = frozenset(block[q] for q in dfa.finals)
    merged = Dfsa(count, block[dfa.initial], tuple(rows), finals)
    return _renumber_dfsa(merged.initial, merged.trans, merged.finals, set(range(count)))


def identity_of(a: Dfsa) -> Dfst:
    rows = tuple({s: (r, (s,)) for s, r in row.items()} for row in a.trans)
    return Dfst(a.num_states, a.initial, rows, a.finals)


def sigma_star(alphabet: Iterable[int]) -> Dfsa:
    return Dfsa(1, 0, ({a: 0 for a in sorted(set(alphabet))},), frozenset([0]))


# ----------------------------------------------------------------------------
# Rational operations on transducers
# ----------------------------------------------------------------------------

def _as_fst(t) -> Fst:
    return t if isinstance(t, Fst) else t.to_fst()


def reverse(t) -> Fst:
    """Reverse a machine: arcs flipped, outputs reversed, initial/final swapped."""
    t = _as_fst(t)
    arcs = tuple(Arc(a.dst, a.src, a.ilabel, tuple(reversed(a.olabels))) for a in t.arcs)
    return Fst(t.num_states, t.finals, t.initials, arcs)


def _shifted(t: Fst, offset: int):
    return [Arc(a.src + offset, a.dst + offset, a.ilabel, a.olabels) for a in t.arcs]


def concat(*machines) -> Fst:
    ts = [_as_fst(t) for t in machines]
    if not ts:
        return Fst(1, frozenset([0]), frozenset([0]), ())
    arcs = []
    offset = 0
    prev_finals = None
    initials = None
    for t in ts:
        arcs.extend(_shifted(t, offset))
        starts = [q + offset for q in t.initials]
        if prev_finals is None:
            initials = frozenset(starts)
        else:
            arcs.extend(Arc(f, s, EPSILON, ()) for f in prev_finals for s in starts)
        prev_finals = [q + offset for q in t.finals]
        offset += t.num_states
    return Fst(offset, initials, frozenset(prev_finals), tuple(arcs))


def union(*machines) -> Fst:
    ts = [_as_fst(t) for t in machines]
    arcs = []
    initials, finals = set(), set()
    offset = 0
    for t in ts:
        arcs.extend(_shifted(t, offset))
        initials.update(q + offset for q in t.initials)
        finals.update(q + offset for q in t.finals)
        offset += t.num_states
    if offset == 0:
        return Fst(1, frozenset([0]), frozenset(), ())
    return Fst(offset, frozenset(initials), frozenset(finals), tuple(arcs))


def closure(t) -> Fst:
    """Kleene star: a fresh final initial state with epsilon arcs in and out."""
    t = _as_fst(t)
    s = t.num_states
    arcs = list(t.arcs)
    arcs.extend(Arc(s, q, EPSILON, ()) for q in sorted(t.initials))
    arcs.extend(Arc(q, s, EPSILON, ()) for q in sorted(t.finals))
    return Fst(s + 1, frozenset([s]), frozenset([s]), tuple(arcs))


def _split_outputs(t: Fst):
    """Rewrite ``t`` so every arc emits at most one symbol.

    Returns ``(num_states, arcs)`` where each arc output is a symbol id or
    ``None`` for epsilon.
    """
    n = t.num_states
    arcs = []
    for a in t.arcs:
        if len(a.olabels) <= 1:
            arcs.append((a.src, a.dst, a.ilabel, a.olabels[0] if a.olabels else None))
            continue
        prev = a.src
        for k, o in enumerate(a.olabels):
            last = k == len(a.olabels) - 1
            nxt = a.dst if last else n
            if not last:
                n += 1
            arcs.append((prev, nxt, a.ilabel if k == 0 else EPSILON, o))
            prev = nxt
    return n, arcs


def compose(t1, t2) -> Fst:
    """Relational composition: feed the output of ``t1`` into ``t2``.

    Epsilon moves are serialized by a two-state filter: between two matched
    symbols, ``t1``'s output-epsilon moves all come before ``t2``'s
    input-epsilon moves, so every pair of paths is represented exactly once.
    """
    t1, t2 = _as_fst(t1), _as_fst(t2)
    n1, arcs1 = _split_outputs(t1)
    out1 = [[] for _ in range(n1)]
    for arc in arcs1:
        out1[arc[0]].append(arc)
    by_input2 = [{} for _ in range(t2.num_states)]
    eps2 = [[] for _ in range(t2.num_states)]
    for arc in t2.arcs:
        if arc.ilabel == EPSILON:
            eps2[arc.src].append(arc)
        else:
            by_input2[arc.src].setdefault(arc.ilabel, []).append(arc)

    index = {}
    queue = deque()

    def state(key):
        i = index.get(key)
        if i is None:
            i = index[key] = len(index)
            queue.append(key)
        return i

    initials = frozenset(state((p, q, 0)) for p in sorted(t1.initials) for q in sorted(t2.initials))
    arcs = []
    finals = set()
    while queue:
        key = queue.popleft()
        p, q, f = key
        src = index[key]
        if p in t1.finals and q in t2.finals:
            finals.add(src)
        for _, d1, a, o in out1[p]:
            if o is None:
                if f == 0:
                    arcs.append(Arc(src, state((d1, q, 0)), a, ()))
            else:
                for arc2 in by_input2[q].get(o, ()):
                    arcs.append(Arc(src, state((d1, arc2.dst, 0)), a, arc2.olabels))
        for arc2 in eps2[q]:
            arcs.append(Arc(src, state((p, arc2.dst, 1)), EPSILON, arc2.olabels))
    return trim(Fst(len(index), initials, frozenset(finals), tuple(arcs)))


def compose_all(machines: Sequence) -> Fst:
    result = _as_fst(machines[0])
    for t in machines[1:]:
        result = compose(result, t)
    return result


# ----------------------------------------------------------------------------
# Transducer determinization (string outputs, functional input)
# ----------------------------------------------------------------------------

def _lcp(strings):
    strings = list(strings)
    if not strings:
        return ()
    first = strings[0]
    k = 0
    while k < len(first) and all(len(s) > k and s[k] == first[k] for s in strings):
        k += 1
    return first[:k]


def determinize_transducer(t, max_states: int = 200_000) -> Dfst:
    """Turn a functional, determinizable transducer into a :class:`Dfst`.

    Subset states carry one pending output (residual) per member state; the
    longest common prefix of the residuals is emitted on each transition.
    Raises :class:`NotDeterminizable` when a state would be reached with two
    different residuals, when a final state would need a pending output, or
    when residuals grow past the twins bound.
    """
    t = trim(_as_fst(t))
    if not t.initials:
        return Dfst(1, 0, ({},), frozenset())
    useful = [q in t.finals or any(a.ilabel != EPSILON for a in t.out_arcs[q])
              for q in range(t.num_states)]
    max_out = max((len(a.olabels) for a in t.arcs), default=0)
    bound = (max_out + 1) * (t.num_states + 1)

    def eps_close(pairs):
        found = {}
        stack = list(pairs)
        while stack:
            q, w = stack.pop()
            old = found.get(q)
            if old is not None:
                if old != w:
                    raise NotDeterminizable(f"state {q} reached with outputs {old} and {w}")
                continue
            found[q] = w
            for arc in t.out_arcs[q]:
                if arc.ilabel == EPSILON:
                    stack.append((arc.dst, w + arc.olabels))
        return {q: w for q, w in found.items() if useful[q]}

    def settle(members):
        prefix = _lcp(members.values())
        k = len(prefix)
        key = frozenset((q, w[k:]) for q, w in members.items())
        for q, w in key:
            if len(w) > bound:
                raise NotDeterminizable("pending output grows without bound")
        return prefix, key

    prefix, start = settle(eps_close((q, ()) for q in t.initials))
    if prefix:
        raise NotDeterminizable("initial output is not representable")
    index = {start: 0}
    rows = [{}]
    finals = set()
    queue = deque([start])
    while queue:
        subset = queue.popleft()
        i = index[subset]
        final_res = {w for q, w in subset if q in t.finals}
        if final_res:
            if final_res != {()}:
                raise NotDeterminizable("a final state carries a pending output")
            finals.add(i)
        moves = {}
        for q, w in subset:
            for arc in t.out_arcs[q]:
                if arc.ilabel != EPSILON:
                    moves.setdefault(arc.ilabel, []).append((arc.dst, w + arc.olabels))
        for a in sorted(moves):
            out, target = settle(eps_close(moves[a]))
            j = index.get(target)
            if j is None:
                if len(rows) >= max_states:
                    raise NotDeterminizable("subset construction exceeded the state budget")
                j = index[target] = len(rows)
                rows.append({})
                queue.append(target)
            rows[i][a] = (j, out)
    return Dfst(len(rows), 0, tuple(rows), frozenset(finals))


# ----------------------------------------------------------------------------
# Application
# ----------------------------------------------------------------------------

def apply_dfst(t: Dfst, seq: Sequence[int], direction: str = "forward") -> tuple:
    """Single deterministic pass; ``reversed`` runs over the reversed input
    and returns the reversed output."""
    if direction not in ("forward", "reversed"):
        raise ValueError(f"bad direction {direction!r}")
    n = len(seq)
    backwards = direction == "reversed"
    items = reversed(seq) if backwards else seq
    q = t.initial
    out = []
    for k, a in enumerate(items):
        step = t.trans[q].get(a)
        if step is None:
            pos = n - 1 - k if backwards else k
            raise StuckState(f"no transition from state {q} on symbol {a} at position {pos}", pos)
        q, o = step
        out.extend(o)
    if q not in t.finals:
        pos = -1 if backwards else n
        raise StuckState(f"input ends in non-final state {q}", pos)
    if backwards:
        out.reverse()
    return tuple(out)


def apply_functional(t: Fst, seq: Sequence[int]) -> tuple:
    """Output of a functional transducer on ``seq``.

    Depth-first path search; (state, position) pairs known to fail are
    memoized, so the search visits each configuration at most once.
    """
    seq = tuple(seq)
    n = len(seq)
    out_arcs = t.out_arcs
    dead = set()
    furthest = 0
    for q0 in sorted(t.initials):
        if (q0, 0) in dead:
            continue
        output = []
        # frame: state, position, arc iterator, output length on entry
        stack = [(q0, 0, iter(out_arcs[q0]), 0)]
        on_path = {(q0, 0)}
        while stack:
            q, pos, it, _ = stack[-1]
            if pos == n and q in t.finals:
                return tuple(output)
            pushed = False
            for arc in it:
                if arc.ilabel == EPSILON:
                    npos = pos
                elif pos < n and arc.ilabel == seq[pos]:
                    npos = pos + 1
                else:
                    continue
                key = (arc.dst, npos)
                if key in dead or key in on_path:
                    continue
                base = len(output)
                output.extend(arc.olabels)
                on_path.add(key)
                stack.append((arc.dst, npos, iter(out_arcs[arc.dst]), base))
                furthest = max(furthest, npos)
                pushed = True
                break
            if not pushed:
                q, pos, _, base = stack.pop()
                on_path.discard((q, pos))
                dead.add((q, pos))
                del output[base:]
    raise InputNotAccepted(f"input not accepted; longest viable prefix ends at position {furthest}",
                           furthest)
