"""Compilation of ordered rewrite rules into marker-based transducers.

Rule ``i`` is realized by two passes.  ``pre_mark`` (run right to left)
inserts the marker ``<i`` before every focus match followed by the right
context; ``check_left_cxt`` (run left to right) deletes each ``<i`` not
preceded by the left context.  Both passes see markers of higher-priority
rules and skip over them in contexts.  A final ``rewrite`` machine reads the
lowest marker at each position and replaces the marked focus by the rule's
output, ignoring lower-priority markers inside the focus.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace
from typing import Iterable, Sequence

from . import automata as fsa
from .automata import Arc, Dfsa, Dfst, Fst, NotDeterminizable
from .features import FeatureSchema, SchemaError, build_schema, expand_patterns
from .pattern import (Any, FocusNotFixedLength, ItemDesc, Leaf, PatternError, Regex, compile_regex,
                      fixed_length_of, map_leaves, sym, walk)
from .rules import Bundle, Rule, RuleSet
from .symbols import EPSILON, INPUT, MARKER, OUTPUT, SymbolTable

EMPTY_BUNDLE = Bundle()


class CompileError(Exception):
    pass


class NonTotalRuleset(CompileError):
    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


def marker_name(i: int) -> str:
    return f"<{i}"


# ----------------------------------------------------------------------------
# Auxiliary constructions
# ----------------------------------------------------------------------------

def _check_disjoint(beta_alphabet, markers):
    clash = set(beta_alphabet) & set(markers)
    if clash:
        raise CompileError(f"marker symbols {sorted(clash)} overlap the pattern alphabet")


def accept_ignoring(beta: Dfsa, markers: Iterable[int]) -> Dfsa:
    """Accepts ``w`` iff deleting the markers from ``w`` leaves a word of ``beta``."""
    markers = sorted(set(markers))
    _check_disjoint(beta.alphabet(), markers)
    rows = []
    for row in beta.trans:
        row = dict(row)
        for m in markers:
            row[m] = len(rows)
        rows.append(row)
    return Dfsa(beta.num_states, beta.initial, tuple(rows), beta.finals)


def accept_ignoring_nonfin(beta: Dfsa, markers: Iterable[int]) -> Fst:
    """Like :func:`accept_ignoring` but never accepts markers after the last symbol.

    Each final state ``q`` is split: ``q`` stays final and keeps only an
    epsilon arc to a non-final copy ``q'``, which carries the marker loops and
    all of ``q``'s outgoing symbol arcs.
    """
    markers = sorted(set(markers))
    _check_disjoint(beta.alphabet(), markers)
    n = beta.num_states
    copy = {q: n + k for k, q in enumerate(sorted(beta.finals))}
    arcs = []
    for q, row in enumerate(beta.trans):
        src = copy.get(q, q)
        arcs.extend(Arc(src, r, a, ()) for a, r in sorted(row.items()))
        arcs.extend(Arc(src, src, m, ()) for m in markers)
        if q in copy:
            arcs.append(Arc(q, copy[q], EPSILON, ()))
    return Fst(n + len(copy), frozenset([beta.initial]), beta.finals, tuple(arcs))


def replace(beta: Dfsa | Fst, gamma: Sequence[int]) -> Fst:
    """Maps every word of ``beta`` to ``gamma``: inputs are read silently and a
    new final state is entered on epsilon, emitting ``gamma``."""
    t = beta.to_fst() if isinstance(beta, Dfsa) else beta
    qf = t.num_states
    arcs = [Arc(a.src, a.dst, a.ilabel, ()) for a in t.arcs]
    arcs.extend(Arc(q, qf, EPSILON, tuple(gamma)) for q in sorted(t.finals))
    return Fst(qf + 1, t.initials, frozenset([qf]), tuple(arcs))


def _suffix_acceptor(beta: Dfsa, alphabet) -> Dfsa:
    """Complete minimal acceptor for ``alphabet* . beta``."""
    alphabet = frozenset(alphabet)
    loop = fsa.sigma_star(alphabet)
    return fsa.complete(fsa.minimize(fsa.determinize(fsa.concat(loop, beta), alphabet)), alphabet)


def mark_regex(beta: Dfsa, mu: int, alphabet: Iterable[int]) -> Fst:
    """Inserts ``mu`` after every prefix of the input that ends with a match of ``beta``.

    Built from the identity transducer of ``alphabet* . beta``: final and
    non-final states swap roles, and each final state ``q`` is split into
    ``q`` (whose only arc is ``epsilon:mu`` into ``q'``) and ``q'`` (which
    inherits the outgoing arcs of ``q``).
    """
    alphabet = frozenset(alphabet)
    if mu in alphabet:
        raise CompileError(f"marker {mu} is part of the alphabet")
    a = _suffix_acceptor(beta, alphabet)
    ident = fsa.identity_of(a)
    n = a.num_states
    copy = {q: n + k for k, q in enumerate(sorted(a.finals))}
    arcs = []
    for q, row in enumerate(ident.trans):
        src = copy.get(q, q)
        arcs.extend(Arc(src, r, s, o) for s, (r, o) in sorted(row.items()))
        if q in copy:
            arcs.append(Arc(q, copy[q], EPSILON, (mu,)))
    finals = frozenset(set(range(n + len(copy))) - set(a.finals))
    return Fst(n + len(copy), frozenset([a.initial]), finals, tuple(arcs))


def left_context_filter(beta: Dfsa, mu: int, alphabet: Iterable[int]) -> Dfst:
    """Deletes each ``mu`` not immediately preceded by a match of ``beta``.

    ``mu`` never changes state; it is copied at states where the prefix read
    so far ends with ``beta`` and deleted elsewhere.
    """
    alphabet = frozenset(alphabet)
    if mu in alphabet:
        raise CompileError(f"marker {mu} is part of the alphabet")
    a = _suffix_acceptor(beta, alphabet)
    rows = []
    for q, row in enumerate(a.trans):
        out = {s: (r, (s,)) for s, r in row.items()}
        out[mu] = (q, (mu,) if q in a.finals else ())
        rows.append(out)
    return Dfst(a.num_states, a.initial, tuple(rows), frozenset(range(a.num_states)))


# ----------------------------------------------------------------------------
# Rule resolution
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ResolvedRule:
    index: int
    marker: int
    left: Dfsa
    focus: Dfsa
    right: Dfsa
    output: tuple       # output symbol ids, padded per item in item mode
    focus_len: int      # in symbols
    source: Rule


@dataclass(frozen=True)
class Resolved:
    """A ruleset with every pattern compiled to an acceptor over ids."""
    mode: str
    symbols: SymbolTable
    sigma: frozenset
    schema: FeatureSchema | None
    rules: tuple
    markers: tuple

    @property
    def unit(self) -> int:
        """Symbols per input position (K in item mode, else 1)."""
        return self.schema.width if self.schema is not None else 1


def _leaf_names(r: Regex):
    for node in walk(r):
        if isinstance(node, Leaf):
            yield from node.symbols


def _input_names(ruleset: RuleSet):
    names = set(ruleset.alphabet)
    for rule in ruleset.rules:
        for r in (rule.left, rule.focus, rule.right):
            for node in walk(r):
                if isinstance(node, ItemDesc):
                    raise CompileError(f"{rule.where()}: item description in {ruleset.mode} mode")
            names.update(_leaf_names(r))
    if ruleset.mode == "char":
        long = sorted(n for n in names if len(n) != 1)
        if long:
            raise CompileError(f"char mode input symbols must be single characters: {long}")
    return sorted(names)


def resolve(ruleset: RuleSet) -> Resolved:
    symbols = SymbolTable()
    schema = None
    if ruleset.mode == "item":
        for rule in ruleset.rules:
            for r in (rule.left, rule.focus, rule.right):
                stray = list(_leaf_names(r))
                if stray:
                    raise CompileError(f"{rule.where()}: bare symbols {stray} in item mode")
        try:
            schema = build_schema(ruleset.rules, symbols)
        except SchemaError as e:
            raise CompileError(str(e)) from e
        sigma = schema.alphabet()
        symbols.add(EMPTY_BUNDLE.name, OUTPUT)
        to_ids = lambda r: expand_patterns(schema, r)
    else:
        ids = {name: symbols.add(name, INPUT) for name in _input_names(ruleset)}
        sigma = frozenset(ids.values())
        to_ids = lambda r: map_leaves(r, lambda leaf: Leaf(frozenset(ids[s] for s in leaf.symbols)))

    outputs = []
    for rule in ruleset.rules:
        if ruleset.mode == "item":
            for b in rule.rhs:
                if not isinstance(b, Bundle):
                    raise CompileError(f"{rule.where()}: item-mode right-hand side must be bundles")
            outputs.append(tuple(symbols.add(b.name, OUTPUT) for b in rule.rhs))
        else:
            outputs.append(tuple(symbols.add(str(s), OUTPUT) for s in rule.rhs))

    markers = tuple(symbols.add(marker_name(r.index), MARKER) for r in ruleset.rules)
    unit = schema.width if schema is not None else 1
    resolved = []
    for rule, out, marker in zip(ruleset.rules, outputs, markers):
        try:
            left = compile_regex(to_ids(rule.left), sigma)
            focus = compile_regex(to_ids(rule.focus), sigma)
            right = compile_regex(to_ids(rule.right), sigma)
            length = fixed_length_of(focus)
        except FocusNotFixedLength as e:
            raise FocusNotFixedLength(f"{rule.where()}: focus is not fixed-length: {e}",
                                      e.witnesses) from e
        except (PatternError, SchemaError) as e:
            raise CompileError(f"{rule.where()}: {e}") from e
        if length == 0:
            raise CompileError(f"{rule.where()}: empty focus (insertion rules are not supported)")
        if schema is not None:
            items = length // unit
            if len(out) > items:
                raise CompileError(f"{rule.where()}: {len(out)} bundles for a focus of {items} items")
            out = out + (symbols.id(EMPTY_BUNDLE.name),) * (items - len(out))
        resolved.append(ResolvedRule(rule.index, marker, left, focus, right, out, length, rule))
    return Resolved(ruleset.mode, symbols, sigma, schema, tuple(resolved), markers)


def uncovered(res: Resolved) -> list:
    """Input units not guaranteed a marker by an unconditional one-unit rule.

    Returns missing symbol names (char/token mode) or ``["<item>"]`` when
    some item encoding is not covered (item mode).
    """
    unconditional = [r for r in res.rules
                     if r.focus_len == res.unit
                     and r.left.initial in r.left.finals and r.right.initial in r.right.finals]
    if res.schema is None:
        return [res.symbols.name(s) for s in sorted(res.sigma)
                if not any(r.focus.accepts((s,)) for r in unconditional)]
    any_item = compile_regex(expand_patterns(res.schema, Any()), res.sigma)
    if not unconditional:
        return ["<item>"]
    covered = fsa.determinize(fsa.union(*[r.focus for r in unconditional]), res.sigma)
    return [] if _included(any_item, covered) else ["<item>"]


def _included(a: Dfsa, b: Dfsa) -> bool:
    """L(a) is a subset of L(b)."""
    seen = {(a.initial, b.initial)}
    stack = list(seen)
    while stack:
        p, q = stack.pop()
        if p in a.finals and (q is None or q not in b.finals):
            return False
        for s, p2 in a.trans[p].items():
            q2 = None if q is None else b.trans[q].get(s)
            if (p2, q2) not in seen:
                seen.add((p2, q2))
                stack.append((p2, q2))
    return True


def with_defaults(ruleset: RuleSet, missing) -> RuleSet:
    """Append lowest-priority identity rules for the uncovered units."""
    rules = list(ruleset.rules)
    if ruleset.mode == "item":
        rules.append(Rule(len(rules) + 1, Any(), rhs=(EMPTY_BUNDLE,)))
    else:
        for name in missing:
            rules.append(Rule(len(rules) + 1, sym(name), rhs=(name,)))
    return dc_replace(ruleset, rules=tuple(rules))


def resolve_total(ruleset: RuleSet, complete_with_identity: bool = False) -> Resolved:
    res = resolve(ruleset)
    missing = uncovered(res)
    if missing:
        if not complete_with_identity:
            raise NonTotalRuleset(
                "no unconditional default rule for " + " ".join(missing)
                + " (add default rules or complete with identity)", missing)
        res = resolve(with_defaults(ruleset, missing))
    return res


# ----------------------------------------------------------------------------
# Stage construction
# ----------------------------------------------------------------------------

def build_pre_mark(rule: ResolvedRule, markers: Sequence[int], sigma) -> Dfst:
    """Marker insertion for one rule, as a deterministic machine over the
    *reversed* input (apply it with ``direction="reversed"``)."""
    earlier = markers[:rule.index - 1]
    ext = frozenset(sigma) | frozenset(earlier)
    pattern = fsa.concat(rule.focus, accept_ignoring(rule.right, earlier))
    backwards = fsa.minimize(fsa.determinize(fsa.reverse(pattern), ext))
    try:
        return fsa.determinize_transducer(mark_regex(backwards, rule.marker, ext))
    except NotDeterminizable as e:
        raise CompileError(f"internal: pre_mark for rule {rule.index} not deterministic: {e}") from e


def build_check_left_cxt(rule: ResolvedRule, markers: Sequence[int], sigma) -> Dfst:
    earlier = markers[:rule.index - 1]
    ext = frozenset(sigma) | frozenset(earlier)
    return left_context_filter(accept_ignoring(rule.left, earlier), rule.marker, ext)


def build_rewrite(rules: Sequence[ResolvedRule], markers: Sequence[int]) -> Dfst:
    parts = []
    for rule in rules:
        later = markers[rule.index - 1:]
        head = Dfsa(2, 0, ({rule.marker: 1}, {}), frozenset([1]))
        body = fsa.concat(head, accept_ignoring_nonfin(rule.focus, later))
        parts.append(replace(body, rule.output))
    try:
        rw = fsa.determinize_transducer(fsa.closure(fsa.union(*parts)))
    except NotDeterminizable as e:
        raise CompileError(f"internal: rewrite machine is not determinizable: {e}") from e
    stray = set(rw.trans[rw.initial]) - set(markers)
    if stray:
        raise CompileError(f"internal: rewrite consumes non-markers {sorted(stray)} from its initial state")
    return rw


@dataclass(frozen=True)
class CompiledRuleset:
    mode: str
    symbols: SymbolTable
    markers: tuple          # marker id of rule i at index i-1
    pre_mark: tuple         # Dfst per rule, over reversed strings
    check_left: tuple       # Dfst per rule
    rewrite: Dfst
    composed: Fst | None = None
    schema: FeatureSchema | None = None

    @property
    def rule_count(self) -> int:
        return len(self.markers)

    @property
    def input_alphabet(self) -> frozenset:
        return frozenset(self.symbols.ids(INPUT))

    def stages(self):
        """Yield ``(label, machine)`` in application order."""
        for i, (pm, cl) in enumerate(zip(self.pre_mark, self.check_left), 1):
            yield f"pre_mark {i}", pm
            yield f"check_left_cxt {i}", cl
        yield "rewrite", self.rewrite
        if self.composed is not None:
            yield "composed", self.composed


def compose_stages(pre_mark, check_left, rewrite) -> Fst:
    """The whole pipeline as one transducer (relation equal to staged application)."""
    machines = []
    for pm, cl in zip(pre_mark, check_left):
        machines.append(fsa.compose(fsa.reverse(pm), cl))
    machines.append(rewrite)
    return fsa.compose_all(machines)


def compile_resolved(res: Resolved, compose: bool = False) -> CompiledRuleset:
    pre = tuple(build_pre_mark(r, res.markers, res.sigma) for r in res.rules)
    check = tuple(build_check_left_cxt(r, res.markers, res.sigma) for r in res.rules)
    rewrite = build_rewrite(res.rules, res.markers)
    composed = compose_stages(pre, check, rewrite) if compose else None
    return CompiledRuleset(res.mode, res.symbols, res.markers, pre, check, rewrite, composed, res.schema)


def compile_ruleset(ruleset: RuleSet, compose: bool = False,
                    complete_with_identity: bool = False) -> CompiledRuleset:
    """Compile ``ruleset`` into staged machines (and optionally one composed FST).

    Raises :class:`NonTotalRuleset` unless every input unit is covered by an
    unconditional one-unit rule, or ``complete_with_identity`` is set, in
    which case identity defaults are appended after the last rule.
    """
    return compile_resolved(resolve_total(ruleset, complete_with_identity), compose)
