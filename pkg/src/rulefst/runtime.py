"""Applying compiled rulesets, plus a reference interpreter that uses no transducers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .automata import ApplyError, StuckState, apply_dfst, apply_functional
from .compiler import CompiledRuleset, Resolved, resolve_total
from .features import encode_items
from .pattern import pattern_match_positions
from .rules import Bundle, RuleSet


class NoMarkerAtPosition(ApplyError):
    pass


class UnknownSymbol(ApplyError):
    pass


@dataclass
class TraceRecord:
    """Intermediate strings of a staged run (2n + 1 snapshots for n rules)."""
    snapshots: list = field(default_factory=list)   # (label, tuple of symbol names)
    consumed: list = field(default_factory=list)    # rule index per rewrite step

    def format(self) -> str:
        lines = [f"{label}\t{' '.join(syms)}" for label, syms in self.snapshots]
        lines.append("consumed\t" + " ".join(str(i) for i in self.consumed))
        return "\n".join(lines)


def _to_ids(symbols, names, allowed):
    ids = []
    for pos, name in enumerate(names):
        sid = symbols.get(name)
        if sid is None or sid not in allowed:
            raise UnknownSymbol(f"unknown input symbol {name!r} at position {pos}", pos)
        ids.append(sid)
    return ids


def _rewrite(c: CompiledRuleset, marked, unit: int):
    """Run the rewrite machine, recording which marker starts each step."""
    rw = c.rewrite
    rule_of = {m: i for i, m in enumerate(c.markers, 1)}
    q = rw.initial
    out, consumed = [], []
    pos = 0
    for k, s in enumerate(marked):
        is_marker = s in rule_of
        if q == rw.initial:
            if not is_marker:
                raise NoMarkerAtPosition(f"no rule applies at position {pos // unit}", pos // unit)
            consumed.append(rule_of[s])
        step = rw.trans[q].get(s)
        if step is None:
            raise StuckState(f"rewrite stuck on {c.symbols.name(s)!r} at position {pos // unit}",
                             pos // unit)
        q, o = step
        out.extend(o)
        if not is_marker:
            pos += 1
    if q not in rw.finals:
        raise StuckState("input ended inside a rule focus", pos // unit)
    return tuple(out), consumed


def run_ids(c: CompiledRuleset, ids: Sequence[int], trace: bool = False):
    """Staged application over symbol ids; returns ``(output ids, TraceRecord | None)``."""
    unit = c.schema.width if c.schema is not None else 1
    record = TraceRecord() if trace else None
    names = c.symbols.name
    s = tuple(ids)
    for i, (pm, cl) in enumerate(zip(c.pre_mark, c.check_left), 1):
        s = apply_dfst(pm, s, "reversed")
        if trace:
            record.snapshots.append((f"pre_mark {i}", tuple(map(names, s))))
        s = apply_dfst(cl, s, "forward")
        if trace:
            record.snapshots.append((f"check_left_cxt {i}", tuple(map(names, s))))
    out, consumed = _rewrite(c, s, unit)
    if trace:
        record.snapshots.append(("rewrite", tuple(map(names, out))))
        record.consumed = consumed
    return out, record


def apply_staged(c: CompiledRuleset, symbols: Sequence[str], trace: bool = False):
    """Apply ``c`` to a sequence of input symbol names.

    Returns the output symbol names, or ``(names, TraceRecord)`` with ``trace``.
    """
    if c.mode == "item":
        raise ValueError("item-mode rulesets are applied with apply_items")
    ids = _to_ids(c.symbols, symbols, c.input_alphabet)
    out, record = run_ids(c, ids, trace)
    names = tuple(c.symbols.name(o) for o in out)
    return (names, record) if trace else names


def apply_composed(c: CompiledRuleset, symbols: Sequence[str]) -> tuple:
    if c.composed is None:
        raise ValueError("ruleset was compiled without a composed machine")
    ids = _to_ids(c.symbols, symbols, c.input_alphabet)
    return tuple(c.symbols.name(o) for o in apply_functional(c.composed, ids))


def _assign(items, bundles):
    result = []
    for item, name in zip(items, bundles):
        new = dict(item)
        new.update(Bundle.from_name(name).assignments)
        result.append(new)
    return result


def apply_items(c: CompiledRuleset, items: Sequence[Mapping[str, str]], trace: bool = False):
    """Apply an item-mode ruleset and return copies of ``items`` with the
    assigned features set (bundle ``j`` of a rule goes to item ``j`` of its focus)."""
    if c.schema is None:
        raise ValueError("not an item-mode ruleset")
    ids = encode_items(c.schema, items)
    out, record = run_ids(c, ids, trace)
    bundles = [c.symbols.name(o) for o in out]
    if len(bundles) != len(items):
        raise ApplyError(f"rewrite produced {len(bundles)} bundles for {len(items)} items")
    result = _assign(items, bundles)
    return (result, record) if trace else result


# ----------------------------------------------------------------------------
# Reference interpreter
# ----------------------------------------------------------------------------

def oracle_marks(res: Resolved, ids: Sequence[int]) -> list:
    """Surviving rule indices at each input symbol position.

    Rule ``i`` survives at ``p`` iff its focus matches ``s[p:p+L]`` with no
    surviving higher-priority marker strictly inside the span, some left
    context match ends at ``p`` and some right context match starts at ``p+L``.
    """
    n = len(ids)
    marks = [set() for _ in range(n)]
    for rule in res.rules:
        left_ends = {q for _, q in pattern_match_positions(rule.left, ids)}
        right_starts = {p for p, _ in pattern_match_positions(rule.right, ids)}
        found = []
        for p, q in pattern_match_positions(rule.focus, ids):
            if p == q or p not in left_ends or q not in right_starts:
                continue
            if any(marks[k] for k in range(p + 1, q)):
                continue
            found.append(p)
        for p in found:
            marks[p].add(rule.index)
    return marks


def oracle_run(res: Resolved, ids: Sequence[int]):
    """Returns ``(output ids, consumed rule indices)``."""
    marks = oracle_marks(res, ids)
    unit = res.unit
    out, consumed = [], []
    p = 0
    while p < len(ids):
        if not marks[p]:
            raise NoMarkerAtPosition(f"no rule applies at position {p // unit}", p // unit)
        i = min(marks[p])
        rule = res.rules[i - 1]
        out.extend(rule.output)
        consumed.append(i)
        p += rule.focus_len
    return tuple(out), consumed


def oracle_apply(ruleset: RuleSet, symbols: Sequence[str], complete_with_identity: bool = False) -> tuple:
    res = resolve_total(ruleset, complete_with_identity)
    ids = _to_ids(res.symbols, symbols, res.sigma)
    out, _ = oracle_run(res, ids)
    return tuple(res.symbols.name(o) for o in out)


def oracle_items(ruleset: RuleSet, items: Sequence[Mapping[str, str]],
                 complete_with_identity: bool = False) -> list:
    res = resolve_total(ruleset, complete_with_identity)
    out, _ = oracle_run(res, encode_items(res.schema, items))
    return _assign(items, [res.symbols.name(o) for o in out])
