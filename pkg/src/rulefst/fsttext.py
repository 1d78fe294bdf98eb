"""``FSTTEXT 1``: a line-oriented text format for machines and compiled rulesets.

A single machine::

    FSTTEXT 1 <dfsa|fst|dfst> <mode>
    SYMS
    <id>\t<name>\t<kind>
    STATES\t<n>
    ARCS
    <src>\t<dst>\t<insym|->\t<outsym outsym ...|->
    INITIAL
    <state>
    FINAL
    <state>
    END

A compiled ruleset uses header kind ``compiled`` and holds one symbol table,
an optional SCHEMA block, the MARKERS list and one ``MACHINE <label> <kind>``
section per stage, followed by a ``CHECKSUM sha256 <hex>`` trailer over all
preceding bytes.  Emission order is canonical, so re-serialization is
byte-identical.
"""

from __future__ import annotations

import hashlib

from .automata import Arc, Dfsa, Dfst, Fst
from .compiler import CompiledRuleset
from .features import UNSEEN, FeatureSchema
from .symbols import EPSILON, KINDS, SymbolTable

MAGIC = "FSTTEXT"
VERSION = "1"


class FormatError(ValueError):
    pass


class ChecksumError(FormatError):
    pass


def _esc(name: str) -> str:
    if name == "-" or name.startswith("\\"):
        return "\\" + name
    return name


def _unesc(token: str) -> str:
    return token[1:] if token.startswith("\\") else token


def _kind(m) -> str:
    if isinstance(m, Dfsa):
        return "dfsa"
    if isinstance(m, Dfst):
        return "dfst"
    if isinstance(m, Fst):
        return "fst"
    raise TypeError(f"cannot serialize {type(m).__name__}")


def _arc_lines(m, symbols: SymbolTable):
    name = lambda s: _esc(symbols.name(s))
    if isinstance(m, Dfsa):
        rows = [(q, r, a, ()) for q, row in enumerate(m.trans) for a, r in row.items()]
    elif isinstance(m, Dfst):
        rows = [(q, r, a, o) for q, row in enumerate(m.trans) for a, (r, o) in row.items()]
    else:
        rows = list(m.arcs)
    for src, dst, a, out in sorted(rows):
        ins = "-" if a == EPSILON else name(a)
        outs = " ".join(name(o) for o in out) if out else "-"
        yield f"{src}\t{dst}\t{ins}\t{outs}"


def _machine_body(m, symbols) -> list:
    lines = [f"STATES\t{m.num_states}", "ARCS"]
    lines.extend(_arc_lines(m, symbols))
    initials = [m.initial] if isinstance(m, (Dfsa, Dfst)) else sorted(m.initials)
    lines.append("INITIAL")
    lines.extend(str(q) for q in initials)
    lines.append("FINAL")
    lines.extend(str(q) for q in sorted(m.finals))
    lines.append("END")
    return lines


def _syms_block(symbols: SymbolTable) -> list:
    return ["SYMS"] + [f"{i}\t{_esc(name)}\t{kind}" for i, name, kind in symbols]


def dump_machine(m, symbols: SymbolTable, mode: str = "none") -> str:
    lines = [f"{MAGIC} {VERSION} {_kind(m)} {mode}"]
    lines.extend(_syms_block(symbols))
    lines.extend(_machine_body(m, symbols))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------------
# Reading
# ----------------------------------------------------------------------------

class _Lines:
    def __init__(self, text: str):
        self.lines = text.split("\n")
        if self.lines and self.lines[-1] == "":
            self.lines.pop()
        self.i = 0

    def peek(self):
        return self.lines[self.i] if self.i < len(self.lines) else None

    def next(self, what="line"):
        line = self.peek()
        if line is None:
            raise FormatError(f"unexpected end of input, expected {what}")
        self.i += 1
        return line

    def expect(self, word):
        line = self.next(word)
        if line != word:
            raise FormatError(f"line {self.i}: expected {word!r}, found {line!r}")

    def fail(self, message):
        raise FormatError(f"line {self.i}: {message}")


def _header(src: _Lines):
    parts = src.next("header").split(" ")
    if len(parts) != 4 or parts[0] != MAGIC:
        src.fail("not an FSTTEXT file")
    if parts[1] != VERSION:
        raise FormatError(f"unsupported FSTTEXT version {parts[1]!r} (expected {VERSION})")
    return parts[2], parts[3]


def _read_syms(src: _Lines) -> SymbolTable:
    src.expect("SYMS")
    table = SymbolTable()
    while src.peek() and src.peek()[0].isdigit():
        fields = src.next().split("\t")
        if len(fields) != 3 or fields[2] not in KINDS:
            src.fail(f"bad symbol line {fields!r}")
        sid = table.add(_unesc(fields[1]), fields[2])
        if str(sid) != fields[0]:
            src.fail(f"symbol ids must be dense, got {fields[0]} for {fields[1]!r}")
    return table


def _read_machine(src: _Lines, kind: str, symbols: SymbolTable):
    def sym(token):
        sid = symbols.get(_unesc(token))
        if sid is None:
            src.fail(f"unknown symbol {token!r}")
        return sid

    head = src.next("STATES").split("\t")
    if len(head) != 2 or head[0] != "STATES":
        src.fail("expected STATES line")
    n = int(head[1])
    src.expect("ARCS")
    arcs = []
    while src.peek() not in ("INITIAL", None):
        fields = src.next().split("\t")
        if len(fields) != 4:
            src.fail(f"bad arc line {fields!r}")
        a = EPSILON if fields[2] == "-" else sym(fields[2])
        out = () if fields[3] == "-" else tuple(sym(t) for t in fields[3].split(" "))
        arcs.append(Arc(int(fields[0]), int(fields[1]), a, out))
    src.expect("INITIAL")
    initials = []
    while src.peek() not in ("FINAL", None):
        initials.append(int(src.next()))
    src.expect("FINAL")
    finals = []
    while src.peek() not in ("END", None):
        finals.append(int(src.next()))
    src.expect("END")
    if kind == "fst":
        return Fst(n, frozenset(initials), frozenset(finals), tuple(arcs))
    if len(initials) != 1:
        src.fail(f"{kind} needs exactly one initial state")
    rows = [{} for _ in range(n)]
    for src_q, dst, a, out in arcs:
        if a in rows[src_q]:
            src.fail(f"nondeterministic arc in {kind}")
        rows[src_q][a] = dst if kind == "dfsa" else (dst, out)
    if kind == "dfsa":
        return Dfsa(n, initials[0], tuple(rows), frozenset(finals))
    if kind == "dfst":
        return Dfst(n, initials[0], tuple(rows), frozenset(finals))
    src.fail(f"unknown machine kind {kind!r}")


def load_machine(text: str):
    """Returns ``(machine, symbols, mode)``."""
    src = _Lines(text)
    kind, mode = _header(src)
    symbols = _read_syms(src)
    return _read_machine(src, kind, symbols), symbols, mode


# ----------------------------------------------------------------------------
# Compiled rulesets
# ----------------------------------------------------------------------------

def serialize_compiled(c: CompiledRuleset) -> bytes:
    lines = [f"{MAGIC} {VERSION} compiled {c.mode}"]
    lines.extend(_syms_block(c.symbols))
    if c.schema is not None:
        lines.append("SCHEMA")
        for f in c.schema.features:
            ids = [c.schema.value_ids[f][v] for v in c.schema.values[f]]
            lines.append("\t".join([f, str(c.schema.unseen_ids[f])] + [str(i) for i in ids]))
    lines.append("MARKERS")
    lines.append(" ".join(str(m) for m in c.markers))
    for label, m in c.stages():
        lines.append(f"MACHINE {label.replace(' ', '_')} {_kind(m)}")
        lines.extend(_machine_body(m, c.symbols))
    body = ("\n".join(lines) + "\n").encode("utf-8")
    digest = hashlib.sha256(body).hexdigest()
    return body + f"CHECKSUM sha256 {digest}\n".encode("ascii")


def deserialize_compiled(data: bytes) -> CompiledRuleset:
    cut = data.rfind(b"CHECKSUM ")
    if cut < 0 or (cut > 0 and data[cut - 1:cut] != b"\n"):
        raise ChecksumError("missing checksum trailer (truncated file?)")
    body, trailer = data[:cut], data[cut:].decode("ascii", "replace").strip()
    parts = trailer.split(" ")
    if len(parts) != 3 or parts[1] != "sha256":
        raise ChecksumError("malformed checksum trailer")
    if hashlib.sha256(body).hexdigest() != parts[2]:
        raise ChecksumError("checksum mismatch")

    src = _Lines(body.decode("utf-8"))
    kind, mode = _header(src)
    if kind != "compiled":
        raise FormatError(f"expected a compiled ruleset, found {kind!r}")
    symbols = _read_syms(src)
    schema = None
    if src.peek() == "SCHEMA":
        src.next()
        features, values, value_ids, unseen = [], {}, {}, {}
        while src.peek() != "MARKERS":
            fields = src.next("schema line").split("\t")
            f = fields[0]
            features.append(f)
            unseen[f] = int(fields[1])
            ids = [int(x) for x in fields[2:]]
            prefix = f + "="
            names = [symbols.name(i) for i in ids]
            if not all(n.startswith(prefix) for n in names) or symbols.name(unseen[f]) != prefix + UNSEEN:
                src.fail(f"schema symbols do not belong to feature {f!r}")
            values[f] = tuple(n[len(prefix):] for n in names)
            value_ids[f] = dict(zip(values[f], ids))
        schema = FeatureSchema(tuple(features), values, value_ids, unseen)
    src.expect("MARKERS")
    marker_line = src.next("marker ids")
    markers = tuple(int(x) for x in marker_line.split()) if marker_line else ()

    machines = {}
    while src.peek() is not None:
        head = src.next().split(" ")
        if len(head) != 3 or head[0] != "MACHINE":
            src.fail("expected MACHINE section")
        machines[head[1]] = _read_machine(src, head[2], symbols)
    n = len(markers)
    try:
        pre = tuple(machines.pop(f"pre_mark_{i}") for i in range(1, n + 1))
        check = tuple(machines.pop(f"check_left_cxt_{i}") for i in range(1, n + 1))
        rewrite = machines.pop("rewrite")
    except KeyError as e:
        raise FormatError(f"missing machine section {e.args[0]}") from None
    composed = machines.pop("composed", None)
    if machines:
        raise FormatError(f"unexpected machine sections {sorted(machines)}")
    return CompiledRuleset(mode, symbols, markers, pre, check, rewrite, composed, schema)
