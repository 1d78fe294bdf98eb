"""Rule file grammar.

::

    file      := (directive | rule)*
    directive := "%mode" ("char"|"token"|"item") ";"  |  "%alphabet" symbol* ";"
    rule      := [regex] "/" regex "/" [regex] "->" rhs ";"
    regex     := concat ("|" concat)*
    concat    := (atom ("*"|"+"|"?")*)*
    atom      := symbol | "." | "(" regex ")" | "[" (feature "=" value ("|" value)*)* "]"
    rhs       := symbol*                          (char / token mode)
               | ("[" (feature "=" value)* "]")*  (item mode)

Symbols are whitespace-delimited; ``#`` starts a comment running to the end
of the line.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .pattern import Any, Concat, Epsilon, ItemDesc, Leaf, Opt, Plus, Star, Union
from .rules import MODES, Bundle, Rule, RuleSet

SPECIAL = set("/;()|*+?[]=.")
FORBIDDEN = set("<>%#")


class RuleSyntaxError(ValueError):
    def __init__(self, message, line, col):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col
        self.reason = message


@dataclass(frozen=True)
class Token:
    kind: str   # "sym", "dir", "->", or the special character itself; "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if text.startswith("->", i):
            tokens.append(Token("->", "->", line, col))
            i, col = i + 2, col + 2
            continue
        if c in SPECIAL:
            tokens.append(Token(c, c, line, col))
            i, col = i + 1, col + 1
            continue
        start, start_col = i, col
        kind = "sym"
        if c == "%":
            kind = "dir"
            i, col = i + 1, col + 1
        elif c in FORBIDDEN:
            raise RuleSyntaxError(f"unexpected character {c!r}", line, col)
        while i < n:
            c = text[i]
            if c.isspace() or c in SPECIAL or c == "#" or text.startswith("->", i):
                break
            if c in FORBIDDEN:
                raise RuleSyntaxError(f"unexpected character {c!r}", line, col)
            i, col = i + 1, col + 1
        word = text[start:i]
        if kind == "dir" and len(word) == 1:
            raise RuleSyntaxError("empty directive name", line, start_col)
        tokens.append(Token(kind, word, line, start_col))
    tokens.append(Token("eof", "", line, col))
    return tokens


def _concat(parts):
    flat = []
    for p in parts:
        flat.extend(p.children if isinstance(p, Concat) else [p])
    if not flat:
        return Epsilon()
    return flat[0] if len(flat) == 1 else Concat(tuple(flat))


def _union(parts):
    flat = []
    for p in parts:
        flat.extend(p.children if isinstance(p, Union) else [p])
    return flat[0] if len(flat) == 1 else Union(tuple(flat))


class _Parser:
    def __init__(self, tokens, mode):
        self.toks = tokens
        self.i = 0
        self.mode = mode

    @property
    def tok(self):
        return self.toks[self.i]

    def take(self, kind=None):
        t = self.tok
        if kind is not None and t.kind != kind:
            self.fail(f"expected {kind!r}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def fail(self, message, tok=None):
        t = tok or self.tok
        raise RuleSyntaxError(message, t.line, t.col)

    def regex(self, stops):
        alts = [self.concat(stops)]
        while self.tok.kind == "|":
            self.take()
            alts.append(self.concat(stops))
        return _union(alts)

    def concat(self, stops):
        parts = []
        while self.tok.kind not in stops and self.tok.kind not in ("|", ")", "eof", ";"):
            atom = self.atom()
            while self.tok.kind in ("*", "+", "?"):
                op = self.take().kind
                atom = {"*": Star, "+": Plus, "?": Opt}[op](atom)
            parts.append(atom)
        return _concat(parts)

    def atom(self):
        t = self.tok
        if t.kind == "sym":
            if self.mode == "item":
                self.fail(f"bare symbol {t.text!r} in item mode; use [feature=value]")
            self.take()
            return Leaf(frozenset([t.text]))
        if t.kind == ".":
            self.take()
            return Any()
        if t.kind == "(":
            self.take()
            inner = self.regex(stops=())
            self.take(")")
            return inner
        if t.kind == "[":
            if self.mode != "item":
                self.fail(f"item description in {self.mode} mode")
            return self.item_desc()
        self.fail(f"unexpected {t.text or 'end of input'!r}")

    def item_desc(self):
        self.take("[")
        constraints = {}
        while self.tok.kind == "sym":
            feat = self.take()
            if feat.text in constraints:
                self.fail(f"feature {feat.text!r} constrained twice", feat)
            self.take("=")
            values = {self.take("sym").text}
            while self.tok.kind == "|":
                self.take()
                values.add(self.take("sym").text)
            constraints[feat.text] = values
        self.take("]")
        return ItemDesc.of(constraints)

    def bundle(self):
        self.take("[")
        pairs = {}
        while self.tok.kind == "sym":
            feat = self.take()
            if feat.text in pairs:
                self.fail(f"feature {feat.text!r} assigned twice", feat)
            self.take("=")
            pairs[feat.text] = self.take("sym").text
            if self.tok.kind == "|":
                self.fail("a right-hand side assigns a single value per feature")
        self.take("]")
        return Bundle.of(pairs)

    def rhs(self):
        out = []
        while self.tok.kind != ";":
            if self.mode == "item":
                if self.tok.kind != "[":
                    self.fail("item-mode right-hand side must be [feature=value ...] bundles")
                out.append(self.bundle())
            else:
                if self.tok.kind != "sym":
                    self.fail(f"unexpected {self.tok.text or 'end of input'!r} in right-hand side")
                out.append(self.take().text)
        return tuple(out)

    def rule(self, index):
        start = self.tok
        left = self.regex(stops=("/",))
        self.take("/")
        focus = self.regex(stops=("/",))
        self.take("/")
        right = self.regex(stops=("->",))
        self.take("->")
        rhs = self.rhs()
        self.take(";")
        return Rule(index, focus, left, right, rhs, start.line, start.col)


def parse_rule_file(text: str, mode: str | None = None) -> RuleSet:
    """Parse rule text.  ``mode`` (e.g. from the command line) must agree
    with a ``%mode`` directive when both are present; the default is token."""
    tokens = tokenize(text)
    declared = None
    alphabet = []
    rules = []
    p = _Parser(tokens, mode or "token")
    # the mode must be known before the first rule is parsed
    while p.tok.kind != "eof":
        t = p.tok
        if t.kind == "dir":
            p.take()
            name = t.text[1:]
            if name == "mode":
                if declared is not None:
                    p.fail("duplicate mode declaration", t)
                if rules:
                    p.fail("mode declaration must precede the rules", t)
                value = p.take("sym")
                if value.text not in MODES:
                    p.fail(f"unknown mode {value.text!r}", value)
                if mode is not None and value.text != mode:
                    p.fail(f"file declares mode {value.text!r} but {mode!r} was requested", value)
                declared = p.mode = value.text
                p.take(";")
            elif name == "alphabet":
                while p.tok.kind == "sym":
                    alphabet.append(p.take().text)
                p.take(";")
            else:
                p.fail(f"unknown directive {t.text!r}", t)
        else:
            rules.append(p.rule(len(rules) + 1))
    if alphabet and p.mode == "item":
        raise RuleSyntaxError("%alphabet is not allowed in item mode", 1, 1)
    return RuleSet(p.mode, tuple(rules), tuple(dict.fromkeys(alphabet)))


# ----------------------------------------------------------------------------
# Canonical printing
# ----------------------------------------------------------------------------

def format_regex(r, top=True) -> str:
    if isinstance(r, Epsilon):
        return "" if top else "()"
    if isinstance(r, Any):
        return "."
    if isinstance(r, Leaf):
        names = sorted(map(str, r.symbols))
        return names[0] if len(names) == 1 else "(" + "|".join(names) + ")"
    if isinstance(r, ItemDesc):
        return "[" + " ".join(f"{f}=" + "|".join(sorted(vs)) for f, vs in r.constraints) + "]"
    if isinstance(r, Concat):
        return " ".join(
            f"({format_regex(c)})" if isinstance(c, Union) else format_regex(c, top=False)
            for c in r.children)
    if isinstance(r, Union):
        return "|".join(format_regex(c, top=False) if not isinstance(c, Epsilon) else ""
                        for c in r.children)
    if isinstance(r, (Star, Plus, Opt)):
        op = {Star: "*", Plus: "+", Opt: "?"}[type(r)]
        inner = r.child
        simple = isinstance(inner, (Leaf, Any, ItemDesc))
        body = format_regex(inner, top=False) if simple else f"({format_regex(inner)})"
        return body + op
    raise TypeError(f"not a regex node: {r!r}")


def format_rule(rule: Rule) -> str:
    rhs = " ".join(str(x) for x in rule.rhs)
    parts = [format_regex(rule.left), "/", format_regex(rule.focus), "/",
             format_regex(rule.right), "->", rhs]
    return " ".join(p for p in parts if p) + " ;"


def format_rule_file(ruleset: RuleSet) -> str:
    lines = [f"%mode {ruleset.mode} ;"]
    if ruleset.alphabet:
        lines.append("%alphabet " + " ".join(ruleset.alphabet) + " ;")
    lines.extend(format_rule(r) for r in ruleset.rules)
    return "\n".join(lines) + "\n"


def without_positions(ruleset: RuleSet) -> RuleSet:
    return replace(ruleset, rules=tuple(replace(r, line=0, col=0) for r in ruleset.rules))
