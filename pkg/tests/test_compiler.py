import random
from pathlib import Path

import pytest

from rulefst import automata as fsa
from rulefst.compiler import (CompileError, NonTotalRuleset, accept_ignoring, accept_ignoring_nonfin,
                              compile_ruleset, left_context_filter, mark_regex, replace)
from rulefst.pattern import Any, Epsilon, FocusNotFixedLength, Star, Union, compile_regex, seq, sym
from rulefst.rulefile import parse_rule_file
from rulefst.rules import make_ruleset
from rulefst.runtime import apply_items, apply_staged

from oracles import nfa_accepts, random_regex, strings, transduce_all

RULESETS = Path(__file__).resolve().parent.parent / "rulesets"

A, B, MU = 1, 2, 9
AB = (A, B)


def word(text):
    """'ab#' -> ids, with '#' and '<' both standing for the marker."""
    table = {"a": A, "b": B, "#": MU, "<": MU}
    return tuple(table[c] for c in text)


def strip(s):
    return tuple(x for x in s if x != MU)


# -- accept_ignoring --------------------------------------------------------

def test_accept_ignoring_examples():
    a_star = compile_regex(Star(sym(A)), AB)
    ai = accept_ignoring(a_star, [MU])
    assert ai.accepts(word("aaa###")) and ai.accepts(word("##a#aa"))
    ab = accept_ignoring(compile_regex(seq(A, B), AB), [MU])
    assert ab.accepts(word("a#b")) and not ab.accepts(word("a#a"))
    plain = accept_ignoring(a_star, [])
    for s in strings(AB, 4):
        assert plain.accepts(s) == a_star.accepts(s)


def test_accept_ignoring_nonfin_examples():
    a_star = compile_regex(Star(sym(A)), AB)
    t = accept_ignoring_nonfin(a_star, [MU])
    assert nfa_accepts(t, word("aaaa"))
    assert nfa_accepts(t, word("##a#aa"))
    assert not nfa_accepts(t, word("aaa###"))
    assert nfa_accepts(t, ())
    one = accept_ignoring_nonfin(compile_regex(sym(A), AB), [MU])
    assert nfa_accepts(one, word("#a")) and not nfa_accepts(one, word("a#"))


@pytest.mark.parametrize("seed", range(80))
def test_accept_ignoring_strip_semantics(seed):
    rng = random.Random(seed)
    beta = compile_regex(random_regex(rng, AB, depth=2), AB)
    ai = accept_ignoring(beta, [MU])
    nonfin = accept_ignoring_nonfin(beta, [MU])
    for s in strings((A, B, MU), 5):
        in_beta = beta.accepts(strip(s))
        assert ai.accepts(s) == in_beta
        assert nfa_accepts(nonfin, s) == (in_beta and (not s or s[-1] != MU))


# -- replace ----------------------------------------------------------------

def test_replace_examples():
    c, k = 3, 4
    t = replace(compile_regex(sym(c), (c,)), (k,))
    assert transduce_all(t, (c,)) == {(k,)}
    gone = replace(compile_regex(seq(A, B), AB), ())
    assert transduce_all(gone, (A, B)) == {()}
    assert transduce_all(gone, (A,)) == set()


def test_replace_marked_focus():
    # "<1 a b" with later markers ignored non-finally -> X
    m1, m2, x = 7, 8, 10
    head = fsa.Dfsa(2, 0, ({m1: 1}, {}), frozenset([1]))
    body = fsa.concat(head, accept_ignoring_nonfin(compile_regex(seq(A, B), AB), [m1, m2]))
    t = replace(body, (x,))
    assert transduce_all(t, (m1, A, B)) == {(x,)}
    assert transduce_all(t, (m1, A, m2, B)) == {(x,)}
    assert transduce_all(t, (m1, A, B, m2)) == set()


# -- mark_regex -------------------------------------------------------------

def naive_mark(beta, s):
    ends = {q for _, q in _positions(beta, s)}
    out = []
    for j in range(len(s) + 1):
        if j:
            out.append(s[j - 1])
        if j in ends:
            out.append(MU)
    return tuple(out)


def _positions(beta, s):
    return [(p, q) for p in range(len(s) + 1) for q in range(p, len(s) + 1) if beta.accepts(s[p:q])]


def test_mark_regex_examples():
    t = mark_regex(compile_regex(seq(A, B), AB), MU, AB)
    assert transduce_all(t, word("abab")) == {word("ab<ab<")}
    t = mark_regex(compile_regex(sym(A), AB), MU, AB)
    assert transduce_all(t, word("ba")) == {word("ba<")}
    nothing = fsa.Dfsa(1, 0, ({},), frozenset())
    t = mark_regex(nothing, MU, AB)
    for s in strings(AB, 4):
        assert transduce_all(t, s) == {s}


@pytest.mark.parametrize("seed", range(80))
def test_mark_regex_matches_naive(seed):
    rng = random.Random(100 + seed)
    beta = compile_regex(random_regex(rng, AB, depth=2), AB)
    t = mark_regex(beta, MU, AB)
    for s in strings(AB, 5):
        assert transduce_all(t, s) == {naive_mark(beta, s)}


# -- left_context_filter ----------------------------------------------------

def naive_filter(beta, s):
    out = []
    for k, x in enumerate(s):
        if x != MU:
            out.append(x)
            continue
        prefix = strip(s[:k])
        if any(beta.accepts(prefix[t:]) for t in range(len(prefix) + 1)):
            out.append(x)
    return tuple(out)


def test_left_context_filter_examples():
    f = left_context_filter(compile_regex(sym(A), AB), MU, AB)
    assert fsa.apply_dfst(f, word("a<b<")) == word("a<b")
    f = left_context_filter(compile_regex(seq(A, B), AB), MU, AB)
    assert fsa.apply_dfst(f, word("<ab<")) == word("ab<")
    f = left_context_filter(compile_regex(Star(Any()), AB), MU, AB)
    for s in strings((A, B, MU), 4):
        assert fsa.apply_dfst(f, s) == s


@pytest.mark.parametrize("seed", range(80))
def test_left_context_filter_matches_naive(seed):
    rng = random.Random(200 + seed)
    beta = compile_regex(random_regex(rng, AB, depth=2), AB)
    f = left_context_filter(beta, MU, AB)
    for s in strings((A, B, MU), 5):
        assert fsa.apply_dfst(f, s) == naive_filter(beta, s)


# -- whole rulesets ---------------------------------------------------------

def priority_rules(order="ab-first"):
    specs = [(Epsilon(), seq("a", "b"), Epsilon(), ("X",)), (Epsilon(), sym("b"), Epsilon(), ("Y",))]
    if order != "ab-first":
        specs.reverse()
    return make_ruleset("token", specs, alphabet=("a", "b"))


def stage_strings(c, text):
    _, record = apply_staged(c, text.split(), trace=True)
    return [" ".join(s) for _, s in record.snapshots]


def test_two_rule_marking():
    c = compile_ruleset(priority_rules(), complete_with_identity=True)
    snaps = stage_strings(c, "a b")
    assert snaps[0] == "<1 a b"           # after pre_mark 1
    assert snaps[2] == "<1 a <2 b"        # after pre_mark 2
    assert snaps[-1] == "X"


def test_rewrite_machine_examples():
    c = compile_ruleset(priority_rules(), complete_with_identity=True)
    ids = c.symbols.id
    run = lambda names: tuple(c.symbols.name(o) for o in fsa.apply_dfst(c.rewrite, [ids(n) for n in names]))
    assert run(["<1", "a", "<2", "b"]) == ("X",)
    assert run(["<2", "b"]) == ("Y",)
    # rule 3 is the identity default appended for a
    assert run(["<3", "a", "<2", "b"]) == ("a", "Y")


def test_rewrite_identity_defaults_only():
    rs = make_ruleset("token", [(Epsilon(), sym("a"), Epsilon(), ("a",)),
                                (Epsilon(), sym("b"), Epsilon(), ("b",))])
    c = compile_ruleset(rs)
    ids = c.symbols.id
    out = fsa.apply_dfst(c.rewrite, [ids("<1"), ids("a"), ids("<2"), ids("b")])
    assert [c.symbols.name(o) for o in out] == ["a", "b"]


def test_pre_mark_right_context_only_before_c():
    rs = make_ruleset("char", [(Epsilon(), sym("c"), Union((sym("e"), sym("i"))), ("s",))],
                      alphabet=tuple("acen"))
    c = compile_ruleset(rs, complete_with_identity=True)
    snaps = stage_strings(c, "c e n a")
    assert snaps[0] == "<1 c e n a"


def test_rho_epsilon_marks_every_focus():
    rs = make_ruleset("token", [(Epsilon(), sym("a"), Epsilon(), ("X",))], alphabet=("a", "b"))
    c = compile_ruleset(rs, complete_with_identity=True)
    assert stage_strings(c, "a b a")[0] == "<1 a b <1 a"


def test_left_context_keeps_marker_only_after_trigger():
    rs = parse_rule_file((RULESETS / "suspects.rules").read_text())
    c = compile_ruleset(rs, complete_with_identity=True)
    items = [{"name": "that"}, {"name": "suspects"}, {"name": "suspects"}]
    _, record = apply_items(c, items, trace=True)
    after_check_1 = record.snapshots[1][1]
    # the first item "that" encodes as 2 symbols; marker <1 survives only before item 2
    assert after_check_1.count("<1") == 1
    assert after_check_1.index("<1") == 2


def test_spanish_examples():
    rs = parse_rule_file((RULESETS / "spanish_c.rules").read_text())
    c = compile_ruleset(rs, complete_with_identity=True)
    assert apply_staged(c, "a s c i e n d a".split()) == tuple("asienda")
    assert apply_staged(c, "c e n a r".split()) == tuple("senar")
    assert apply_staged(c, "o c h o".split()) == ("o", "ch", "o")
    assert apply_staged(c, "c a s a".split()) == tuple("kasa")


def test_empty_ruleset_identity():
    rs = make_ruleset("token", [], alphabet=("a",))
    c = compile_ruleset(rs, complete_with_identity=True)
    assert apply_staged(c, ["a", "a", "a"]) == ("a", "a", "a")


def test_nontotal_ruleset_rejected():
    with pytest.raises(NonTotalRuleset) as err:
        compile_ruleset(priority_rules())
    assert tuple(err.value.missing) == ("a",)


def test_conditional_default_is_not_total():
    rs = make_ruleset("token", [(sym("b"), sym("a"), Epsilon(), ("X",)),
                                (Epsilon(), sym("b"), Epsilon(), ("b",))])
    with pytest.raises(NonTotalRuleset):
        compile_ruleset(rs)


def test_variable_length_focus_rejected():
    rs = make_ruleset("token", [(Epsilon(), Star(sym("a")), Epsilon(), ("X",))])
    with pytest.raises(FocusNotFixedLength):
        compile_ruleset(rs, complete_with_identity=True)
    rs = make_ruleset("token", [(Epsilon(), Epsilon(), Epsilon(), ("X",))], alphabet=("a",))
    with pytest.raises(CompileError):
        compile_ruleset(rs, complete_with_identity=True)


def test_char_mode_rejects_long_symbols():
    rs = make_ruleset("char", [(Epsilon(), sym("ch"), Epsilon(), ("x",))])
    with pytest.raises(CompileError):
        compile_ruleset(rs, complete_with_identity=True)
