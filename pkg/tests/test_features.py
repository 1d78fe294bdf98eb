import itertools
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from rulefst.features import (FeatureSchema, SchemaError, build_schema, encode_item, expand_item_description,
                              expand_patterns)
from rulefst.pattern import Concat, ItemDesc, Plus, Union, compile_regex
from rulefst.rulefile import parse_rule_file
from rulefst.rules import Bundle, Rule
from rulefst.symbols import SymbolTable

RULESETS = Path(__file__).resolve().parent.parent / "rulesets"


def item_rule(index, focus, left=None, right=None):
    kw = {}
    if left is not None:
        kw["left"] = left
    if right is not None:
        kw["right"] = right
    return Rule(index, focus, rhs=(Bundle.of({"sense": "1"}),), **kw)


def suspects_schema():
    rules = parse_rule_file((RULESETS / "suspects.rules").read_text()).rules
    return build_schema(rules)


def tts_schema():
    d = ItemDesc.of({"pos": {"nn", "nnp"}, "case": {"u"}, "type": {"alpha", "digit"}})
    return build_schema([item_rule(1, d)])


def test_suspects_schema():
    schema = suspects_schema()
    assert schema.features == ("name", "pos")
    assert {"that", "suspects", "terror"} <= set(schema.values["name"])
    assert {"dt", "cd"} <= set(schema.values["pos"])


def test_three_feature_schema():
    assert tts_schema().width == 3


def test_rhs_features_are_not_input():
    schema = build_schema([Rule(1, ItemDesc.of({"f": {"v"}}), rhs=(Bundle.of({"g": "w"}),))])
    assert schema.features == ("f",)


def test_encode_examples():
    symbols = SymbolTable()
    schema = FeatureSchema.from_values({"pos": ["nn", "nnp"], "case": ["u"], "type": ["alpha", "digit"]}, symbols)
    name = lambda ids: tuple(symbols.name(i) for i in ids)
    # features are sorted: case, pos, type
    assert name(encode_item(schema, {"pos": "nn", "case": "u", "type": "alpha"})) == ("case=u", "pos=nn", "type=alpha")
    assert name(encode_item(schema, {"pos": "vb"})) == ("case=#", "pos=#", "type=#")

    symbols = SymbolTable()
    rules = parse_rule_file((RULESETS / "suspects.rules").read_text()).rules
    schema = build_schema(rules, symbols)
    assert [symbols.name(i) for i in encode_item(schema, {"name": "suspects"})] == ["name=suspects", "pos=#"]


def test_expand_description_examples():
    symbols = SymbolTable()
    schema = FeatureSchema.from_values({"pos": ["nn", "nnp"], "case": ["u"], "type": ["alpha", "digit"]}, symbols)
    ids = symbols.id
    d = ItemDesc.of({"pos": {"nn", "nnp"}, "case": {"u"}})
    r = expand_item_description(schema, d)
    dfa = compile_regex(r, schema.alphabet())
    for t in ("alpha", "digit", "#"):
        assert dfa.accepts((ids("case=u"), ids("pos=nn"), ids(f"type={t}")))
    assert not dfa.accepts((ids("case=#"), ids("pos=nn"), ids("type=alpha")))

    plus = compile_regex(expand_patterns(schema, Plus(d)), schema.alphabet())
    one = (ids("case=u"), ids("pos=nnp"), ids("type=digit"))
    assert plus.accepts(one) and plus.accepts(one * 3) and not plus.accepts(())

    anything = compile_regex(expand_item_description(schema, {}), schema.alphabet())
    for item in itertools.product(*(sorted(schema.value_range(f)) for f in schema.features)):
        assert anything.accepts(item)


def test_unknown_value_rejected():
    schema = tts_schema()
    with pytest.raises(SchemaError):
        expand_item_description(schema, {"pos": {"vb"}})
    with pytest.raises(SchemaError):
        expand_item_description(schema, {"color": {"red"}})


def test_matching_equivalence_exhaustive():
    rng = random.Random(42)
    cases = 0
    while cases < 1500:
        k = rng.randint(1, 3)
        features = [f"f{j}" for j in range(k)]
        values = {f: [f"v{j}" for j in range(rng.randint(1, 3))] for f in features}
        symbols = SymbolTable()
        schema = FeatureSchema.from_values(values, symbols)
        desc = {}
        for f in features:
            if rng.random() < 0.6:
                desc[f] = set(rng.sample(values[f], rng.randint(1, len(values[f]))))
        dfa = compile_regex(expand_item_description(schema, desc), schema.alphabet())
        # every item over seen values, missing features and one unseen value
        choices = [values[f] + [None, "zz"] for f in features]
        for combo in itertools.product(*choices):
            item = {f: v for f, v in zip(features, combo) if v is not None}
            direct = all(item.get(f) in desc[f] for f in desc)
            encoded = encode_item(schema, item)
            assert len(encoded) == k
            for f, s in zip(schema.features, encoded):
                assert s in schema.value_range(f)
            assert dfa.accepts(encoded) == direct
            cases += 1


@settings(max_examples=50, deadline=None)
@given(st.randoms(use_true_random=False))
def test_schema_independent_of_rule_order(rnd):
    rules = [
        item_rule(1, ItemDesc.of({"name": {"suspects"}}), left=ItemDesc.of({"name": {"that"}})),
        item_rule(2, ItemDesc.of({"name": {"suspects"}}),
                  left=Union((ItemDesc.of({"pos": {"dt", "cd"}}), ItemDesc.of({"name": {"terror"}})))),
        item_rule(3, Concat((ItemDesc.of({"case": {"u"}}), ItemDesc.of({"type": {"digit"}})))),
    ]
    base_sym, perm_sym = SymbolTable(), SymbolTable()
    base = build_schema(rules, base_sym)
    shuffled = rules[:]
    rnd.shuffle(shuffled)
    perm = build_schema(shuffled, perm_sym)
    assert base == perm
    assert base_sym == perm_sym
