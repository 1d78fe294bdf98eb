"""Finite encoding of feature-structure items.

Only the features and values that occur in rule patterns matter for
matching.  Each item becomes a K-tuple of value symbols, one per seen
feature, with a per-feature ``#`` symbol standing for any unseen or missing
value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .pattern import Any, Concat, ItemDesc, Leaf, Regex, map_leaves, walk
from .symbols import INPUT, SymbolTable

UNSEEN = "#"


class SchemaError(ValueError):
    pass


def value_symbol(feature: str, value: str) -> str:
    return f"{feature}={value}"


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple                 # sorted feature names
    values: Mapping                 # feature -> sorted tuple of seen values
    value_ids: Mapping              # feature -> {value: symbol id}
    unseen_ids: Mapping             # feature -> id of that feature's '#'

    @property
    def width(self) -> int:
        return len(self.features)

    def value_range(self, feature: str) -> frozenset:
        return frozenset(self.value_ids[feature].values()) | {self.unseen_ids[feature]}

    def alphabet(self) -> frozenset:
        ids = set()
        for f in self.features:
            ids |= self.value_range(f)
        return frozenset(ids)

    @classmethod
    def from_values(cls, values: Mapping[str, Iterable[str]], symbols: SymbolTable | None = None):
        """Register ``f=v`` and ``f=#`` input symbols in a deterministic order."""
        symbols = SymbolTable() if symbols is None else symbols
        features = tuple(sorted(values))
        if not features:
            raise SchemaError("item mode needs at least one feature in the rule patterns")
        vals, vids, unseen = {}, {}, {}
        for f in features:
            seen = tuple(sorted(set(values[f])))
            if UNSEEN in seen:
                raise SchemaError(f"'#' is reserved and cannot be a value of {f!r}")
            vals[f] = seen
            vids[f] = {v: symbols.add(value_symbol(f, v), INPUT) for v in seen}
            unseen[f] = symbols.add(value_symbol(f, UNSEEN), INPUT)
        return cls(features, vals, vids, unseen)


def collect_feature_values(patterns: Iterable[Regex]) -> dict:
    seen = {}
    for r in patterns:
        for node in walk(r):
            if isinstance(node, ItemDesc):
                for f, vs in node.constraints:
                    seen.setdefault(f, set()).update(vs)
    return seen


def build_schema(rules, symbols: SymbolTable | None = None) -> FeatureSchema:
    """Schema of the features/values mentioned in any context or focus.

    Right-hand sides are not consulted: they only feed the output alphabet.
    """
    patterns = []
    for rule in rules:
        patterns.extend((rule.left, rule.focus, rule.right))
    return FeatureSchema.from_values(collect_feature_values(patterns), symbols)


def encode_item(schema: FeatureSchema, item: Mapping[str, str]) -> tuple:
    out = []
    for f in schema.features:
        v = item.get(f)
        out.append(schema.value_ids[f].get(v, schema.unseen_ids[f]) if v is not None
                   else schema.unseen_ids[f])
    return tuple(out)


def encode_items(schema: FeatureSchema, items: Iterable[Mapping[str, str]]) -> tuple:
    out = []
    for item in items:
        out.extend(encode_item(schema, item))
    return tuple(out)


def expand_item_description(schema: FeatureSchema, d: ItemDesc | Mapping) -> Regex:
    """``[U_1 ... U_K]`` as a concatenation of per-feature symbol classes."""
    constraints = d.as_dict() if isinstance(d, ItemDesc) else {f: set(v) for f, v in d.items()}
    for f, vs in constraints.items():
        if f not in schema.value_ids:
            raise SchemaError(f"unknown feature {f!r} in item description")
        for v in vs:
            if v not in schema.value_ids[f]:
                raise SchemaError(f"unknown value {v!r} for feature {f!r}")
    leaves = []
    for f in schema.features:
        if f in constraints:
            leaves.append(Leaf(frozenset(schema.value_ids[f][v] for v in constraints[f])))
        else:
            leaves.append(Leaf(schema.value_range(f)))
    return Concat(tuple(leaves))


def expand_patterns(schema: FeatureSchema, r: Regex) -> Regex:
    """Replace item descriptions (and the ``.`` wildcard, meaning any item) by symbol classes."""
    def leaf(node):
        raise SchemaError(f"bare symbol leaf {node!r} in an item-mode pattern")

    return map_leaves(
        r, leaf,
        item=lambda d: expand_item_description(schema, d),
        any_=lambda _: expand_item_description(schema, {}),
    )
