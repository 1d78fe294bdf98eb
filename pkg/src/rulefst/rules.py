"""Source-level rules ``left / focus / right -> rhs``."""

from __future__ import annotations

from dataclasses import dataclass

from .pattern import Epsilon, Regex

MODES = ("char", "token", "item")


@dataclass(frozen=True)
class Bundle:
    """Feature assignments set on one item by an item-mode rule."""
    assignments: tuple = ()  # sorted ((feature, value), ...)

    @classmethod
    def of(cls, pairs):
        pairs = tuple(sorted(dict(pairs).items()))
        return cls(pairs)

    @property
    def name(self) -> str:
        return "[" + ",".join(f"{f}={v}" for f, v in self.assignments) + "]"

    @classmethod
    def from_name(cls, name: str) -> "Bundle":
        if not (name.startswith("[") and name.endswith("]")):
            raise ValueError(f"not a bundle symbol: {name!r}")
        body = name[1:-1]
        if not body:
            return cls()
        return cls.of(part.split("=", 1) for part in body.split(","))

    def __str__(self):
        return "[" + " ".join(f"{f}={v}" for f, v in self.assignments) + "]"


@dataclass(frozen=True)
class Rule:
    """One rewrite rule.  ``index`` is the 1-based priority (lower wins)."""
    index: int
    focus: Regex
    left: Regex = Epsilon()
    right: Regex = Epsilon()
    rhs: tuple = ()
    line: int = 0
    col: int = 0

    def where(self) -> str:
        return f"rule {self.index}" + (f" (line {self.line}, column {self.col})" if self.line else "")


@dataclass(frozen=True)
class RuleSet:
    mode: str = "token"
    rules: tuple = ()
    alphabet: tuple = ()  # extra input symbols declared with %alphabet

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        for k, rule in enumerate(self.rules, 1):
            if rule.index != k:
                raise ValueError(f"rule indices must be dense from 1, got {rule.index} at {k}")

    def __len__(self):
        return len(self.rules)


def make_ruleset(mode, specs, alphabet=()) -> RuleSet:
    """Build a RuleSet from ``(left, focus, right, rhs)`` tuples in priority order."""
    rules = tuple(Rule(i, focus, left, right, tuple(rhs))
                  for i, (left, focus, right, rhs) in enumerate(specs, 1))
    return RuleSet(mode, rules, tuple(alphabet))
